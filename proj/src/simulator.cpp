#include "oma/simulator.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "oma/errors.hpp"

namespace oma {

namespace {
constexpr double kPi = std::numbers::pi;
}

void validate(const TimeHistory& th, int n_nodes) {
    if (th.n_samples() < 2) throw InvalidArgument("time history needs at least 2 samples");
    if (!(th.sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
    if (!th.samples.allFinite()) throw InvalidArgument("time history contains non-finite values");
    if (static_cast<int>(th.channel_nodes.size()) != th.n_channels()) {
        throw InvalidArgument("channel_nodes size does not match channel count");
    }
    std::vector<bool> seen(n_nodes, false);
    for (int n : th.channel_nodes) {
        if (n < 0 || n >= n_nodes) throw InvalidArgument("channel node out of range");
        if (seen[n]) throw InvalidArgument("duplicate channel node");
        seen[n] = true;
    }
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    // FNV-1a over the tag
    std::uint64_t h = 14695981039346656037ull;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    // one SplitMix64 scramble of master ^ hash
    std::uint64_t z = master ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double GaussianSampler::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller, trigonometric form: exactly two uniforms per pair.
    const double inv = 1.0 / (static_cast<double>(engine_.max()) + 1.0);
    double u1 = (static_cast<double>(engine_()) + 0.5) * inv;
    double u2 = (static_cast<double>(engine_()) + 0.5) * inv;
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * kPi * u2);
    has_cached_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

TimeHistory generate_excitation(const ExcitationSpec& spec, const SystemMatrices& sys,
                                double sample_rate_hz, double duration_s) {
    if (!(spec.amplitude_rms > 0.0)) throw InvalidArgument("amplitude_rms must be positive");
    if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
    const long n = std::lround(duration_s * sample_rate_hz);
    if (n < (1L << 12)) {
        throw InvalidArgument("duration too short: need at least 2^12 samples, got " +
                              std::to_string(n));
    }

    std::vector<int> nodes;
    if (spec.node.has_value()) {
        const auto free_nodes = sys.translation_nodes();
        if (std::find(free_nodes.begin(), free_nodes.end(), *spec.node) == free_nodes.end()) {
            throw InvalidArgument("excitation node " + std::to_string(*spec.node + 1) +
                                  " has no free translation");
        }
        nodes = {*spec.node};
    } else {
        nodes = sys.translation_nodes();
    }
    if (nodes.empty()) throw InvalidArgument("empty excitation target set");

    TimeHistory th;
    th.sample_rate_hz = sample_rate_hz;
    th.kind = SignalKind::Force;
    th.channel_nodes = nodes;
    th.seed = spec.seed;
    th.samples.resize(n, static_cast<int>(nodes.size()));
    for (int c = 0; c < th.n_channels(); ++c) {
        GaussianSampler g(derive_seed(spec.seed, "excitation-channel-" + std::to_string(c)));
        for (long i = 0; i < n; ++i) {
            th.samples(i, c) = spec.amplitude_rms * g.next();
        }
    }
    return th;
}

int recommended_substeps(double f_max_hz, double sample_rate_hz, double max_freq_error_hz) {
    if (!(f_max_hz > 0.0) || !(sample_rate_hz > 0.0) || !(max_freq_error_hz > 0.0)) {
        throw InvalidArgument("recommended_substeps needs positive arguments");
    }
    // (w h)^2 / 12 <= max_freq_error / f_max
    const double h_max = std::sqrt(12.0 * max_freq_error_hz / f_max_hz) / (2.0 * kPi * f_max_hz);
    return std::max(1, static_cast<int>(std::ceil(1.0 / (h_max * sample_rate_hz))));
}

TimeHistory newmark_integrate(const SystemMatrices& sys, const Eigen::MatrixXd& damping,
                              const TimeHistory& forces, const NewmarkOptions& opts,
                              const InitialState* initial) {
    const int n = sys.n_dofs();
    if (forces.kind != SignalKind::Force) throw InvalidArgument("forces record must hold forces");
    if (damping.rows() != n || damping.cols() != n) {
        throw InvalidArgument("damping matrix size mismatch");
    }
    if (!damping.isApprox(damping.transpose(), 1e-10)) {
        throw InvalidArgument("damping matrix must be symmetric");
    }
    if (opts.substeps < 1) throw InvalidArgument("substeps must be >= 1");
    validate(forces, sys.n_nodes);

    // map force channels onto free translational DOFs
    std::vector<int> force_dof(forces.n_channels(), -1);
    for (int c = 0; c < forces.n_channels(); ++c) {
        for (int i = 0; i < n; ++i) {
            if (sys.dof_map[i].kind == DofKind::Translation &&
                sys.dof_map[i].node == forces.channel_nodes[c]) {
                force_dof[c] = i;
                break;
            }
        }
        if (force_dof[c] < 0) {
            throw InvalidArgument("force channel node " +
                                  std::to_string(forces.channel_nodes[c] + 1) +
                                  " has no free translation DOF");
        }
    }

    const int K = opts.substeps;
    const double dt = 1.0 / (forces.sample_rate_hz * K);
    constexpr double gamma = 0.5;
    constexpr double beta = 0.25;

    const double a0 = 1.0 / (beta * dt * dt);
    const double a1 = 1.0 / (beta * dt);
    const double a2 = 1.0 / (2.0 * beta) - 1.0;
    const double b0 = gamma / (beta * dt);
    const double b1 = gamma / beta - 1.0;
    const double b2 = dt * (gamma / (2.0 * beta) - 1.0);

    const Eigen::MatrixXd k_eff = a0 * sys.mass + b0 * damping + sys.stiffness;
    Eigen::LLT<Eigen::MatrixXd> k_eff_llt(k_eff);
    if (k_eff_llt.info() != Eigen::Success) {
        throw NumericalFailure("effective stiffness factorization failed");
    }
    Eigen::LLT<Eigen::MatrixXd> mass_llt(sys.mass);
    if (mass_llt.info() != Eigen::Success) {
        throw NumericalFailure("mass matrix is not positive definite");
    }

    // rhs = F + P [u; v; a] with the three blocks precombined
    Eigen::MatrixXd P(n, 3 * n);
    P.block(0, 0, n, n) = a0 * sys.mass + b0 * damping;
    P.block(0, n, n, n) = a1 * sys.mass + b1 * damping;
    P.block(0, 2 * n, n, n) = a2 * sys.mass + b2 * damping;

    Eigen::VectorXd state(3 * n);
    auto u = state.segment(0, n);
    auto v = state.segment(n, n);
    auto a = state.segment(2 * n, n);
    u.setZero();
    v.setZero();
    if (initial != nullptr) {
        if (initial->displacement.size() != n || initial->velocity.size() != n) {
            throw InvalidArgument("initial state size mismatch");
        }
        u = initial->displacement;
        v = initial->velocity;
    }

    const long n_out = forces.n_samples();
    const auto trans = sys.translation_dofs();
    const int m = static_cast<int>(trans.size());

    TimeHistory out;
    out.sample_rate_hz = forces.sample_rate_hz;
    out.kind = SignalKind::Acceleration;
    out.channel_nodes = sys.translation_nodes();
    out.seed = forces.seed;
    out.samples.resize(n_out, m);

    Eigen::VectorXd f_full = Eigen::VectorXd::Zero(n);
    auto load_force = [&](long j) {
        for (int c = 0; c < forces.n_channels(); ++c) f_full(force_dof[c]) = forces.samples(j, c);
    };

    load_force(0);
    a = mass_llt.solve(f_full - damping * v - sys.stiffness * u);

    const bool filter = (K > 1) && opts.antialias;
    // two cascaded length-K running means over the internal samples
    Eigen::MatrixXd ring1, ring2;
    Eigen::VectorXd sum1, sum2, stage1;
    int ring_pos = 0;
    if (filter) {
        ring1 = Eigen::MatrixXd::Zero(m, K);
        ring2 = Eigen::MatrixXd::Zero(m, K);
        sum1 = Eigen::VectorXd::Zero(m);
        sum2 = Eigen::VectorXd::Zero(m);
        stage1 = Eigen::VectorXd::Zero(m);
    }

    Eigen::VectorXd acc_tr(m), rhs(n), u_new(n), a_new(n);

    auto record_channels = [&](Eigen::VectorXd& dst) {
        for (int c = 0; c < m; ++c) dst(c) = a(trans[c]);
    };

    auto push_filter = [&](const Eigen::VectorXd& x) {
        sum1 += x - ring1.col(ring_pos);
        ring1.col(ring_pos) = x;
        stage1 = sum1 / K;
        sum2 += stage1 - ring2.col(ring_pos);
        ring2.col(ring_pos) = stage1;
        ring_pos = (ring_pos + 1) % K;
    };

    // sample 0 is the initial acceleration
    record_channels(acc_tr);
    if (filter) {
        push_filter(acc_tr);
        out.samples.row(0) = (sum2 / K).transpose();
    } else {
        out.samples.row(0) = acc_tr.transpose();
    }

    for (long j = 1; j < n_out; ++j) {
        load_force(j - 1);  // force held over [t_{j-1}, t_j)
        for (int s = 0; s < K; ++s) {
            rhs.noalias() = f_full;
            rhs.noalias() += P * state;
            u_new = k_eff_llt.solve(rhs);
            a_new = a0 * (u_new - u) - a1 * v - a2 * a;
            v += dt * ((1.0 - gamma) * a + gamma * a_new);
            u = u_new;
            a = a_new;
            if (filter) {
                record_channels(acc_tr);
                push_filter(acc_tr);
            }
        }
        // acceleration right after t_j uses the next force value
        load_force(j);
        a = mass_llt.solve(f_full - damping * v - sys.stiffness * u);
        if (filter) {
            out.samples.row(j) = (sum2 / K).transpose();
        } else {
            record_channels(acc_tr);
            out.samples.row(j) = acc_tr.transpose();
        }
    }
    return out;
}

TimeHistory add_noise(const TimeHistory& signal, double snr_db, std::uint64_t seed) {
    if (signal.n_samples() < 2) throw InvalidArgument("degenerate signal");
    if (std::isinf(snr_db)) return signal;

    TimeHistory out = signal;
    const double ratio = std::pow(10.0, -snr_db / 20.0);
    for (int c = 0; c < signal.n_channels(); ++c) {
        const double rms = std::sqrt(signal.samples.col(c).squaredNorm() / signal.n_samples());
        const double sigma = rms * ratio;
        GaussianSampler g(derive_seed(seed, "noise-channel-" + std::to_string(c)));
        for (long i = 0; i < signal.n_samples(); ++i) {
            out.samples(i, c) += sigma * g.next();
        }
    }
    return out;
}

}  // namespace oma
