#include "oma/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "oma/errors.hpp"

namespace oma {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::VectorXd make_window(Window w, int n) {
    Eigen::VectorXd win(n);
    switch (w) {
        case Window::Hann:
            // periodic form
            for (int i = 0; i < n; ++i) win(i) = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
            break;
        case Window::Rectangular:
            win.setOnes();
            break;
    }
    return win;
}

struct SegmentPlan {
    int hop = 0;
    int count = 0;
};

SegmentPlan plan_segments(const SpectralConfig& cfg, long n_samples) {
    validate(cfg);
    if (n_samples < cfg.segment_length) {
        throw InvalidArgument("signal too short for spectral estimation: need at least " +
                              std::to_string(cfg.segment_length) + " samples, got " +
                              std::to_string(n_samples));
    }
    SegmentPlan p;
    p.hop = std::max(1, static_cast<int>(std::lround(cfg.segment_length *
                                                     (1.0 - cfg.overlap_fraction))));
    p.count = 1 + static_cast<int>((n_samples - cfg.segment_length) / p.hop);
    if (p.count < 8) {
        const long need = cfg.segment_length + 7L * p.hop;
        throw InvalidArgument("too few Welch segments (" + std::to_string(p.count) +
                              " < 8): need at least " + std::to_string(need) + " samples");
    }
    return p;
}

/// Windowed, detrended segment spectra for all channels: out[c][k].
void segment_spectra(const Eigen::MatrixXd& samples, long start, const Eigen::VectorXd& win,
                     Detrend detrend, std::vector<std::vector<std::complex<double>>>& out) {
    const int nseg = static_cast<int>(win.size());
    const int m = static_cast<int>(samples.cols());
    for (int c = 0; c < m; ++c) {
        auto& buf = out[c];
        buf.resize(nseg);
        double mean = 0.0;
        if (detrend == Detrend::Mean) {
            mean = samples.col(c).segment(start, nseg).mean();
        }
        for (int i = 0; i < nseg; ++i) {
            buf[i] = {(samples(start + i, c) - mean) * win(i), 0.0};
        }
        detail::fft_radix2(buf);
    }
}

}  // namespace

namespace detail {

void fft_radix2(std::vector<std::complex<double>>& data) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw InvalidArgument("fft size must be a power of two");
    }
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto even = data[i + k];
                const auto odd = data[i + k + len / 2] * w;
                data[i + k] = even + odd;
                data[i + k + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
}

}  // namespace detail

void validate(const SpectralConfig& cfg) {
    if (!is_power_of_two(cfg.segment_length) || cfg.segment_length < 64) {
        throw InvalidArgument("segment_length must be a power of two >= 64");
    }
    if (cfg.overlap_fraction < 0.0 || cfg.overlap_fraction >= 1.0) {
        throw InvalidArgument("overlap_fraction must lie in [0, 1)");
    }
}

int segment_count(const SpectralConfig& cfg, long n_samples) {
    return plan_segments(cfg, n_samples).count;
}

CrossSpectralMatrix welch_cross_psd(const TimeHistory& y, const SpectralConfig& cfg) {
    const auto plan = plan_segments(cfg, y.n_samples());
    const int nseg = cfg.segment_length;
    const int m = y.n_channels();
    const int n_lines = nseg / 2 + 1;
    const Eigen::VectorXd win = make_window(cfg.window, nseg);
    const double win_power = win.squaredNorm() / nseg;

    CrossSpectralMatrix g;
    g.channel_nodes = y.channel_nodes;
    g.frequencies_hz.resize(n_lines);
    for (int k = 0; k < n_lines; ++k) {
        g.frequencies_hz[k] = k * y.sample_rate_hz / nseg;
    }
    g.matrices.assign(n_lines, Eigen::MatrixXcd::Zero(m, m));

    std::vector<std::vector<std::complex<double>>> spec(m);
    for (int s = 0; s < plan.count; ++s) {
        segment_spectra(y.samples, static_cast<long>(s) * plan.hop, win, cfg.detrend, spec);
        for (int k = 0; k < n_lines; ++k) {
            auto& gk = g.matrices[k];
            for (int i = 0; i < m; ++i) {
                const auto xi = spec[i][k];
                gk(i, i) += std::norm(xi);
                for (int j = i + 1; j < m; ++j) {
                    gk(i, j) += xi * std::conj(spec[j][k]);
                }
            }
        }
    }

    // one-sided scaling; DC and Nyquist keep the two-sided factor
    const double base = 2.0 / (y.sample_rate_hz * nseg * win_power * plan.count);
    for (int k = 0; k < n_lines; ++k) {
        const double scale = (k == 0 || k == n_lines - 1) ? base / 2.0 : base;
        auto& gk = g.matrices[k];
        gk *= scale;
        // mirror the upper triangle so each line is Hermitian by construction
        for (int i = 0; i < m; ++i) {
            gk(i, i) = std::complex<double>(gk(i, i).real(), 0.0);
            for (int j = i + 1; j < m; ++j) {
                gk(j, i) = std::conj(gk(i, j));
            }
        }
    }
    return g;
}

Anpsd anpsd(const CrossSpectralMatrix& g) {
    const int m = g.n_channels();
    const int n = g.n_lines();
    if (m == 0 || n == 0) throw InvalidArgument("empty cross-spectral matrix");

    Anpsd out;
    out.frequencies_hz = g.frequencies_hz;
    out.per_channel_npsd.resize(n, m);
    for (int c = 0; c < m; ++c) {
        double total = 0.0;
        for (int k = 0; k < n; ++k) total += g.matrices[k](c, c).real();
        if (!(total > 0.0)) {
            const int node = c < static_cast<int>(g.channel_nodes.size())
                                 ? g.channel_nodes[c] + 1
                                 : c + 1;
            throw InvalidArgument("channel at node " + std::to_string(node) +
                                  " has zero total power");
        }
        for (int k = 0; k < n; ++k) {
            out.per_channel_npsd(k, c) = g.matrices[k](c, c).real() / total;
        }
    }
    out.values = out.per_channel_npsd.rowwise().mean();
    return out;
}

FrfSet frf_h1(const TimeHistory& x, const TimeHistory& y, const SpectralConfig& cfg) {
    if (x.kind != SignalKind::Force) throw InvalidArgument("frf reference must be a force record");
    if (x.n_channels() != 1) {
        throw InvalidArgument("frf_h1 expects a single reference input channel, got " +
                              std::to_string(x.n_channels()));
    }
    if (x.sample_rate_hz != y.sample_rate_hz) {
        throw InvalidArgument("frf input and output sample rates differ");
    }
    if (x.n_samples() != y.n_samples()) {
        throw InvalidArgument("frf input and output lengths differ");
    }

    // stack [x | y] and reuse the cross-spectral machinery
    TimeHistory both = y;
    both.samples.resize(y.n_samples(), y.n_channels() + 1);
    both.samples.col(0) = x.samples.col(0);
    both.samples.rightCols(y.n_channels()) = y.samples;
    both.channel_nodes.assign(static_cast<std::size_t>(y.n_channels()) + 1, 0);
    // node bookkeeping is irrelevant here; bypass duplicate checks
    for (int c = 0; c <= y.n_channels(); ++c) both.channel_nodes[c] = c;

    const auto g = welch_cross_psd(both, cfg);
    const int n = g.n_lines();
    const int m = y.n_channels();

    FrfSet out;
    out.frequencies_hz = g.frequencies_hz;
    out.channel_nodes = y.channel_nodes;
    out.frf.resize(n, m);
    out.coherence.resize(n, m);
    out.line_valid.assign(n, 1);
    for (int k = 0; k < n; ++k) {
        const auto& gk = g.matrices[k];
        const double gxx = gk(0, 0).real();
        if (!(gxx > 0.0)) {
            out.line_valid[k] = 0;
            out.frf.row(k).setZero();
            out.coherence.row(k).setZero();
            continue;
        }
        for (int c = 0; c < m; ++c) {
            const auto gyx = gk(c + 1, 0);
            out.frf(k, c) = gyx / gxx;
            const double gyy = gk(c + 1, c + 1).real();
            out.coherence(k, c) =
                gyy > 0.0 ? std::min(1.0, std::norm(gyx) / (gxx * gyy)) : 0.0;
        }
    }
    return out;
}

Eigen::VectorXd welch_auto_psd(const Eigen::VectorXd& samples, double sample_rate_hz,
                               const SpectralConfig& cfg, std::vector<double>* frequencies_hz) {
    TimeHistory th;
    th.sample_rate_hz = sample_rate_hz;
    th.kind = SignalKind::Acceleration;
    th.channel_nodes = {0};
    th.samples = samples;
    const auto g = welch_cross_psd(th, cfg);
    Eigen::VectorXd psd(g.n_lines());
    for (int k = 0; k < g.n_lines(); ++k) psd(k) = g.matrices[k](0, 0).real();
    if (frequencies_hz != nullptr) *frequencies_hz = g.frequencies_hz;
    return psd;
}

}  // namespace oma
