#include "oma/identify.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "oma/beam_model.hpp"
#include "oma/errors.hpp"

namespace oma {

const char* method_name(Method m) {
    switch (m) {
        case Method::PP: return "PP";
        case Method::FDD: return "FDD";
        case Method::FRF: return "FRF";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "pp" || name == "PP") return Method::PP;
    if (name == "fdd" || name == "FDD") return Method::FDD;
    if (name == "frf" || name == "FRF") return Method::FRF;
    throw InvalidArgument("unknown identification method: " + name);
}

SvSpectrum sv_spectrum(const CrossSpectralMatrix& g) {
    const int n = g.n_lines();
    const int m = g.n_channels();
    if (n == 0 || m == 0) throw InvalidArgument("empty cross-spectral matrix");

    SvSpectrum out;
    out.frequencies_hz = g.frequencies_hz;
    out.singular_values.resize(n, m);
    out.first_vectors.resize(n, m);
    for (int k = 0; k < n; ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g.matrices[k],
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        const Eigen::MatrixXcd rec = svd.matrixU() * s.asDiagonal() *
                                     svd.matrixU().adjoint();
        const double ref = g.matrices[k].norm();
        if (ref > 0.0 && (rec - g.matrices[k]).norm() > 1e-8 * ref) {
            // Hermitian PSD lines must reconstruct as U S U^H; flag otherwise
            out.failed_lines.push_back(k);
        }
        out.singular_values.row(k) = s.transpose();
        Eigen::VectorXcd u1 = svd.matrixU().col(0);
        out.first_vectors.row(k) = (u1 / u1.norm()).transpose();
    }
    return out;
}

namespace {

struct Band {
    int lo = 0;
    int hi = 0;  // inclusive
};

Band resolve_band(const std::vector<double>& freqs, const PeakConfig& cfg) {
    if (freqs.size() < 3) throw InvalidArgument("frequency grid too short");
    const double nyquist = freqs.back();
    const double hi_hz = cfg.band_hi_hz > 0.0 ? cfg.band_hi_hz : 0.9 * nyquist;
    if (!(hi_hz > cfg.band_lo_hz)) throw InvalidArgument("empty peak-search band");
    Band b;
    const double df = freqs[1] - freqs[0];
    b.lo = std::max(1, static_cast<int>(std::ceil(cfg.band_lo_hz / df)));
    b.hi = std::min(static_cast<int>(freqs.size()) - 2,
                    static_cast<int>(std::floor(hi_hz / df)));
    if (b.hi <= b.lo) throw InvalidArgument("peak-search band holds no interior grid line");
    return b;
}

/// scipy-style topographic prominence within the band.
double prominence_at(const Eigen::VectorXd& c, int p, const Band& band) {
    double left_min = c(p);
    for (int i = p - 1; i >= band.lo; --i) {
        if (c(i) > c(p)) break;
        left_min = std::min(left_min, c(i));
    }
    double right_min = c(p);
    for (int i = p + 1; i <= band.hi; ++i) {
        if (c(i) > c(p)) break;
        right_min = std::min(right_min, c(i));
    }
    return c(p) - std::max(left_min, right_min);
}

int refine_peak_bin(const Eigen::VectorXd& curve, int p, const Band& band) {
    // initial half-width from a raw half-power walk
    const double v = curve(p);
    auto walk = [&](int dir) -> int {
        int i = p;
        while (i + dir >= band.lo && i + dir <= band.hi) {
            i += dir;
            if (curve(i) > v) return -1;
            if (curve(i) <= 0.5 * v) return std::abs(i - p);
        }
        return -1;
    };
    const int wl = walk(-1);
    const int wr = walk(+1);
    int half = 2;
    if (wl > 0 && wr > 0) half = std::max(2, (wl + wr) / 2);
    else if (wl > 0) half = std::max(2, wl);
    else if (wr > 0) half = std::max(2, wr);

    const int a = std::max(band.lo, p - half);
    const int b = std::min(band.hi, p + half);
    if (b - a < 2) return p;

    // least-squares parabola through log(curve)
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
    for (int i = a; i <= b; ++i) {
        const double x = i - p;
        const double y = std::log(std::max(curve(i), 1e-300));
        const double x2 = x * x;
        s0 += 1; s1 += x; s2 += x2; s3 += x2 * x; s4 += x2 * x2;
        t0 += y; t1 += x * y; t2 += x2 * y;
    }
    Eigen::Matrix3d mat;
    mat << s4, s3, s2, s3, s2, s1, s2, s1, s0;
    Eigen::Vector3d rhs(t2, t1, t0);
    const Eigen::Vector3d coef = mat.fullPivLu().solve(rhs);
    if (!(coef(0) < 0.0)) return p;
    const double vertex = -coef(1) / (2.0 * coef(0));
    if (vertex < a - p || vertex > b - p) return p;
    const int refined = p + static_cast<int>(std::lround(vertex));
    return std::clamp(refined, band.lo, band.hi);
}

}  // namespace

PeakSet find_peaks(const std::vector<double>& frequencies_hz, const Eigen::VectorXd& curve,
                   const PeakConfig& cfg) {
    if (static_cast<int>(frequencies_hz.size()) != curve.size()) {
        throw InvalidArgument("curve and frequency grid sizes differ");
    }
    const Band band = resolve_band(frequencies_hz, cfg);

    // local maxima; plateaus count once at their leftmost bin
    std::vector<Peak> candidates;
    int i = band.lo + 1;
    while (i < band.hi) {
        if (curve(i) > curve(i - 1)) {
            int j = i;
            while (j + 1 <= band.hi && curve(j + 1) == curve(j)) ++j;
            if (j + 1 <= band.hi && curve(j + 1) < curve(j)) {
                Peak pk;
                pk.bin = i;
                pk.frequency_hz = frequencies_hz[i];
                pk.value = curve(i);
                pk.prominence = prominence_at(curve, i, band);
                candidates.push_back(pk);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }

    double band_max = 0.0;
    for (int k = band.lo; k <= band.hi; ++k) band_max = std::max(band_max, curve(k));
    const double threshold = cfg.min_prominence_rel * band_max;
    std::erase_if(candidates, [&](const Peak& p) { return p.prominence < threshold; });

    // greedy separation filter, most prominent first; ties resolved by value
    // then by lower bin so the result is deterministic
    std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.prominence != b.prominence) return a.prominence > b.prominence;
        if (a.value != b.value) return a.value > b.value;
        return a.bin < b.bin;
    });
    std::vector<Peak> accepted;
    for (const auto& c : candidates) {
        bool ok = true;
        for (const auto& acc : accepted) {
            if (std::abs(c.frequency_hz - acc.frequency_hz) < cfg.min_separation_hz) {
                ok = false;
                break;
            }
        }
        if (ok) accepted.push_back(c);
    }
    if (cfg.expected_modes > 0 && static_cast<int>(accepted.size()) > cfg.expected_modes) {
        accepted.resize(cfg.expected_modes);
    }

    if (cfg.refine_location) {
        for (auto& p : accepted) {
            p.bin = refine_peak_bin(curve, p.bin, band);
            p.frequency_hz = frequencies_hz[p.bin];
            p.value = curve(p.bin);
        }
    }

    std::sort(accepted.begin(), accepted.end(),
              [](const Peak& a, const Peak& b) { return a.bin < b.bin; });
    // refinement must not merge peaks; keep the first of any coincident pair
    accepted.erase(std::unique(accepted.begin(), accepted.end(),
                               [](const Peak& a, const Peak& b) { return a.bin == b.bin; }),
                   accepted.end());
    return accepted;
}

Eigen::VectorXd phase_aligned_real(const Eigen::VectorXcd& v, double* imag_fraction) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw InvalidArgument("cannot align a zero vector");
    std::complex<double> sum(0.0, 0.0);
    for (int i = 0; i < v.size(); ++i) sum += v(i) * v(i);
    const double theta = 0.5 * std::arg(sum);
    const std::complex<double> rot(std::cos(-theta), std::sin(-theta));
    Eigen::VectorXd re(v.size());
    double imag_sq = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        const auto z = v(i) * rot;
        re(i) = z.real();
        imag_sq += z.imag() * z.imag();
    }
    if (imag_fraction != nullptr) *imag_fraction = std::sqrt(imag_sq) / norm;
    return re;
}

double half_power_damping(const std::vector<double>& frequencies_hz,
                          const Eigen::VectorXd& auto_spectrum, int peak_bin) {
    const int n = auto_spectrum.size();
    if (peak_bin < 0 || peak_bin >= n) throw InvalidArgument("peak bin out of range");
    const double v = auto_spectrum(peak_bin);
    if (!(v > 0.0)) throw InvalidArgument("peak value must be positive");
    const double half = 0.5 * v;

    auto cross = [&](int dir) -> double {
        int i = peak_bin;
        while (true) {
            const int j = i + dir;
            if (j < 0 || j >= n) {
                throw BandwidthUnresolved("half-power crossing hits the grid edge");
            }
            if (auto_spectrum(j) > v) {
                throw BandwidthUnresolved("curve rises above the peak before the crossing");
            }
            if (auto_spectrum(j) <= half) {
                const double f0 = frequencies_hz[i];
                const double f1 = frequencies_hz[j];
                const double c0 = auto_spectrum(i);
                const double c1 = auto_spectrum(j);
                return f0 + (half - c0) * (f1 - f0) / (c1 - c0);
            }
            i = j;
        }
    };
    const double f1 = cross(-1);
    const double f2 = cross(+1);
    return (f2 - f1) / (2.0 * frequencies_hz[peak_bin]);
}

std::optional<double> refined_half_power_damping(const std::vector<double>& frequencies_hz,
                                                 const Eigen::VectorXd& auto_spectrum,
                                                 double f_guess_hz, double search_halfwidth_hz) {
    const int n = auto_spectrum.size();
    if (n < 8 || frequencies_hz.size() != static_cast<std::size_t>(n)) {
        throw InvalidArgument("auto spectrum too short");
    }
    const double df = frequencies_hz[1] - frequencies_hz[0];
    int lo = std::max(1, static_cast<int>(std::ceil((f_guess_hz - search_halfwidth_hz) / df)));
    int hi = std::min(n - 2, static_cast<int>(std::floor((f_guess_hz + search_halfwidth_hz) / df)));
    if (hi - lo < 4) return std::nullopt;

    // integral bandwidth of a Lorentzian line: B = (2/pi) * power / peak,
    // summed over the local window above 10% of a lightly smoothed peak
    int p0 = lo;
    for (int i = lo; i <= hi; ++i) {
        if (auto_spectrum(i) > auto_spectrum(p0)) p0 = i;
    }
    auto smooth3 = [&](int i) {
        const int a = std::max(0, i - 1), b = std::min(n - 1, i + 1);
        double s = 0.0;
        for (int k = a; k <= b; ++k) s += auto_spectrum(k);
        return s / (b - a + 1);
    };
    const double v0 = smooth3(p0);
    if (!(v0 > 0.0)) return std::nullopt;
    double power = 0.0;
    for (int i = lo; i <= hi; ++i) {
        if (auto_spectrum(i) >= 0.1 * v0) power += auto_spectrum(i) * df;
    }
    double b_int =
        std::clamp(2.0 / std::numbers::pi * power / v0, 0.5 * df, 2.0 * search_halfwidth_hz);

    int w = std::clamp(static_cast<int>(std::lround(b_int / (2.0 * df))), 1, 25);
    if (w % 2 == 0) ++w;

    Eigen::VectorXd cs(n);
    if (w > 1) {
        const int hw = w / 2;
        double run = 0.0;
        for (int i = 0; i < n; ++i) {
            run += auto_spectrum(i);
            if (i - w >= 0) run -= auto_spectrum(i - w);
            if (i >= w - 1) cs(i - hw) = run / w;
        }
        for (int i = 0; i < hw; ++i) cs(i) = cs(hw);
        for (int i = n - hw; i < n; ++i) cs(i) = cs(n - hw - 1);
    } else {
        cs = auto_spectrum;
    }

    int ps = lo;
    for (int i = lo; i <= hi; ++i) {
        if (cs(i) > cs(ps)) ps = i;
    }
    if (ps <= 0 || ps >= n - 1) return std::nullopt;
    // parabolic vertex through the three top lines
    const double c0 = cs(ps), cm = cs(ps - 1), cp = cs(ps + 1);
    const double den = 2.0 * c0 - cm - cp;
    const double v = den > 0.0 ? c0 + (cm - cp) * (cm - cp) / (8.0 * den) : c0;
    const double half = 0.5 * v;

    auto cross = [&](int dir) -> std::optional<double> {
        int i = ps;
        while (true) {
            const int j = i + dir;
            if (j < 0 || j >= n) return std::nullopt;
            if (cs(j) > v) return std::nullopt;
            if (cs(j) <= half) {
                // confirm the crossing holds for a couple of lines
                bool confirmed = true;
                for (int la = 1; la <= 2; ++la) {
                    const int k = j + la * dir;
                    if (k >= 0 && k < n && cs(k) > half) {
                        confirmed = false;
                        break;
                    }
                }
                if (confirmed) {
                    return frequencies_hz[i] +
                           (half - cs(i)) * (frequencies_hz[j] - frequencies_hz[i]) /
                               (cs(j) - cs(i));
                }
            }
            i = j;
        }
    };
    const auto fl = cross(-1);
    const auto fr = cross(+1);
    if (!fl || !fr) return std::nullopt;
    const double bm = *fr - *fl;

    // Voigt-style removal of the spectral window: hann kernel ~1.44 df wide
    // plus the boxcar's half-power width
    const double fg2 = (1.44 * df) * (1.44 * df) + 0.462 * (w * df) * (w * df);
    const double fg = std::sqrt(fg2);
    const double a = 0.5346, b = 0.2166;
    double bc;
    const double disc = a * a * bm * bm - (a * a - b) * (bm * bm - fg2);
    if (disc > 0.0 && bm > fg) {
        bc = std::max((a * bm - std::sqrt(disc)) / (a * a - b), 0.25 * df);
    } else {
        bc = 0.25 * df;
    }
    return bc / (2.0 * frequencies_hz[ps]);
}

namespace {

/// Shared tail of the identify operations: phase-align, normalize, package.
IdentifiedMode make_mode(double f_hz, const Eigen::VectorXcd& complex_shape) {
    IdentifiedMode mode;
    mode.frequency_hz = f_hz;
    Eigen::VectorXd re = phase_aligned_real(complex_shape, &mode.imag_fraction);
    mode.shape = unit_max_abs(re);
    return mode;
}

}  // namespace

IdentifiedModeSet pp_identify(const CrossSpectralMatrix& g, const Anpsd& a, int reference_channel,
                              const PeakConfig& cfg) {
    const int m = g.n_channels();
    if (reference_channel < 0 || reference_channel >= m) {
        throw InvalidArgument("reference channel out of range");
    }
    const PeakSet peaks = find_peaks(a.frequencies_hz, a.values, cfg);

    IdentifiedModeSet out;
    out.method = Method::PP;
    out.channel_nodes = g.channel_nodes;
    out.reference_node = g.channel_nodes.empty() ? reference_channel
                                                 : g.channel_nodes[reference_channel];
    out.diagnostics.frequencies_hz = a.frequencies_hz;
    out.diagnostics.columns.emplace_back("anpsd", a.values);

    auto auto_psd_of = [&](int channel) {
        Eigen::VectorXd c(g.n_lines());
        for (int k = 0; k < g.n_lines(); ++k) c(k) = g.matrices[k](channel, channel).real();
        return c;
    };

    for (const auto& pk : peaks) {
        const auto& gk = g.matrices[pk.bin];
        int ref = reference_channel;
        double max_auto = 0.0;
        int best = 0;
        for (int c = 0; c < m; ++c) {
            const double auto_c = gk(c, c).real();
            if (auto_c > max_auto) {
                max_auto = auto_c;
                best = c;
            }
        }
        std::vector<std::string> flags;
        if (!(gk(ref, ref).real() > 1e-12 * max_auto)) {
            // reference sits on a node line of this mode; fall back to the
            // strongest channel and record it
            flags.push_back("reference-degenerate");
            flags.push_back("reference-fallback-node-" + std::to_string(g.channel_nodes[best] + 1));
            ref = best;
        }
        Eigen::VectorXcd tf(m);
        for (int c = 0; c < m; ++c) tf(c) = gk(c, ref) / gk(ref, ref).real();
        IdentifiedMode mode = make_mode(pk.frequency_hz, tf);
        mode.flags = std::move(flags);
        try {
            mode.damping_ratio = half_power_damping(g.frequencies_hz, auto_psd_of(ref), pk.bin);
        } catch (const BandwidthUnresolved&) {
            mode.flags.push_back("bandwidth-unresolved");
        }
        out.modes.push_back(std::move(mode));
    }
    return out;
}

IdentifiedModeSet fdd_identify(const CrossSpectralMatrix& g, const PeakConfig& cfg) {
    const SvSpectrum sv = sv_spectrum(g);
    const int m = g.n_channels();

    Eigen::VectorXd s1 = sv.singular_values.col(0);
    const PeakSet peaks = find_peaks(sv.frequencies_hz, s1, cfg);

    IdentifiedModeSet out;
    out.method = Method::FDD;
    out.channel_nodes = g.channel_nodes;
    out.diagnostics.frequencies_hz = sv.frequencies_hz;
    const int n_curves = std::min(3, m);
    for (int j = 0; j < n_curves; ++j) {
        out.diagnostics.columns.emplace_back("s" + std::to_string(j + 1),
                                             sv.singular_values.col(j));
    }

    for (const auto& pk : peaks) {
        IdentifiedMode mode = make_mode(pk.frequency_hz, sv.first_vectors.row(pk.bin).transpose());
        if (m > 1) {
            const double ratio = sv.singular_values(pk.bin, 1) / sv.singular_values(pk.bin, 0);
            if (ratio > 0.5) mode.flags.push_back("not-rank-one");
        }
        out.modes.push_back(std::move(mode));
    }
    return out;
}

IdentifiedModeSet frf_identify(const FrfSet& frf, const PeakConfig& cfg) {
    const int m = static_cast<int>(frf.frf.cols());
    if (m == 0) throw InvalidArgument("empty FRF set");

    Eigen::VectorXd curve(frf.n_lines());
    for (int k = 0; k < frf.n_lines(); ++k) {
        curve(k) = frf.frf.row(k).cwiseAbs().mean();
    }
    if (!(curve.maxCoeff() > 0.0)) throw InvalidArgument("zero-response FRF set has no peaks");

    const PeakSet peaks = find_peaks(frf.frequencies_hz, curve, cfg);

    IdentifiedModeSet out;
    out.method = Method::FRF;
    out.channel_nodes = frf.channel_nodes;
    out.diagnostics.frequencies_hz = frf.frequencies_hz;
    out.diagnostics.columns.emplace_back("mean_abs_h1", curve);
    Eigen::VectorXd mean_coh = frf.coherence.rowwise().mean();
    out.diagnostics.columns.emplace_back("mean_coherence", mean_coh);

    for (const auto& pk : peaks) {
        IdentifiedMode mode = make_mode(pk.frequency_hz, frf.frf.row(pk.bin).transpose());
        if (mean_coh(pk.bin) < 0.9) mode.flags.push_back("low-coherence");
        if (!frf.line_valid.empty() && !frf.line_valid[pk.bin]) {
            mode.flags.push_back("invalid-line");
        }
        out.modes.push_back(std::move(mode));
    }
    return out;
}

}  // namespace oma
