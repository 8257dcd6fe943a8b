#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "oma/spectral.hpp"

namespace oma {

/// Per-line singular values (descending) and first singular vectors of the
/// cross-PSD matrix.
struct SvSpectrum {
    std::vector<double> frequencies_hz;
    Eigen::MatrixXd singular_values;  // n_lines x m
    Eigen::MatrixXcd first_vectors;   // n_lines x m, each row unit norm
    std::vector<int> failed_lines;
};

struct Peak {
    int bin = 0;
    double frequency_hz = 0.0;
    double value = 0.0;
    double prominence = 0.0;
};
using PeakSet = std::vector<Peak>;

struct PeakConfig {
    double band_lo_hz = 1.0;
    double band_hi_hz = 0.0;  // 0 -> 0.9 * Nyquist
    double min_prominence_rel = 0.05;
    double min_separation_hz = 5.0;
    int expected_modes = 0;  // keep the n most prominent; 0 = keep all
    /// Re-localize each detected peak with a log-quadratic vertex fit over
    /// its half-power neighbourhood, rounded back to the grid. Stabilizes
    /// broad noisy peaks without leaving the frequency grid.
    bool refine_location = true;
};

enum class Method { PP, FDD, FRF };
const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct IdentifiedMode {
    double frequency_hz = 0.0;
    std::optional<double> damping_ratio;
    Eigen::VectorXd shape;  // over channel nodes, UnitMaxAbs
    double imag_fraction = 0.0;
    std::vector<std::string> flags;
};

struct DiagnosticCurves {
    std::vector<double> frequencies_hz;
    std::vector<std::pair<std::string, Eigen::VectorXd>> columns;
};

struct IdentifiedModeSet {
    Method method = Method::FDD;
    std::vector<IdentifiedMode> modes;
    std::vector<int> channel_nodes;  // 0-based
    int reference_node = -1;         // 0-based, PP only
    DiagnosticCurves diagnostics;
};

SvSpectrum sv_spectrum(const CrossSpectralMatrix& g);

/// Local maxima of `curve` within the band, filtered by relative prominence
/// and minimum separation. Plateaus report their leftmost bin.
PeakSet find_peaks(const std::vector<double>& frequencies_hz, const Eigen::VectorXd& curve,
                   const PeakConfig& cfg);

/// Peak-Picking: ANPSD peaks give frequencies; shapes come from the
/// cross/auto spectral ratio against the reference channel; damping from the
/// half-power bandwidth of the reference auto-PSD.
IdentifiedModeSet pp_identify(const CrossSpectralMatrix& g, const Anpsd& a, int reference_channel,
                              const PeakConfig& cfg);

/// Frequency Domain Decomposition: peaks of the first singular value; shapes
/// are the first singular vectors at the peaks.
IdentifiedModeSet fdd_identify(const CrossSpectralMatrix& g, const PeakConfig& cfg);

/// Input-output cross-check: peaks of the channel-averaged |H1|.
IdentifiedModeSet frf_identify(const FrfSet& frf, const PeakConfig& cfg);

/// zeta = (f2 - f1) / (2 f_peak) with f1, f2 linearly interpolated crossings
/// of half the peak value. Throws BandwidthUnresolved when a crossing is not
/// bracketed before the curve rises above the peak or leaves the grid.
double half_power_damping(const std::vector<double>& frequencies_hz,
                          const Eigen::VectorXd& auto_spectrum, int peak_bin);

/// Noise-robust wrapper around the half-power readout for Welch estimates:
/// adaptive boxcar smoothing sized from an integral bandwidth estimate, a
/// parabolic peak value, and deconvolution of the spectral-window width.
/// Returns nullopt when the crossings cannot be resolved.
std::optional<double> refined_half_power_damping(const std::vector<double>& frequencies_hz,
                                                 const Eigen::VectorXd& auto_spectrum,
                                                 double f_guess_hz, double search_halfwidth_hz);

/// Rotates v by the unit phase maximizing the norm of its real part and
/// drops the imaginary remainder. imag_fraction (optional out) receives
/// ||Im||/||v|| after rotation.
Eigen::VectorXd phase_aligned_real(const Eigen::VectorXcd& v, double* imag_fraction = nullptr);

}  // namespace oma
