#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "oma/simulator.hpp"

namespace oma {

enum class Window { Hann, Rectangular };
enum class Detrend { Mean, None };

struct SpectralConfig {
    int segment_length = 4096;  // power of two, >= 64
    double overlap_fraction = 0.5;
    Window window = Window::Hann;
    Detrend detrend = Detrend::Mean;
};

void validate(const SpectralConfig& cfg);

/// Segments available for a record of n samples; throws when fewer than 8.
int segment_count(const SpectralConfig& cfg, long n_samples);

/// One-sided output cross-PSD matrix estimate: line k holds the Hermitian
/// m x m matrix G(f_k) with G_ij = E[X_i conj(X_j)] scaled so that
/// sum_k G_ii(f_k) df equals channel i's variance.
struct CrossSpectralMatrix {
    std::vector<double> frequencies_hz;
    std::vector<Eigen::MatrixXcd> matrices;
    std::vector<int> channel_nodes;

    int n_lines() const { return static_cast<int>(frequencies_hz.size()); }
    int n_channels() const {
        return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows());
    }
    double frequency_step_hz() const {
        return frequencies_hz.size() > 1 ? frequencies_hz[1] - frequencies_hz[0] : 0.0;
    }
};

/// Averaged normalized PSD: each channel's auto-PSD normalized to unit sum
/// over the retained grid, then averaged across channels.
struct Anpsd {
    std::vector<double> frequencies_hz;
    Eigen::VectorXd values;
    Eigen::MatrixXd per_channel_npsd;  // n_lines x m diagnostic
};

/// H1 FRF estimate per output channel against a single reference input,
/// with ordinary coherence.
struct FrfSet {
    std::vector<double> frequencies_hz;
    Eigen::MatrixXcd frf;        // n_lines x m
    Eigen::MatrixXd coherence;   // n_lines x m
    std::vector<char> line_valid;
    std::vector<int> channel_nodes;

    int n_lines() const { return static_cast<int>(frequencies_hz.size()); }
    double frequency_step_hz() const {
        return frequencies_hz.size() > 1 ? frequencies_hz[1] - frequencies_hz[0] : 0.0;
    }
};

CrossSpectralMatrix welch_cross_psd(const TimeHistory& y, const SpectralConfig& cfg);

Anpsd anpsd(const CrossSpectralMatrix& g);

/// x must hold exactly one force channel; sample rates and lengths must match.
FrfSet frf_h1(const TimeHistory& x, const TimeHistory& y, const SpectralConfig& cfg);

/// Single-channel Welch auto-PSD on the same scaling as welch_cross_psd.
Eigen::VectorXd welch_auto_psd(const Eigen::VectorXd& samples, double sample_rate_hz,
                               const SpectralConfig& cfg, std::vector<double>* frequencies_hz);

namespace detail {
/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& data);
}  // namespace detail

}  // namespace oma
