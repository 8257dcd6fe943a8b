#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "oma/beam_model.hpp"

namespace oma {

enum class SignalKind { Force, Acceleration };

/// Multi-channel sampled record. Channels map to beam nodes (0-based).
struct TimeHistory {
    double sample_rate_hz = 0.0;
    std::vector<int> channel_nodes;
    Eigen::MatrixXd samples;  // n_samples x n_channels
    SignalKind kind = SignalKind::Acceleration;
    std::uint64_t seed = 0;  // provenance only

    int n_samples() const { return static_cast<int>(samples.rows()); }
    int n_channels() const { return static_cast<int>(samples.cols()); }
    double duration_s() const { return n_samples() / sample_rate_hz; }
};

void validate(const TimeHistory& th, int n_nodes);

/// Reproducible-stream contract: all Gaussian noise in this library comes
/// from mt19937_64 driven through the trigonometric Box-Muller transform,
/// two uniforms per pair of normals.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+box-muller";

/// Deterministic sub-stream seed: FNV-1a hash of the tag mixed into the
/// master seed and scrambled with one SplitMix64 round.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

class GaussianSampler {
  public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}
    double next();  // standard normal

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

struct ExcitationSpec {
    double amplitude_rms = 1.0;  // std of each force sample [N]
    std::uint64_t seed = 0;
    std::optional<int> node;  // nullopt: all free translations; else one node (0-based)
};

/// Zero-mean Gaussian white force histories on the targeted free
/// translational DOFs. Deterministic per seed; channel k uses the derived
/// sub-stream "excitation-channel-<k>".
TimeHistory generate_excitation(const ExcitationSpec& spec, const SystemMatrices& sys,
                                double sample_rate_hz, double duration_s);

struct NewmarkOptions {
    /// Internal integration runs at substeps * forces.sample_rate_hz with the
    /// force held constant across each force interval (zero-order hold).
    int substeps = 1;
    /// Anti-alias the internal series before decimating to the output rate
    /// (two cascaded length-substeps running means; nulls at every fold
    /// frequency). Ignored when substeps == 1.
    bool antialias = true;
};

struct InitialState {
    Eigen::VectorXd displacement;  // over free DOFs
    Eigen::VectorXd velocity;
};

/// Average-acceleration Newmark (gamma = 1/2, beta = 1/4), unconditionally
/// stable. Returns accelerations at all free translational DOFs, one channel
/// per node, at the force record's sample rate.
TimeHistory newmark_integrate(const SystemMatrices& sys, const Eigen::MatrixXd& damping,
                              const TimeHistory& forces, const NewmarkOptions& opts = {},
                              const InitialState* initial = nullptr);

/// Substeps needed so the integrator's period distortion (w h)^2/12 keeps the
/// frequency error of f_max below max_freq_error_hz.
int recommended_substeps(double f_max_hz, double sample_rate_hz, double max_freq_error_hz);

/// Adds white Gaussian noise per channel at the requested SNR (dB) relative
/// to each channel's RMS. Infinite snr_db returns the input unchanged.
TimeHistory add_noise(const TimeHistory& signal, double snr_db, std::uint64_t seed);

}  // namespace oma
