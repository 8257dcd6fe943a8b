#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oma/beam_model.hpp"
#include "oma/compare.hpp"
#include "oma/identify.hpp"
#include "oma/io.hpp"
#include "oma/simulator.hpp"
#include "oma/spectral.hpp"

namespace oma {

/// Agreement thresholds the run reports check against (also the acceptance
/// suite's numbers).
namespace thresholds {
inline constexpr double kFreqTolBinsMode1 = 3.0;
inline constexpr double kFreqTolBins = 2.0;       // modes 2..5
inline constexpr double kShapeMaxAbsTol = 0.05;
inline constexpr double kMacDiagMin = 0.95;
inline constexpr double kMacOffMax = 0.2;
inline constexpr double kFrfVsFddBins = 1.0;      // modes 2..5
inline constexpr double kFrfMacMin = 0.98;
inline constexpr double kDampingRelTol = 0.5;     // modes 1..3, PP only
inline constexpr int kDampingModes = 3;
}  // namespace thresholds

struct RunConfig {
    BeamSpec beam;
    ExcitationSpec excitation;
    double sample_rate_hz = 2048.0;
    double duration_s = 240.0;
    double discard_s = 2.0;  // transient dropped before spectral analysis
    SpectralConfig spectral;
    PeakConfig peaks{.band_lo_hz = 1.0,
                     .band_hi_hz = 0.0,
                     .min_prominence_rel = 0.01,
                     .min_separation_hz = 5.0,
                     .expected_modes = 5,
                     .refine_location = true};
    int reference_node = -1;  // 0-based; also the FRF drive node
    std::uint64_t seed = 42;
    int n_modes = 5;
    // fine-grid pass for the half-power damping readout
    int damping_segment_length = 32768;
    double damping_overlap = 0.75;
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

/// The benchmark's four test beams: 1 cantilever, 2 clamped-clamped,
/// 3 pinned-pinned, 4 clamped-pinned, all sharing the calibrated EI.
RunConfig beam_preset(int beam_id);

struct Manifest {
    BeamSpec beam;
    double sample_rate_hz = 0.0;
    double duration_s = 0.0;
    double discard_s = 2.0;
    std::uint64_t seed = 0;
    std::string rng;
    double frequency_step_hz = 0.5;  // identification grid
    double excitation_rms = 0.0;
    int excitation_node = -1;  // -1 = all free translations (0-based otherwise)
    std::uint64_t excitation_seed = 0;
    int newmark_substeps = 1;
    RayleighCoefficients rayleigh;
    double zeta_target = 0.0;
    std::vector<double> rayleigh_calibrated_at_hz;
    std::vector<double> modal_damping;
    ModalSet fem_truth;
    std::vector<double> analytical_hz;
    std::string forces_file;
    std::string accelerations_file;
    std::string created_utc;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

/// Simulates one record (ambient or single-node drive per cfg.excitation),
/// writes <tag>_forces.csv, <tag>_accelerations.csv and <tag>_manifest.json
/// into out_dir.
Manifest simulate_stage(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const std::string& tag = "ambient");

/// Runs one identification method on records already on disk; writes
/// identified_<method>.json and the diagnostic curve CSV.
IdentifiedModeSet identify_stage(Method method, const std::filesystem::path& accel_csv,
                                 const std::filesystem::path& force_csv, const RunConfig& cfg,
                                 const std::filesystem::path& out_dir);

struct MethodReport {
    std::string method;
    bool present = false;
    std::vector<double> frequencies_hz;
    std::vector<double> freq_error_bins;        // vs FEM truth
    std::vector<double> shape_max_abs_dev;      // vs FEM truth, aligned
    std::vector<double> mac_diag;
    Eigen::MatrixXd mac_values;                 // full matrix vs FEM truth
    double mac_off_max = 0.0;
    std::vector<double> damping_rel_error;      // PP modes 1..3
    std::vector<double> frf_vs_fdd_bins;        // FRF only, per mode
    std::vector<double> frf_mac_vs_fdd;         // FRF only
    bool pass = true;
    std::vector<std::string> failures;
};

struct CompareReport {
    std::vector<MethodReport> methods;
    bool pass = true;
};

/// Emits the frequency table (Tables 5-8 layout), per-method shape tables
/// (Tables 1-4 layout), MAC matrices and a pass/fail report.
CompareReport compare_stage(const Manifest& manifest,
                            const std::vector<IdentifiedModeSet>& identified,
                            const std::filesystem::path& out_dir);

struct BeamPipelineResult {
    Manifest manifest;
    IdentifiedModeSet pp;
    IdentifiedModeSet fdd;
    IdentifiedModeSet frf;
    CompareReport report;
    std::filesystem::path dir;
};

/// simulate -> identify (PP, FDD) -> single-node simulate -> identify (FRF)
/// -> compare, everything under out_root/beam<N>/.
BeamPipelineResult run_beam_pipeline(int beam_id, const std::filesystem::path& out_root,
                                     std::uint64_t seed);

/// All four beams; they run concurrently when `concurrent` is set.
std::vector<BeamPipelineResult> run_all_beams(const std::filesystem::path& out_root,
                                              std::uint64_t seed, bool concurrent = true);

}  // namespace oma
