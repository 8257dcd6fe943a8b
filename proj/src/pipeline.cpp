#include "oma/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <json.hpp>
#include <sstream>

#include "oma/errors.hpp"

namespace oma {

namespace {

using nlohmann::json;

constexpr const char* kWindowNames[] = {"hann", "rectangular"};
constexpr const char* kDetrendNames[] = {"mean", "none"};

json spectral_to_json(const SpectralConfig& s) {
    return json{{"segment_length", s.segment_length},
                {"overlap_fraction", s.overlap_fraction},
                {"window", kWindowNames[static_cast<int>(s.window)]},
                {"detrend", kDetrendNames[static_cast<int>(s.detrend)]}};
}

SpectralConfig spectral_from_json(const json& j) {
    SpectralConfig s;
    s.segment_length = j.value("segment_length", s.segment_length);
    s.overlap_fraction = j.value("overlap_fraction", s.overlap_fraction);
    if (j.contains("window")) {
        const auto w = j["window"].get<std::string>();
        if (w == "hann") s.window = Window::Hann;
        else if (w == "rectangular") s.window = Window::Rectangular;
        else throw InvalidArgument("unknown window: " + w);
    }
    if (j.contains("detrend")) {
        const auto d = j["detrend"].get<std::string>();
        if (d == "mean") s.detrend = Detrend::Mean;
        else if (d == "none") s.detrend = Detrend::None;
        else throw InvalidArgument("unknown detrend: " + d);
    }
    return s;
}

json beam_to_json_obj(const BeamSpec& b) { return json::parse(beam_spec_to_json(b)); }

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["beam"] = beam_to_json_obj(cfg.beam);
    j["excitation"] = {{"amplitude_rms", cfg.excitation.amplitude_rms}};
    if (cfg.excitation.node.has_value()) {
        j["excitation"]["target"] = *cfg.excitation.node + 1;
    } else {
        j["excitation"]["target"] = "all_free_translations";
    }
    j["sample_rate_hz"] = cfg.sample_rate_hz;
    j["duration_s"] = cfg.duration_s;
    j["discard_s"] = cfg.discard_s;
    j["spectral"] = spectral_to_json(cfg.spectral);
    j["peaks"] = {{"band_lo_hz", cfg.peaks.band_lo_hz},
                  {"band_hi_hz", cfg.peaks.band_hi_hz},
                  {"min_prominence_rel", cfg.peaks.min_prominence_rel},
                  {"min_separation_hz", cfg.peaks.min_separation_hz},
                  {"expected_modes", cfg.peaks.expected_modes},
                  {"refine_location", cfg.peaks.refine_location}};
    j["reference_node"] = cfg.reference_node + 1;
    j["seed"] = cfg.seed;
    j["n_modes"] = cfg.n_modes;
    j["damping"] = {{"segment_length", cfg.damping_segment_length},
                    {"overlap_fraction", cfg.damping_overlap}};
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad run config JSON: ") + e.what(), 1);
    }
    RunConfig cfg;
    if (j.contains("beam")) cfg.beam = beam_spec_from_json(j["beam"].dump());
    if (j.contains("excitation")) {
        const auto& e = j["excitation"];
        cfg.excitation.amplitude_rms = e.value("amplitude_rms", cfg.excitation.amplitude_rms);
        if (e.contains("target") && e["target"].is_number_integer()) {
            cfg.excitation.node = e["target"].get<int>() - 1;
        }
    }
    cfg.sample_rate_hz = j.value("sample_rate_hz", cfg.sample_rate_hz);
    cfg.duration_s = j.value("duration_s", cfg.duration_s);
    cfg.discard_s = j.value("discard_s", cfg.discard_s);
    if (j.contains("spectral")) cfg.spectral = spectral_from_json(j["spectral"]);
    if (j.contains("peaks")) {
        const auto& p = j["peaks"];
        cfg.peaks.band_lo_hz = p.value("band_lo_hz", cfg.peaks.band_lo_hz);
        cfg.peaks.band_hi_hz = p.value("band_hi_hz", cfg.peaks.band_hi_hz);
        cfg.peaks.min_prominence_rel = p.value("min_prominence_rel", cfg.peaks.min_prominence_rel);
        cfg.peaks.min_separation_hz = p.value("min_separation_hz", cfg.peaks.min_separation_hz);
        cfg.peaks.expected_modes = p.value("expected_modes", cfg.peaks.expected_modes);
        cfg.peaks.refine_location = p.value("refine_location", cfg.peaks.refine_location);
    }
    if (j.contains("reference_node")) cfg.reference_node = j["reference_node"].get<int>() - 1;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_modes = j.value("n_modes", cfg.n_modes);
    if (j.contains("damping")) {
        cfg.damping_segment_length =
            j["damping"].value("segment_length", cfg.damping_segment_length);
        cfg.damping_overlap = j["damping"].value("overlap_fraction", cfg.damping_overlap);
    }
    return cfg;
}

RunConfig beam_preset(int beam_id) {
    RunConfig cfg;
    switch (beam_id) {
        case 1:
            cfg.beam.boundary = Boundary::Cantilever;
            cfg.reference_node = 10;
            break;
        case 2:
            cfg.beam.boundary = Boundary::ClampedClamped;
            cfg.reference_node = 3;
            break;
        case 3:
            cfg.beam.boundary = Boundary::PinnedPinned;
            cfg.reference_node = 3;
            break;
        case 4:
            cfg.beam.boundary = Boundary::ClampedPinned;
            cfg.reference_node = 2;
            break;
        default:
            throw InvalidArgument("beam id must lie in 1..4");
    }
    return cfg;
}

namespace {

json manifest_to_json_obj(const Manifest& m) {
    json j;
    j["beam"] = beam_to_json_obj(m.beam);
    j["sample_rate_hz"] = m.sample_rate_hz;
    j["duration_s"] = m.duration_s;
    j["discard_s"] = m.discard_s;
    j["seed"] = m.seed;
    j["rng"] = m.rng;
    j["frequency_step_hz"] = m.frequency_step_hz;
    j["excitation"] = {{"amplitude_rms", m.excitation_rms},
                       {"seed", m.excitation_seed}};
    if (m.excitation_node >= 0) {
        j["excitation"]["target"] = m.excitation_node + 1;
    } else {
        j["excitation"]["target"] = "all_free_translations";
    }
    j["newmark"] = {{"substeps", m.newmark_substeps}, {"antialias", true}};
    j["rayleigh"] = {{"alpha", m.rayleigh.alpha},
                     {"beta", m.rayleigh.beta},
                     {"zeta_target", m.zeta_target},
                     {"calibrated_at_hz", m.rayleigh_calibrated_at_hz},
                     {"modal_damping", m.modal_damping}};
    json shapes = json::array();
    for (int i = 0; i < m.fem_truth.shapes.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.fem_truth.shapes.cols(); ++k) row.push_back(m.fem_truth.shapes(i, k));
        shapes.push_back(std::move(row));
    }
    j["truth"] = {{"fem_frequencies_hz", m.fem_truth.frequencies_hz},
                  {"fem_shapes", std::move(shapes)},
                  {"analytical_frequencies_hz", m.analytical_hz}};
    j["files"] = {{"forces", m.forces_file}, {"accelerations", m.accelerations_file}};
    j["created_utc"] = m.created_utc;
    return j;
}

}  // namespace

std::string manifest_to_json(const Manifest& m) { return manifest_to_json_obj(m).dump(2); }

Manifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad manifest JSON: ") + e.what(), 1);
    }
    Manifest m;
    m.beam = beam_spec_from_json(j.at("beam").dump());
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    m.duration_s = j.at("duration_s").get<double>();
    m.discard_s = j.value("discard_s", 2.0);
    m.seed = j.value("seed", 0ull);
    m.rng = j.value("rng", "");
    m.frequency_step_hz = j.value("frequency_step_hz", 0.5);
    const auto& e = j.at("excitation");
    m.excitation_rms = e.value("amplitude_rms", 1.0);
    m.excitation_seed = e.value("seed", 0ull);
    if (e.contains("target") && e["target"].is_number_integer()) {
        m.excitation_node = e["target"].get<int>() - 1;
    }
    m.newmark_substeps = j.at("newmark").value("substeps", 1);
    const auto& r = j.at("rayleigh");
    m.rayleigh.alpha = r.value("alpha", 0.0);
    m.rayleigh.beta = r.value("beta", 0.0);
    m.zeta_target = r.value("zeta_target", 0.0);
    m.rayleigh_calibrated_at_hz = r.value("calibrated_at_hz", std::vector<double>{});
    m.modal_damping = r.value("modal_damping", std::vector<double>{});
    const auto& t = j.at("truth");
    m.fem_truth.frequencies_hz = t.at("fem_frequencies_hz").get<std::vector<double>>();
    const auto& shapes = t.at("fem_shapes");
    const int rows = static_cast<int>(shapes.size());
    const int cols = rows > 0 ? static_cast<int>(shapes[0].size()) : 0;
    m.fem_truth.shapes.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int k = 0; k < cols; ++k) m.fem_truth.shapes(i, k) = shapes[i][k].get<double>();
    }
    m.fem_truth.normalization = ShapeNormalization::UnitMaxAbs;
    m.analytical_hz = t.at("analytical_frequencies_hz").get<std::vector<double>>();
    m.forces_file = j.at("files").value("forces", "");
    m.accelerations_file = j.at("files").value("accelerations", "");
    m.created_utc = j.value("created_utc", "");
    return m;
}

namespace {

/// Enough samples after the transient discard to satisfy the Welch plan.
void check_duration(const RunConfig& cfg) {
    const long n = std::lround((cfg.duration_s - cfg.discard_s) * cfg.sample_rate_hz);
    const int hop = std::max(
        1, static_cast<int>(std::lround(cfg.spectral.segment_length *
                                        (1.0 - cfg.spectral.overlap_fraction))));
    const long need = cfg.spectral.segment_length + 7L * hop;
    if (n < need) {
        throw InvalidArgument(
            "duration below spectral minimum: need " +
            std::to_string((need + std::lround(cfg.discard_s * cfg.sample_rate_hz))) +
            " samples (" + std::to_string(need / cfg.sample_rate_hz + cfg.discard_s) +
            " s), got " + std::to_string(std::lround(cfg.duration_s * cfg.sample_rate_hz)));
    }
}

}  // namespace

Manifest simulate_stage(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const std::string& tag) {
    validate(cfg.beam);
    check_duration(cfg);
    ensure_dir(out_dir);

    const SystemMatrices sys = assemble(cfg.beam);
    const ModalSet truth = solve_modal(sys, cfg.n_modes);
    const std::vector<double> analytical = analytical_frequencies(cfg.beam, cfg.n_modes);

    const double f_lo = truth.frequencies_hz.front();
    const double f_hi = truth.frequencies_hz.back();
    const Eigen::MatrixXd damping =
        cfg.beam.damping_ratio > 0.0
            ? rayleigh_damping(sys, cfg.beam.damping_ratio, f_lo, f_hi)
            : Eigen::MatrixXd::Zero(sys.n_dofs(), sys.n_dofs()).eval();
    const auto coeffs = cfg.beam.damping_ratio > 0.0
                            ? rayleigh_coefficients(cfg.beam.damping_ratio, f_lo, f_hi)
                            : RayleighCoefficients{};

    ExcitationSpec exc = cfg.excitation;
    exc.seed = derive_seed(cfg.seed, "excitation-" + tag);
    const TimeHistory forces = generate_excitation(exc, sys, cfg.sample_rate_hz, cfg.duration_s);

    NewmarkOptions opts;
    const double grid_df = cfg.sample_rate_hz / cfg.spectral.segment_length;
    opts.substeps = recommended_substeps(f_hi, cfg.sample_rate_hz, grid_df / 4.0);
    TimeHistory accel = newmark_integrate(sys, damping, forces, opts);

    // pad constrained nodes with zero channels so the record covers every node
    {
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(accel.n_samples(), sys.n_nodes);
        for (int c = 0; c < accel.n_channels(); ++c) {
            full.col(accel.channel_nodes[c]) = accel.samples.col(c);
        }
        accel.samples = std::move(full);
        accel.channel_nodes.resize(sys.n_nodes);
        for (int i = 0; i < sys.n_nodes; ++i) accel.channel_nodes[i] = i;
    }

    Manifest m;
    m.beam = cfg.beam;
    m.sample_rate_hz = cfg.sample_rate_hz;
    m.duration_s = cfg.duration_s;
    m.discard_s = cfg.discard_s;
    m.seed = cfg.seed;
    m.rng = std::string(kRngAlgorithm);
    m.frequency_step_hz = cfg.sample_rate_hz / cfg.spectral.segment_length;
    m.excitation_rms = exc.amplitude_rms;
    m.excitation_node = exc.node.value_or(-1);
    m.excitation_seed = exc.seed;
    m.newmark_substeps = opts.substeps;
    m.rayleigh = coeffs;
    m.zeta_target = cfg.beam.damping_ratio;
    m.rayleigh_calibrated_at_hz = {f_lo, f_hi};
    for (double f : truth.frequencies_hz) {
        m.modal_damping.push_back(cfg.beam.damping_ratio > 0.0 ? modal_damping_ratio(coeffs, f)
                                                               : 0.0);
    }
    m.fem_truth = truth;
    m.analytical_hz = analytical;
    m.forces_file = tag + "_forces.csv";
    m.accelerations_file = tag + "_accelerations.csv";
    m.created_utc = iso_utc_now();

    write_time_history_csv(out_dir / m.forces_file, forces);
    write_time_history_csv(out_dir / m.accelerations_file, accel);
    write_text_file(out_dir / (tag + "_manifest.json"), manifest_to_json(m) + "\n");
    write_modal_set_csv(out_dir / (tag + "_fem_modes.csv"), truth);
    return m;
}

namespace {

struct ActiveRecord {
    TimeHistory record;            // active channels only, transient removed
    std::vector<int> all_nodes;    // nodes of the original record
    std::vector<int> active_cols;  // original column index per active channel
};

ActiveRecord prepare_record(const TimeHistory& raw, double discard_s) {
    const long skip = std::lround(discard_s * raw.sample_rate_hz);
    if (skip >= raw.n_samples()) throw InvalidArgument("record shorter than the discard window");
    const long n = raw.n_samples() - skip;

    ActiveRecord out;
    out.all_nodes = raw.channel_nodes;
    std::vector<int> keep;
    for (int c = 0; c < raw.n_channels(); ++c) {
        const auto col = raw.samples.col(c).tail(n);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum();
        if (var > 0.0) keep.push_back(c);
    }
    if (keep.empty()) throw InvalidArgument("all channels are identically constant");

    out.record.sample_rate_hz = raw.sample_rate_hz;
    out.record.kind = raw.kind;
    out.record.seed = raw.seed;
    out.record.samples.resize(n, static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.record.samples.col(static_cast<int>(i)) = raw.samples.col(keep[i]).tail(n);
        out.record.channel_nodes.push_back(raw.channel_nodes[keep[i]]);
    }
    out.active_cols = std::move(keep);
    return out;
}

/// Spreads shapes identified on the active channels back over every node of
/// the original record (constrained nodes get exact zeros).
void pad_modes_to_all_nodes(IdentifiedModeSet& set, const std::vector<int>& all_nodes) {
    const std::vector<int> active = set.channel_nodes;
    for (auto& mode : set.modes) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<int>(all_nodes.size()));
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto it = std::find(all_nodes.begin(), all_nodes.end(), active[i]);
            full(static_cast<int>(it - all_nodes.begin())) = mode.shape(static_cast<int>(i));
        }
        mode.shape = std::move(full);
    }
    set.channel_nodes = all_nodes;
}

}  // namespace

IdentifiedModeSet identify_stage(Method method, const std::filesystem::path& accel_csv,
                                 const std::filesystem::path& force_csv, const RunConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const TimeHistory raw = read_time_history_csv(accel_csv);
    if (raw.kind != SignalKind::Acceleration) {
        throw InvalidArgument(accel_csv.string() + " does not hold accelerations");
    }
    ActiveRecord active = prepare_record(raw, cfg.discard_s);

    IdentifiedModeSet set;
    if (method == Method::FRF) {
        if (force_csv.empty()) throw InvalidArgument("frf identification needs a force record");
        const TimeHistory force_raw = read_time_history_csv(force_csv);
        ActiveRecord force = prepare_record(force_raw, cfg.discard_s);
        const FrfSet frf = frf_h1(force.record, active.record, cfg.spectral);
        set = frf_identify(frf, cfg.peaks);
    } else {
        const CrossSpectralMatrix g = welch_cross_psd(active.record, cfg.spectral);
        if (method == Method::FDD) {
            set = fdd_identify(g, cfg.peaks);
            write_cross_spectral_csv(out_dir / "csd.csv", g);
        } else {
            const Anpsd a = anpsd(g);
            write_anpsd_csv(out_dir / "anpsd.csv", a);
            const auto& nodes = active.record.channel_nodes;
            const auto it = std::find(nodes.begin(), nodes.end(), cfg.reference_node);
            if (it == nodes.end()) {
                throw InvalidArgument("reference node " + std::to_string(cfg.reference_node + 1) +
                                      " is not an active channel");
            }
            const int ref_channel = static_cast<int>(it - nodes.begin());
            set = pp_identify(g, a, ref_channel, cfg.peaks);

            // damping readout on a finer grid: the 0.5 Hz identification grid
            // cannot resolve half-power bandwidths of lightly damped modes
            SpectralConfig fine = cfg.spectral;
            fine.segment_length = cfg.damping_segment_length;
            fine.overlap_fraction = cfg.damping_overlap;
            std::vector<double> fine_freqs;
            const Eigen::VectorXd fine_psd = welch_auto_psd(
                active.record.samples.col(ref_channel), active.record.sample_rate_hz, fine,
                &fine_freqs);
            for (auto& mode : set.modes) {
                const auto refined = refined_half_power_damping(fine_freqs, fine_psd,
                                                                mode.frequency_hz, 3.0);
                if (refined.has_value()) {
                    mode.damping_ratio = *refined;
                    mode.flags.push_back("damping-grid-hz-" +
                                         std::to_string(active.record.sample_rate_hz /
                                                        cfg.damping_segment_length));
                } else if (!mode.damping_ratio.has_value()) {
                    mode.flags.push_back("bandwidth-unresolved");
                }
            }
        }
    }

    pad_modes_to_all_nodes(set, active.all_nodes);

    const std::string method_lower = [&] {
        std::string s = method_name(method);
        std::transform(s.begin(), s.end(), s.begin(), ::tolower);
        return s;
    }();
    write_identified_json(out_dir / ("identified_" + method_lower + ".json"), set);
    write_identified_shapes_csv(out_dir / ("shapes_" + method_lower + ".csv"), set);
    write_curves_csv(out_dir / ("curves_" + method_lower + ".csv"), set.diagnostics);
    return set;
}

namespace {

MethodReport make_method_report(const IdentifiedModeSet& set, const Manifest& manifest,
                                const IdentifiedModeSet* fdd_for_cross, double grid_df) {
    MethodReport rep;
    rep.method = method_name(set.method);
    rep.present = true;

    const int n_modes = static_cast<int>(manifest.fem_truth.frequencies_hz.size());
    if (static_cast<int>(set.modes.size()) != n_modes) {
        rep.pass = false;
        rep.failures.push_back("expected " + std::to_string(n_modes) + " modes, identified " +
                               std::to_string(set.modes.size()));
        return rep;
    }

    const ShapeSet truth = to_shape_set(manifest.fem_truth, manifest.beam.n_nodes());
    ShapeSet ident = to_shape_set(set);
    ident = align(ident, truth);
    const MacMatrix mm = mac_matrix(ident, truth);
    rep.mac_values = mm.values;

    for (int k = 0; k < n_modes; ++k) {
        const double f_truth = manifest.fem_truth.frequencies_hz[k];
        rep.frequencies_hz.push_back(set.modes[k].frequency_hz);
        const double bins = (set.modes[k].frequency_hz - f_truth) / grid_df;
        rep.freq_error_bins.push_back(bins);
        const double tol = (k == 0) ? thresholds::kFreqTolBinsMode1 : thresholds::kFreqTolBins;
        if (std::abs(bins) > tol + 1e-9) {
            rep.pass = false;
            rep.failures.push_back("mode " + std::to_string(k + 1) + " frequency off by " +
                                   std::to_string(bins) + " bins");
        }

        const double dev = (ident.shapes.col(k) - truth.shapes.col(k)).cwiseAbs().maxCoeff();
        rep.shape_max_abs_dev.push_back(dev);
        if (dev > thresholds::kShapeMaxAbsTol) {
            rep.pass = false;
            rep.failures.push_back("mode " + std::to_string(k + 1) + " shape deviates by " +
                                   std::to_string(dev));
        }

        rep.mac_diag.push_back(mm.values(k, k));
        if (mm.values(k, k) < thresholds::kMacDiagMin) {
            rep.pass = false;
            rep.failures.push_back("mode " + std::to_string(k + 1) + " MAC " +
                                   std::to_string(mm.values(k, k)));
        }
    }
    for (int i = 0; i < n_modes; ++i) {
        for (int j = 0; j < n_modes; ++j) {
            if (i != j) rep.mac_off_max = std::max(rep.mac_off_max, mm.values(i, j));
        }
    }
    if (rep.mac_off_max > thresholds::kMacOffMax) {
        rep.pass = false;
        rep.failures.push_back("off-diagonal MAC up to " + std::to_string(rep.mac_off_max));
    }

    if (set.method == Method::PP && !manifest.modal_damping.empty()) {
        for (int k = 0; k < std::min(thresholds::kDampingModes, n_modes); ++k) {
            const double truth_zeta = manifest.modal_damping[k];
            double rel = std::numeric_limits<double>::quiet_NaN();
            if (set.modes[k].damping_ratio.has_value() && truth_zeta > 0.0) {
                rel = (*set.modes[k].damping_ratio - truth_zeta) / truth_zeta;
            }
            rep.damping_rel_error.push_back(rel);
            if (!(std::abs(rel) <= thresholds::kDampingRelTol)) {
                rep.pass = false;
                rep.failures.push_back("mode " + std::to_string(k + 1) + " damping error " +
                                       std::to_string(rel * 100.0) + "%");
            }
        }
    }

    if (set.method == Method::FRF && fdd_for_cross != nullptr &&
        fdd_for_cross->modes.size() == set.modes.size()) {
        const ShapeSet fdd_shapes = to_shape_set(*fdd_for_cross);
        for (int k = 0; k < n_modes; ++k) {
            const double bins =
                (set.modes[k].frequency_hz - fdd_for_cross->modes[k].frequency_hz) / grid_df;
            rep.frf_vs_fdd_bins.push_back(bins);
            if (k > 0 && std::abs(bins) > thresholds::kFrfVsFddBins + 1e-9) {
                rep.pass = false;
                rep.failures.push_back("mode " + std::to_string(k + 1) + " FRF vs FDD gap " +
                                       std::to_string(bins) + " bins");
            }
            const double m = mac(ident.shapes.col(k), fdd_shapes.shapes.col(k));
            rep.frf_mac_vs_fdd.push_back(m);
            if (m < thresholds::kFrfMacMin) {
                rep.pass = false;
                rep.failures.push_back("mode " + std::to_string(k + 1) + " FRF-FDD MAC " +
                                       std::to_string(m));
            }
        }
    }
    return rep;
}

json report_to_json(const CompareReport& report) {
    json j;
    j["pass"] = report.pass;
    json methods = json::array();
    for (const auto& m : report.methods) {
        json jm;
        jm["method"] = m.method;
        jm["pass"] = m.pass;
        jm["frequencies_hz"] = m.frequencies_hz;
        jm["freq_error_bins"] = m.freq_error_bins;
        jm["shape_max_abs_dev"] = m.shape_max_abs_dev;
        jm["mac_diag"] = m.mac_diag;
        jm["mac_off_max"] = m.mac_off_max;
        if (m.mac_values.size() > 0) {
            json mac_rows = json::array();
            for (int i = 0; i < m.mac_values.rows(); ++i) {
                json row = json::array();
                for (int k = 0; k < m.mac_values.cols(); ++k) row.push_back(m.mac_values(i, k));
                mac_rows.push_back(std::move(row));
            }
            jm["mac"] = std::move(mac_rows);
        }
        if (!m.damping_rel_error.empty()) jm["damping_rel_error"] = m.damping_rel_error;
        if (!m.frf_vs_fdd_bins.empty()) jm["frf_vs_fdd_bins"] = m.frf_vs_fdd_bins;
        if (!m.frf_mac_vs_fdd.empty()) jm["frf_mac_vs_fdd"] = m.frf_mac_vs_fdd;
        jm["failures"] = m.failures;
        methods.push_back(std::move(jm));
    }
    j["methods"] = std::move(methods);
    return j;
}

}  // namespace

CompareReport compare_stage(const Manifest& manifest,
                            const std::vector<IdentifiedModeSet>& identified,
                            const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const double grid_df = manifest.frequency_step_hz;

    const IdentifiedModeSet* fdd = nullptr;
    for (const auto& set : identified) {
        if (set.method == Method::FDD) fdd = &set;
    }

    CompareReport report;
    for (const auto& set : identified) {
        const double df = set.diagnostics.frequencies_hz.size() > 1
                              ? set.diagnostics.frequencies_hz[1] -
                                    set.diagnostics.frequencies_hz[0]
                              : grid_df;
        report.methods.push_back(make_method_report(set, manifest, fdd, df));
        if (!report.methods.back().pass) report.pass = false;
    }

    // frequency table, Tables 5-8 layout: rows = methods, columns = modes
    {
        std::ostringstream table;
        table << "method";
        for (std::size_t k = 0; k < manifest.fem_truth.frequencies_hz.size(); ++k) {
            table << ",f" << k + 1 << "_hz";
        }
        table << '\n';
        auto row = [&table](const std::string& name, const std::vector<double>& f) {
            table << name;
            for (double v : f) table << ',' << v;
            table << '\n';
        };
        row("FEM", manifest.fem_truth.frequencies_hz);
        row("Analytical", manifest.analytical_hz);
        for (const auto& set : identified) {
            std::vector<double> f;
            for (const auto& m : set.modes) f.push_back(m.frequency_hz);
            row(method_name(set.method), f);
        }
        write_text_file(out_dir / "frequency_table.csv", table.str());
    }

    // mode-shape tables (Tables 1-4 layout) and MAC matrices
    const ShapeSet truth = to_shape_set(manifest.fem_truth, manifest.beam.n_nodes());
    {
        std::ostringstream table;
        table << "mode,method";
        for (int n = 0; n < manifest.beam.n_nodes(); ++n) table << ",n" << n + 1;
        table << '\n';
        for (std::size_t k = 0; k < manifest.fem_truth.frequencies_hz.size(); ++k) {
            table << k + 1 << ",FEM";
            for (int i = 0; i < manifest.fem_truth.shapes.rows(); ++i) {
                table << ',' << manifest.fem_truth.shapes(i, static_cast<int>(k));
            }
            table << '\n';
            for (const auto& set : identified) {
                if (set.modes.size() <= k) continue;
                ShapeSet aligned = to_shape_set(set);
                try {
                    aligned = align(aligned, truth);
                } catch (const InvalidArgument&) {
                    // pairing conflicts already fail the report; table shows raw
                }
                table << k + 1 << ',' << method_name(set.method);
                for (int i = 0; i < aligned.shapes.rows(); ++i) {
                    table << ',' << aligned.shapes(i, static_cast<int>(k));
                }
                table << '\n';
            }
        }
        write_text_file(out_dir / "shape_tables.csv", table.str());
    }

    for (const auto& set : identified) {
        ShapeSet ident = to_shape_set(set);
        if (ident.frequencies_hz.size() != truth.frequencies_hz.size()) continue;
        try {
            ident = align(ident, truth);
        } catch (const InvalidArgument&) {
            continue;
        }
        const MacMatrix mm = mac_matrix(truth, ident);
        std::string name = method_name(set.method);
        std::transform(name.begin(), name.end(), name.begin(), ::tolower);
        write_mac_csv(out_dir / ("mac_fem_vs_" + name + ".csv"), mm);
    }

    write_text_file(out_dir / "report.json", report_to_json(report).dump(2) + "\n");

    std::ostringstream txt;
    for (const auto& m : report.methods) {
        txt << (m.pass ? "[PASS] " : "[FAIL] ") << m.method;
        if (!m.failures.empty()) {
            txt << ":";
            for (const auto& f : m.failures) txt << "\n         - " << f;
        }
        txt << '\n';
    }
    txt << (report.pass ? "[PASS]" : "[FAIL]") << " overall\n";
    write_text_file(out_dir / "report.txt", txt.str());
    return report;
}

BeamPipelineResult run_beam_pipeline(int beam_id, const std::filesystem::path& out_root,
                                     std::uint64_t seed) {
    RunConfig cfg = beam_preset(beam_id);
    cfg.seed = derive_seed(seed, "beam-" + std::to_string(beam_id));

    BeamPipelineResult result;
    result.dir = out_root / ("beam" + std::to_string(beam_id));
    ensure_dir(result.dir);

    result.manifest = simulate_stage(cfg, result.dir, "ambient");

    // prior mode selection: restrict the search band just above the highest
    // modeled mode, as the method expects
    cfg.peaks.band_hi_hz = 1.15 * result.manifest.fem_truth.frequencies_hz.back();

    result.pp = identify_stage(Method::PP, result.dir / "ambient_accelerations.csv", {}, cfg,
                               result.dir);
    result.fdd = identify_stage(Method::FDD, result.dir / "ambient_accelerations.csv", {}, cfg,
                                result.dir);

    RunConfig frf_cfg = cfg;
    frf_cfg.excitation.node = cfg.reference_node;
    simulate_stage(frf_cfg, result.dir, "frf");
    result.frf = identify_stage(Method::FRF, result.dir / "frf_accelerations.csv",
                                result.dir / "frf_forces.csv", frf_cfg, result.dir);

    result.report =
        compare_stage(result.manifest, {result.pp, result.fdd, result.frf}, result.dir);
    return result;
}

std::vector<BeamPipelineResult> run_all_beams(const std::filesystem::path& out_root,
                                              std::uint64_t seed, bool concurrent) {
    std::vector<BeamPipelineResult> results(4);
    if (concurrent) {
        std::vector<std::future<BeamPipelineResult>> futures;
        futures.reserve(4);
        for (int b = 1; b <= 4; ++b) {
            futures.push_back(std::async(std::launch::async,
                                         [b, &out_root, seed] {
                                             return run_beam_pipeline(b, out_root, seed);
                                         }));
        }
        for (int b = 0; b < 4; ++b) results[b] = futures[b].get();
    } else {
        for (int b = 1; b <= 4; ++b) results[b - 1] = run_beam_pipeline(b, out_root, seed);
    }
    return results;
}

}  // namespace oma
