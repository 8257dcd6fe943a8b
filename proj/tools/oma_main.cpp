#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "oma/errors.hpp"
#include "oma/io.hpp"
#include "oma/pipeline.hpp"

namespace {

enum ExitCode {
    kOk = 0,
    kAcceptanceFailure = 1,
    kUsageError = 2,
    kIoFailure = 3,
    kNumericalFailure = 4,
};

bool verbose_logging() {
    const char* env = std::getenv("OMA_LOG");
    return env != nullptr && std::string(env) != "quiet";
}

void log_line(const std::string& msg) {
    if (verbose_logging()) std::cerr << msg << '\n';
}

oma::RunConfig load_config(const std::string& config_path, int beam_id, std::uint64_t seed,
                           bool seed_set) {
    oma::RunConfig cfg;
    if (!config_path.empty()) {
        cfg = oma::run_config_from_json(oma::read_text_file(config_path));
    } else if (beam_id > 0) {
        cfg = oma::beam_preset(beam_id);
    } else {
        throw oma::InvalidArgument("provide --config or --beam");
    }
    if (seed_set) cfg.seed = seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Output-only modal identification of beams (PP / FDD / FRF)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    bool seed_set = false;
    int beam_id = 0;
    double duration = 0.0;

    auto add_common = [&](CLI::App* cmd, bool with_beam) {
        cmd->add_option("--config", config_path, "RunConfig JSON file");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--duration", duration, "record length override [s]");
        if (with_beam) cmd->add_option("--beam", beam_id, "beam preset 1..4");
    };

    auto* sim = app.add_subcommand("simulate", "generate excitation + response records");
    add_common(sim, true);

    auto* ident = app.add_subcommand("identify", "identify modes from records on disk");
    std::string method_str = "fdd";
    std::string accel_path;
    std::string force_path;
    ident->add_option("--method", method_str, "pp | fdd | frf")->required();
    ident->add_option("--accel", accel_path, "acceleration CSV")->required();
    ident->add_option("--force", force_path, "force CSV (frf only)");
    add_common(ident, true);

    auto* cmp = app.add_subcommand("compare", "compare identified sets against a manifest");
    std::string manifest_path;
    std::vector<std::string> identified_paths;
    cmp->add_option("--manifest", manifest_path, "manifest JSON from simulate")->required();
    cmp->add_option("--identified", identified_paths, "identified-mode-set JSON files")
        ->required();
    cmp->add_option("--out", out_dir, "output directory");

    auto* pipe = app.add_subcommand("pipeline", "full experiment for one beam or all four");
    std::string beam_arg = "all";
    pipe->add_option("beam", beam_arg, "1..4 or 'all'");
    add_common(pipe, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (sim->parsed()) {
            oma::RunConfig cfg = load_config(config_path, beam_id, seed, seed_set);
            if (duration > 0.0) cfg.duration_s = duration;
            const auto manifest = oma::simulate_stage(cfg, out_dir);
            log_line("simulate: wrote " + manifest.forces_file + ", " +
                     manifest.accelerations_file + " in " + out_dir);
            return kOk;
        }
        if (ident->parsed()) {
            oma::RunConfig cfg = load_config(config_path, beam_id > 0 ? beam_id : 1, seed,
                                             seed_set);
            const oma::Method method = oma::method_from_name(method_str);
            if (method == oma::Method::FRF && force_path.empty()) {
                throw oma::InvalidArgument("frf identification needs --force");
            }
            const auto set = oma::identify_stage(method, accel_path, force_path, cfg, out_dir);
            log_line("identify: " + std::to_string(set.modes.size()) + " modes (" + method_str +
                     ") in " + out_dir);
            return kOk;
        }
        if (cmp->parsed()) {
            const auto manifest = oma::manifest_from_json(oma::read_text_file(manifest_path));
            std::vector<oma::IdentifiedModeSet> sets;
            sets.reserve(identified_paths.size());
            for (const auto& p : identified_paths) sets.push_back(oma::read_identified_json(p));
            const auto report = oma::compare_stage(manifest, sets, out_dir);
            std::cout << oma::read_text_file(std::filesystem::path(out_dir) / "report.txt");
            return report.pass ? kOk : kAcceptanceFailure;
        }
        if (pipe->parsed()) {
            bool all_pass = true;
            auto run_one = [&](const oma::BeamPipelineResult& r, int id) {
                std::cout << "beam " << id << ": "
                          << (r.report.pass ? "[PASS]" : "[FAIL]") << "  (" << r.dir.string()
                          << ")\n";
                if (!r.report.pass) all_pass = false;
            };
            if (beam_arg == "all") {
                const auto results = oma::run_all_beams(out_dir, seed);
                for (int b = 0; b < 4; ++b) run_one(results[b], b + 1);
            } else {
                const int id = std::stoi(beam_arg);
                run_one(oma::run_beam_pipeline(id, out_dir, seed), id);
            }
            return all_pass ? kOk : kAcceptanceFailure;
        }
    } catch (const oma::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const oma::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const oma::NumericalFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const oma::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kUsageError;
}
