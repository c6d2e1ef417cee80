// traction: simulate, identify and map ground traction parameters.
//
//   traction run <scenario.json> [--out DIR] [--seed N] [--eps-low M] [--eps-mid M]
//                [--eps-high M] [--w-low X] [--w-mid X] [--w-high X]
//                [--resolution M] [--no-interpolate]
//   traction replay <telemetry.csv> [--scenario FILE] [--truth truth.csv] [--out DIR] ...
//   traction export-map <map_state.json> --layer NAME [--out FILE]
//
// Exit codes: 0 success, 1 configuration error, 2 pipeline error.

#include "traction/csv_io.hpp"
#include "traction/error.hpp"
#include "traction/mapping.hpp"
#include "traction/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace traction;

constexpr int kExitConfig = 1;
constexpr int kExitPipeline = 2;

void add_mapping_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--out", cfg.out_dir, "Output directory");
    cmd->add_option("--resolution", cfg.resolution, "Map resolution [m/cell]");
    cmd->add_option("--eps-low", cfg.eps_low, "Outer search threshold [m]");
    cmd->add_option("--eps-mid", cfg.eps_mid, "Middle search threshold [m]");
    cmd->add_option("--eps-high", cfg.eps_high, "Inner search threshold [m]");
    cmd->add_option("--w-low", cfg.w_low, "Weight of the outer band");
    cmd->add_option("--w-mid", cfg.w_mid, "Weight of the middle band");
    cmd->add_option("--w-high", cfg.w_high, "Weight of the inner band");
    cmd->add_flag("--no-interpolate", [&cfg](std::int64_t) { cfg.interpolate = false; },
                  "Export the raw map only");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument: return kExitConfig;
    default: return kExitPipeline;
    }
}

int do_run(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const MetricsReport report = run(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << metrics_to_text(report) << "runtime: " << seconds << " s\n"
              << "outputs written to " << cfg.out_dir.string() << "\n";
    return 0;
}

int do_replay(const std::filesystem::path& telemetry_path, const std::optional<std::filesystem::path>& scenario_path,
              const std::optional<std::filesystem::path>& truth_path, const RunConfig& cfg) {
    const ScenarioFile file = scenario_path ? load_scenario(*scenario_path) : default_scenario_file();
    const MappingOptions mapping = mapping_options(file, cfg);

    std::vector<TelemetrySample> telemetry;
    {
        std::istringstream in(read_file(telemetry_path));
        try {
            telemetry = read_telemetry_csv(in);
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, e.message());
        }
    }
    std::optional<std::vector<TruthRecord>> truth;
    if (truth_path) {
        std::istringstream in(read_file(*truth_path));
        truth = read_truth_csv(in);
    }

    const EstimationRun est = estimate(telemetry, file.estimator);
    const GroundMap raw = build_map(est.estimates, file.estimator.family, mapping);
    const GroundMap map =
        mapping.interpolate && raw.filled_cells() > 0 ? interpolate(raw, mapping.interpolation) : raw;

    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream csv;
    write_estimates_csv(csv, est.estimates);
    write_text_file(cfg.out_dir / "estimates.csv", csv.str());
    write_map_layers(cfg.out_dir, raw, "map_raw_");
    write_map_layers(cfg.out_dir, map, "map_");
    write_text_file(cfg.out_dir / "map_state.json", map_to_json(map));

    if (truth) {
        MetricsReport report = compute_metrics(est.estimates, *truth, file.scenario.field, file.estimator.family);
        report.map_coverage = map.coverage();
        report.clamp_violations = est.clamp_violations;
        write_text_file(cfg.out_dir / "metrics.json", metrics_to_json(report));
        std::cout << metrics_to_text(report);
    }
    std::cout << "replayed " << telemetry.size() << " samples into " << cfg.out_dir.string() << "\n";
    return 0;
}

int do_export(const std::filesystem::path& state, const std::string& layer, const std::optional<std::filesystem::path>& out) {
    const auto index = layer_index(layer);
    if (!index) throw Error(ErrorKind::Config, "unknown layer '" + layer + "' (a, p, alpha1, alpha2, rho_s)");
    GroundMap map;
    try {
        map = map_from_json(read_file(state));
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.message());
    }
    std::ostringstream csv;
    write_layer_csv(csv, map, *index);
    if (out) write_text_file(*out, csv.str());
    else std::cout << csv.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online traction parameter identification and ground-condition mapping"};
    app.require_subcommand(1);

    RunConfig run_cfg;
    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario, estimate, map and score it");
    run_cmd->add_option("scenario", run_cfg.scenario, "Scenario JSON file")->required();
    run_cmd->add_option("--seed", run_cfg.seed, "Override the scenario seed");
    add_mapping_flags(run_cmd, run_cfg);

    RunConfig replay_cfg;
    std::filesystem::path telemetry_path;
    std::optional<std::filesystem::path> replay_scenario, replay_truth;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run estimation and mapping on recorded telemetry");
    replay_cmd->add_option("telemetry", telemetry_path, "Telemetry CSV")->required();
    replay_cmd->add_option("--scenario", replay_scenario, "Scenario JSON for vehicle and estimator settings");
    replay_cmd->add_option("--truth", replay_truth, "Truth CSV to score against");
    add_mapping_flags(replay_cmd, replay_cfg);

    std::filesystem::path state_path;
    std::string layer;
    std::optional<std::filesystem::path> export_out;
    auto* export_cmd = app.add_subcommand("export-map", "Export one layer of a saved map state as CSV");
    export_cmd->add_option("state", state_path, "map_state.json")->required();
    export_cmd->add_option("--layer", layer, "a, p, alpha1, alpha2 or rho_s")->required();
    export_cmd->add_option("--out", export_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) return do_run(run_cfg);
        if (*replay_cmd) return do_replay(telemetry_path, replay_scenario, replay_truth, replay_cfg);
        if (*export_cmd) return do_export(state_path, layer, export_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return 0;
}
