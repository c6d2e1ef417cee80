#include "traction/pipeline.hpp"

#include "traction/csv_io.hpp"
#include "traction/error.hpp"

#include <fstream>
#include <sstream>

namespace traction {

EstimationRun estimate(std::span<const TelemetrySample> telemetry, const EstimatorConfig& config) {
    TractionEstimator estimator(config);
    EstimationRun run;
    run.estimates.reserve(telemetry.size());
    for (const TelemetrySample& s : telemetry) {
        run.estimates.push_back(estimator.step(s.input(), s.measurement(), s.t, s.position));
    }
    run.clamp_violations = estimator.clamp_violations();
    return run;
}

GroundMap build_map(std::span<const EstimateRecord> estimates, const CurveShape& family,
                    const MappingOptions& options) {
    GroundMap map;
    bool started = false;
    for (const EstimateRecord& e : estimates) {
        if (e.t < options.burn_in || !e.curve_scale) continue;
        if (!started) {
            map = GroundMap(e.position, options.resolution, 1, 1);
            started = true;
        }
        insert_growing(map, e.position, {*e.curve_scale, family.p, family.alpha1, family.alpha2, e.soil_resistance});
    }
    return map;
}

PipelineResult run_pipeline(const ScenarioFile& file, const MappingOptions& mapping, const MetricsOptions& metrics) {
    PipelineResult r;
    r.simulation = simulate(file.scenario);
    r.estimation = estimate(r.simulation.telemetry, file.estimator);
    r.raw_map = build_map(r.estimation.estimates, file.estimator.family, mapping);
    const bool mapped = r.raw_map.filled_cells() > 0;
    r.map = mapping.interpolate && mapped ? interpolate(r.raw_map, mapping.interpolation) : r.raw_map;
    r.metrics = compute_metrics(r.estimation.estimates, r.simulation.truth, file.scenario.field,
                                file.estimator.family, metrics);
    r.metrics.map_coverage = r.map.coverage();
    r.metrics.clamp_violations = r.estimation.clamp_violations;
    return r;
}

MappingOptions mapping_options(const ScenarioFile& file, const RunConfig& config) {
    MappingOptions m;
    m.resolution = config.resolution.value_or(file.map_resolution);
    m.interpolate = config.interpolate;
    m.interpolation = file.interpolation;
    if (config.eps_low) m.interpolation.eps_low = *config.eps_low;
    if (config.eps_mid) m.interpolation.eps_mid = *config.eps_mid;
    if (config.eps_high) m.interpolation.eps_high = *config.eps_high;
    if (config.w_low) m.interpolation.w_low = *config.w_low;
    if (config.w_mid) m.interpolation.w_mid = *config.w_mid;
    if (config.w_high) m.interpolation.w_high = *config.w_high;
    try {
        m.interpolation.validate();
        if (!(m.resolution > 0)) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.message());
    }
    return m;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

void write_map_layers(const std::filesystem::path& dir, const GroundMap& map, std::string_view prefix) {
    for (int k = 0; k < kMapLayers; ++k) {
        std::ostringstream csv;
        write_layer_csv(csv, map, k);
        write_text_file(dir / (std::string(prefix) + std::string(kLayerNames[k]) + ".csv"), csv.str());
    }
}

MetricsReport run(const RunConfig& config) {
    ScenarioFile file = load_scenario(config.scenario);
    if (config.seed) file.scenario.seed = *config.seed;
    const MappingOptions mapping = mapping_options(file, config);

    const PipelineResult r = run_pipeline(file, mapping);

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + config.out_dir.string() + "': " + ec.message());

    auto write_csv = [&](const std::string& name, auto&& writer) {
        std::ostringstream os;
        writer(os);
        write_text_file(config.out_dir / name, os.str());
    };
    write_csv("telemetry.csv", [&](std::ostream& os) { write_telemetry_csv(os, r.simulation.telemetry); });
    write_csv("truth.csv", [&](std::ostream& os) { write_truth_csv(os, r.simulation.truth); });
    write_csv("estimates.csv", [&](std::ostream& os) { write_estimates_csv(os, r.estimation.estimates); });
    write_csv("series.csv",
              [&](std::ostream& os) { write_series_csv(os, r.estimation.estimates, r.simulation.truth); });
    write_map_layers(config.out_dir, r.raw_map, "map_raw_");
    write_map_layers(config.out_dir, r.map, "map_");
    write_text_file(config.out_dir / "map_state.json", map_to_json(r.map));
    write_text_file(config.out_dir / "map_raw_state.json", map_to_json(r.raw_map));
    write_text_file(config.out_dir / "scenario_effective.json", scenario_to_json(file));
    write_text_file(config.out_dir / "metrics.json", metrics_to_json(r.metrics));
    write_text_file(config.out_dir / "report.txt", metrics_to_text(r.metrics));
    return r.metrics;
}

} // namespace traction
