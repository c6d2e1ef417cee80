// End-to-end runner: simulate -> estimate -> map -> metrics, plus the file
// outputs written by the command-line tool.
#pragma once

#include "traction/estimator.hpp"
#include "traction/mapping.hpp"
#include "traction/metrics.hpp"
#include "traction/scenario_io.hpp"
#include "traction/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace traction {

struct MappingOptions {
    double resolution = 1.0;
    bool interpolate = true;
    InterpolationConfig interpolation;
    double burn_in = 2.0; ///< estimates before this time are not mapped
};

struct EstimationRun {
    std::vector<EstimateRecord> estimates;
    int clamp_violations = 0;
};

/// Runs the estimator over a telemetry stream, one record per sample.
EstimationRun estimate(std::span<const TelemetrySample> telemetry, const EstimatorConfig& config);

/// Raw map of (a, p, alpha1, alpha2, rho_s) from records carrying a curve
/// scale; the first mapped position becomes the grid origin.
GroundMap build_map(std::span<const EstimateRecord> estimates, const CurveShape& family,
                    const MappingOptions& options);

struct PipelineResult {
    SimulationResult simulation;
    EstimationRun estimation;
    GroundMap raw_map;
    GroundMap map; ///< interpolated unless disabled
    MetricsReport metrics;
};

PipelineResult run_pipeline(const ScenarioFile& file, const MappingOptions& mapping,
                            const MetricsOptions& metrics = {});

struct RunConfig {
    std::filesystem::path scenario;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> resolution;
    std::optional<double> eps_low, eps_mid, eps_high;
    std::optional<double> w_low, w_mid, w_high;
    bool interpolate = true;
};

/// Loads the scenario, applies overrides, runs the pipeline and writes every
/// output into out_dir. Nothing is written if loading or any stage fails.
MetricsReport run(const RunConfig& config);

/// Mapping options of a scenario file with the command-line overrides applied.
MappingOptions mapping_options(const ScenarioFile& file, const RunConfig& config);

/// Writes map_<layer>.csv for every layer, prefixed (e.g. "map_raw_").
void write_map_layers(const std::filesystem::path& dir, const GroundMap& map, std::string_view prefix);

void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace traction
