// Scenario files: JSON with nested sections. Every key is optional and
// overrides the built-in three-soil default; unknown keys are rejected.
//
// {
//   "seed": 1, "duration": 120, "target_speed": 2.5,
//   "vehicle":    {"wheel_mass", "wheel_inertia", "vehicle_mass", "unloaded_radius",
//                  "tire_pressure", "tire_width", "tire_rr_coeff", "front_axle_share"},
//   "controller": {"kp", "ki", "power_cap", "torque_cap"},
//   "drawbar":    {"force", "ramp_time"},
//   "noise":      {"wheel_speed", "ground_speed", "torque", "front_load", "drawbar", "position"},
//   "soil_family": {"p", "alpha1", "alpha2"},
//   "field": {"width", "length", "default": {soil},
//             "regions": [{"name", "rect": [x0, y0, x1, y1] | "polygon": [[x, y], ...], soil...}]},
//   "path": [[x, y], ...],
//   "estimator": {...}, "mapping": {"resolution", "eps_low", ..., "w_high"}
// }
//
// A soil is {"a", "rho_s"} plus optional "p", "alpha1", "alpha2" that default
// to the soil family.
#pragma once

#include "traction/estimator.hpp"
#include "traction/mapping.hpp"
#include "traction/sim.hpp"

#include <filesystem>
#include <string_view>

namespace traction {

struct ScenarioFile {
    ScenarioSpec scenario;
    EstimatorConfig estimator;
    InterpolationConfig interpolation;
    double map_resolution = 1.0;
};

/// Built-in defaults: default_scenario() with an estimator matched to its sensors.
ScenarioFile default_scenario_file();

/// Throws Error(Config) with the offending key on malformed input.
ScenarioFile parse_scenario(std::string_view json_text);
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Serializes the full effective configuration (useful for provenance).
std::string scenario_to_json(const ScenarioFile& file);

} // namespace traction
