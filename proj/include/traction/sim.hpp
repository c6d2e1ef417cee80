// Ground-truth simulator: a four-wheel vehicle following a waypoint path over
// a field of soil regions, sampled into noisy 10 Hz telemetry.
#pragma once

#include "traction/dynamics.hpp"
#include "traction/estimator.hpp"
#include "traction/point.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace traction {

/// Closed axis-aligned rectangle.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

/// Simple polygon; points on an edge count as inside.
struct Polygon {
    std::vector<Point2> vertices;
    bool contains(Point2 p) const;
};

struct SoilRegion {
    std::string name;
    std::variant<Rect, Polygon> shape;
    SoilParams soil;

    bool contains(Point2 p) const;
};

struct FieldSpec {
    double width = 120.0;  ///< extent along x [m]
    double length = 40.0;  ///< extent along y [m]
    std::vector<SoilRegion> regions;
    std::string default_name = "default";
    SoilParams default_soil;

    bool within_extent(Point2 p) const { return p.x >= 0 && p.y >= 0 && p.x <= width && p.y <= length; }
};

inline constexpr int kDefaultSoilIndex = -1;

/// Index of the first region containing pos, or kDefaultSoilIndex.
/// Throws Error(OutOfField) outside the field extent.
int soil_region_index(const FieldSpec& field, Point2 pos);
const SoilParams& soil_lookup(const FieldSpec& field, Point2 pos);
const std::string& soil_name(const FieldSpec& field, int index);

struct SensorNoise {
    double wheel_speed = 0.02;  ///< rad/s
    double ground_speed = 0.03; ///< m/s
    double torque = 20.0;       ///< N m
    double front_load = 100.0;  ///< N
    double drawbar = 100.0;     ///< N
    double position = 0.3;      ///< m

    static SensorNoise none() { return {0, 0, 0, 0, 0, 0}; }
};

/// Constant drawbar pull reached by a linear ramp from zero.
struct DrawbarProfile {
    double force = 8000.0;
    double ramp_time = 2.0;

    double at(double t) const;
};

/// Speed controller producing the total drive torque.
struct SpeedController {
    double kp = 5700.0;        ///< N m per m/s
    double ki = 1600.0;        ///< N m per m
    double power_cap = 80e3;   ///< W
    double torque_cap = 40e3;  ///< N m, all wheels together
};

struct ScenarioSpec {
    VehicleParams vehicle;
    double front_axle_share = 0.4; ///< share of the static axle load on the front axle
    FieldSpec field;
    std::vector<Point2> path;
    double target_speed = 2.5;
    DrawbarProfile drawbar;
    SensorNoise noise;
    SpeedController controller;
    double duration = 120.0;
    std::uint64_t seed = 1;
    double sample_period = 0.1;
    double internal_step = 1e-3;

    void validate() const;
    /// Static front axle load (both wheels, wheel weights excluded).
    double front_axle_load() const;
};

struct TelemetrySample {
    double t = 0.0;
    Point2 position;
    std::array<double, kWheelCount> wheel_speed{};
    double ground_speed = 0.0;
    /// Mean drive torque over the sample interval ending at t.
    std::array<double, kWheelCount> drive_torque{};
    double front_axle_load = 0.0;
    /// Mean drawbar pull over the sample interval ending at t.
    double drawbar_pull = 0.0;

    TractionInput input() const;
    TractionMeasurement measurement() const;
};

struct TruthRecord {
    double t = 0.0;
    Point2 position;
    int soil_index = kDefaultSoilIndex;
    SoilParams soil;
    std::array<double, kWheelCount> adhesion{};
    std::array<double, kWheelCount> slip{};
    double ground_speed = 0.0;
    std::array<double, kWheelCount> wheel_speed{};
    double drive_energy = 0.0; ///< integral of sum M_i omega_i since t = 0 [J]
    double drawbar_work = 0.0; ///< integral of F_dx v since t = 0 [J]
};

struct SimulationResult {
    std::vector<TelemetrySample> telemetry;
    std::vector<TruthRecord> truth;
};

/// Position after travelling `distance` along the polyline; past the last
/// waypoint the final segment is extended.
Point2 path_position(std::span<const Point2> path, double distance);

/// Deterministic for a fixed scenario (seed included). Throws
/// Error(ScenarioInfeasible) if 10% of the target speed is not reached within 30 s.
SimulationResult simulate(const ScenarioSpec& scenario);

/// Three parallel soil strips crossed by a back-and-forth path.
ScenarioSpec default_scenario();

/// The curve shape shared by the default soil presets.
CurveShape stubble_family();

} // namespace traction
