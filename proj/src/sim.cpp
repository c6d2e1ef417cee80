#include "traction/sim.hpp"

#include "traction/error.hpp"
#include "traction/integrators.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace traction {

namespace {

bool on_segment(Point2 p, Point2 a, Point2 b) {
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    const double scale = std::max({1.0, std::abs(b.x - a.x), std::abs(b.y - a.y)});
    if (std::abs(cross) > 1e-12 * scale * scale) return false;
    return p.x >= std::min(a.x, b.x) - 1e-12 && p.x <= std::max(a.x, b.x) + 1e-12 &&
           p.y >= std::min(a.y, b.y) - 1e-12 && p.y <= std::max(a.y, b.y) + 1e-12;
}

} // namespace

bool Polygon::contains(Point2 p) const {
    const std::size_t n = vertices.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = vertices[i];
        const Point2 b = vertices[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

bool SoilRegion::contains(Point2 p) const {
    return std::visit([p](const auto& s) { return s.contains(p); }, shape);
}

int soil_region_index(const FieldSpec& field, Point2 pos) {
    if (!field.within_extent(pos)) {
        throw Error(ErrorKind::OutOfField, fmt::format("position ({:.3f}, {:.3f}) is outside the {} x {} m field",
                                                       pos.x, pos.y, field.width, field.length));
    }
    for (std::size_t k = 0; k < field.regions.size(); ++k) {
        if (field.regions[k].contains(pos)) return static_cast<int>(k);
    }
    return kDefaultSoilIndex;
}

const SoilParams& soil_lookup(const FieldSpec& field, Point2 pos) {
    const int k = soil_region_index(field, pos);
    return k == kDefaultSoilIndex ? field.default_soil : field.regions[static_cast<std::size_t>(k)].soil;
}

const std::string& soil_name(const FieldSpec& field, int index) {
    return index == kDefaultSoilIndex ? field.default_name : field.regions.at(static_cast<std::size_t>(index)).name;
}

double DrawbarProfile::at(double t) const {
    if (t <= 0.0) return 0.0;
    if (ramp_time <= 0.0 || t >= ramp_time) return force;
    return force * t / ramp_time;
}

void ScenarioSpec::validate() const {
    vehicle.validate();
    field.default_soil.validate();
    for (const auto& r : field.regions) r.soil.validate();
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    if (!(duration > 0)) fail("duration must be positive");
    if (!(target_speed > 0)) fail("target speed must be positive");
    if (!(front_axle_share > 0 && front_axle_share < 1)) fail("front axle share must lie in (0, 1)");
    if (path.size() < 2) fail("path needs at least two waypoints");
    if (!(sample_period > 0) || !(internal_step > 0) || internal_step > sample_period) {
        fail("internal step must be positive and no longer than the sample period");
    }
    const double ratio = sample_period / internal_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) fail("sample period must be a multiple of the internal step");
    if (!(field.width > 0 && field.length > 0)) fail("field extent must be positive");
    if (!(controller.power_cap > 0 && controller.torque_cap > 0 && controller.kp > 0 && controller.ki >= 0)) {
        fail("controller gains and caps must be positive");
    }
    const auto noise_values = {noise.wheel_speed, noise.ground_speed, noise.torque,
                               noise.front_load,  noise.drawbar,      noise.position};
    for (double s : noise_values) {
        if (!(s >= 0)) fail("sensor noise must be nonnegative");
    }
}

double ScenarioSpec::front_axle_load() const {
    const double axle_total =
        (vehicle.vehicle_mass - kWheelCount * vehicle.wheel_mass) * kGravity;
    return front_axle_share * axle_total;
}

TractionInput TelemetrySample::input() const {
    return {drive_torque, front_axle_load, drawbar_pull};
}

TractionMeasurement TelemetrySample::measurement() const { return {wheel_speed, ground_speed}; }

Point2 path_position(std::span<const Point2> path, double distance) {
    if (path.empty()) return {};
    if (path.size() == 1) return path.front();
    double remaining = std::max(distance, 0.0);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const Point2 a = path[k];
        const Point2 b = path[k + 1];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const bool last = k + 2 == path.size();
        if (len > 0.0 && (remaining <= len || last)) {
            const double f = remaining / len;
            return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
        }
        remaining -= len;
    }
    return path.back();
}

namespace {

// omega_1..4, v, distance along the path, drive energy, drawbar work.
using PlantState = Eigen::Matrix<double, 8, 1>;
constexpr int kSpeed = 4;
constexpr int kDistance = 5;
constexpr int kDriveEnergy = 6;
constexpr int kDrawbarWork = 7;

/// Plant-side slip: (r w - v) / max(r w, v, kRegularizationSpeed). Equal to
/// slip() once either speed exceeds the regularization speed; below it the
/// sign follows r w - v so the ground reaction always opposes the slip.
constexpr double kRegularizationSpeed = 0.05;

double plant_slip(double v, double omega, double r) {
    const double rw = r * omega;
    return std::clamp((rw - v) / std::max({std::abs(rw), std::abs(v), kRegularizationSpeed}), -1.0, 1.0);
}

struct Plant {
    const VehicleParams& params;
    std::array<double, kWheelCount> force{};
    std::array<double, kWheelCount> radius{};
    std::array<double, kWheelCount> torque_share{};
};

PlantState plant_derivative(const Plant& plant, const PlantState& x, const SoilParams& soil,
                            const std::array<double, kWheelCount>& torque, double drawbar) {
    PlantState dx = PlantState::Zero();
    const double v = x(kSpeed);
    std::array<double, kWheelCount> mu{};
    double power = 0.0;
    for (int i = 0; i < kWheelCount; ++i) {
        mu[i] = mu_curve(plant_slip(v, x(i), plant.radius[i]), soil);
        dx(i) = wheel_accel(torque[i], plant.force[i], plant.radius[i], mu[i], plant.params);
        power += torque[i] * x(i);
    }
    dx(kSpeed) = vehicle_accel(mu, plant.force, drawbar, soil.rho_s, plant.params);
    dx(kDistance) = v;
    dx(kDriveEnergy) = power;
    dx(kDrawbarWork) = drawbar * v;
    return dx;
}

/// Upper bound on |d(accel)/d(speed)| of the slip feedback, used to subdivide
/// the fixed step when the wheels are near standstill.
double slip_stiffness(const Plant& plant, const PlantState& x, const SoilParams& soil) {
    const double v = std::abs(x(kSpeed));
    double wheel = 0.0;
    double body = 0.0;
    for (int i = 0; i < kWheelCount; ++i) {
        const double r = plant.radius[i];
        const double rw = r * std::abs(x(i));
        const double den = std::max({rw, v, kRegularizationSpeed});
        const double slope = std::abs(mu_curve_slope(plant_slip(x(kSpeed), x(i), r), soil));
        // |ds/d(rw)| and |ds/dv| are both bounded by 2 / den.
        wheel = std::max(wheel, r * r * plant.force[i] * slope * 2.0 / den / plant.params.wheel_inertia);
        body += plant.force[i] * slope * 2.0 / den / plant.params.vehicle_mass;
    }
    return wheel + body;
}

} // namespace

SimulationResult simulate(const ScenarioSpec& scenario) {
    scenario.validate();
    const VehicleParams& params = scenario.vehicle;
    const double front_load = scenario.front_axle_load();

    Plant plant{params};
    plant.force = wheel_vertical_forces(front_load, params);
    double share_total = 0.0;
    for (int i = 0; i < kWheelCount; ++i) {
        plant.radius[i] = rolling_radius(plant.force[i], params);
        share_total += plant.radius[i] * plant.force[i];
    }
    // Torque proportional to r_d F_z puts every wheel at the same adhesion.
    for (int i = 0; i < kWheelCount; ++i) plant.torque_share[i] = plant.radius[i] * plant.force[i] / share_total;

    const int steps_per_sample = static_cast<int>(std::lround(scenario.sample_period / scenario.internal_step));
    const int samples = static_cast<int>(std::lround(scenario.duration / scenario.sample_period));
    const double h = scenario.internal_step;
    const SpeedController& ctl = scenario.controller;

    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noisy = [&](double value, double sigma) { return value + sigma * gauss(rng); };

    SimulationResult result;
    result.telemetry.reserve(static_cast<std::size_t>(samples) + 1);
    result.truth.reserve(static_cast<std::size_t>(samples) + 1);

    PlantState x = PlantState::Zero();
    double integral = 0.0;
    bool reached = false;

    auto command = [&](double v) {
        const double error = scenario.target_speed - v;
        double total = ctl.kp * error + ctl.ki * integral;
        double weighted_speed = 0.0;
        for (int i = 0; i < kWheelCount; ++i) weighted_speed += plant.torque_share[i] * std::abs(x(i));
        const double limit = std::min(ctl.torque_cap, ctl.power_cap / std::max(weighted_speed, 1e-9));
        const double clamped = std::clamp(total, -limit, limit);
        const bool saturated = clamped != total;
        return std::pair{clamped, saturated};
    };

    auto record = [&](int k, const std::array<double, kWheelCount>& mean_torque, double mean_drawbar) {
        const double t = k * scenario.sample_period;
        const Point2 pos = path_position(scenario.path, x(kDistance));
        TruthRecord truth;
        truth.t = t;
        truth.position = pos;
        truth.soil_index = soil_region_index(scenario.field, pos);
        truth.soil = soil_lookup(scenario.field, pos);
        truth.ground_speed = x(kSpeed);
        for (int i = 0; i < kWheelCount; ++i) {
            truth.wheel_speed[i] = x(i);
            truth.slip[i] = slip(x(kSpeed), x(i), plant.radius[i]);
            truth.adhesion[i] = mu_curve(truth.slip[i], truth.soil);
        }
        truth.drive_energy = x(kDriveEnergy);
        truth.drawbar_work = x(kDrawbarWork);

        const SensorNoise& n = scenario.noise;
        TelemetrySample sample;
        sample.t = t;
        sample.position = {noisy(pos.x, n.position), noisy(pos.y, n.position)};
        for (int i = 0; i < kWheelCount; ++i) sample.wheel_speed[i] = noisy(x(i), n.wheel_speed);
        sample.ground_speed = noisy(x(kSpeed), n.ground_speed);
        for (int i = 0; i < kWheelCount; ++i) sample.drive_torque[i] = noisy(mean_torque[i], n.torque);
        sample.front_axle_load = noisy(front_load, n.front_load);
        sample.drawbar_pull = noisy(mean_drawbar, n.drawbar);

        result.truth.push_back(truth);
        result.telemetry.push_back(sample);
    };

    {
        const auto [total, saturated] = command(0.0);
        (void)saturated;
        std::array<double, kWheelCount> torque{};
        for (int i = 0; i < kWheelCount; ++i) torque[i] = total * plant.torque_share[i];
        record(0, torque, scenario.drawbar.at(0.0));
    }

    for (int k = 1; k <= samples; ++k) {
        std::array<double, kWheelCount> torque_sum{};
        double drawbar_sum = 0.0;
        for (int n = 0; n < steps_per_sample; ++n) {
            const double t = ((k - 1) * steps_per_sample + n) * h;
            const auto [total, saturated] = command(x(kSpeed));
            const double error = scenario.target_speed - x(kSpeed);
            if (!saturated || (total > 0) != (error > 0)) integral += error * h;

            std::array<double, kWheelCount> torque{};
            for (int i = 0; i < kWheelCount; ++i) {
                torque[i] = total * plant.torque_share[i];
                torque_sum[i] += torque[i];
            }
            const double drawbar = scenario.drawbar.at(t);
            drawbar_sum += drawbar;

            const SoilParams& soil = soil_lookup(scenario.field, path_position(scenario.path, x(kDistance)));
            const double stiffness = slip_stiffness(plant, x, soil);
            const int substeps = std::clamp(static_cast<int>(std::ceil(stiffness * h)), 1, 4096);
            const double dt = h / substeps;
            for (int sub = 0; sub < substeps; ++sub) {
                x = rk4_step(x, dt, [&](const PlantState& s) {
                    return plant_derivative(plant, s, soil, torque, drawbar);
                });
                x(kSpeed) = std::max(x(kSpeed), 0.0);
            }

            if (!reached && x(kSpeed) >= 0.1 * scenario.target_speed) reached = true;
            if (!reached && t + h >= 30.0) {
                throw Error(ErrorKind::ScenarioInfeasible,
                            fmt::format("vehicle did not reach 10% of the {:.2f} m/s target within 30 s "
                                        "(speed {:.3f} m/s); drawbar pull exceeds traction capability?",
                                        scenario.target_speed, x(kSpeed)));
            }
        }
        std::array<double, kWheelCount> mean_torque{};
        for (int i = 0; i < kWheelCount; ++i) mean_torque[i] = torque_sum[i] / steps_per_sample;
        record(k, mean_torque, drawbar_sum / steps_per_sample);
    }
    return result;
}

CurveShape stubble_family() { return {0.5, -8.0, -1.5}; }

ScenarioSpec default_scenario() {
    ScenarioSpec s;
    const CurveShape family = stubble_family();
    s.field.width = 120.0;
    s.field.length = 40.0;
    s.field.regions = {
        {"soil1", Rect{0.0, 0.0, 40.0, 40.0}, SoilParams::from_shape(0.55, family, 0.04)},
        {"soil2", Rect{40.0, 0.0, 80.0, 40.0}, SoilParams::from_shape(0.70, family, 0.06)},
        {"soil3", Rect{80.0, 0.0, 120.0, 40.0}, SoilParams::from_shape(0.85, family, 0.08)},
    };
    s.field.default_soil = SoilParams::from_shape(0.70, family, 0.06);
    s.path = {{2.0, 6.0}, {118.0, 6.0}, {118.0, 18.0}, {2.0, 18.0}, {2.0, 30.0}, {118.0, 30.0}};
    return s;
}

} // namespace traction
