#include "traction/dynamics.hpp"

#include "traction/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace traction {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw Error(ErrorKind::InvalidArgument, message);
}

} // namespace

void VehicleParams::validate() const {
    require(wheel_mass > 0, "wheel_mass must be positive");
    require(wheel_inertia > 0, "wheel_inertia must be positive");
    require(vehicle_mass > 0, "vehicle_mass must be positive");
    require(vehicle_mass > wheel_count * wheel_mass, "vehicle_mass must exceed the wheel masses");
    require(unloaded_radius > 0, "unloaded_radius must be positive");
    require(tire_pressure > 0, "tire_pressure must be positive");
    require(tire_width > 0, "tire_width must be positive");
    require(tire_rr_coeff >= 0 && tire_rr_coeff <= 0.1, "tire_rr_coeff must lie in [0, 0.1]");
    require(wheel_count == kWheelCount, "wheel_count must be 4");
}

void SoilParams::validate() const {
    require(a > 0, "soil a must be positive");
    require(p >= 0 && p <= 1, "soil p must lie in [0, 1]");
    require(alpha1 < 0, "soil alpha1 must be negative");
    require(alpha2 < 0, "soil alpha2 must be negative");
    require(rho_s >= 0 && rho_s <= 0.5, "soil rho_s must lie in [0, 0.5]");
}

double slip(double ground_speed, double angular_speed, double rolling_radius) {
    const double v = std::abs(ground_speed);
    const double circumferential = rolling_radius * std::abs(angular_speed);
    if (v < kStandstillSpeed && circumferential < kStandstillSpeed) return 0.0;
    const double s = v <= circumferential ? 1.0 - v / circumferential : -1.0 + circumferential / v;
    return std::clamp(s, -1.0, 1.0);
}

double curve_shape_factor(double s, const CurveShape& shape) {
    return 1.0 - shape.p * std::exp(shape.alpha1 * s) - (1.0 - shape.p) * std::exp(shape.alpha2 * s);
}

double mu_curve(double s, const SoilParams& soil) {
    return soil.a - soil.p * soil.a * std::exp(soil.alpha1 * s) -
           soil.a * (1.0 - soil.p) * std::exp(soil.alpha2 * s);
}

double mu_curve_slope(double s, const SoilParams& soil) {
    return -soil.a * (soil.p * soil.alpha1 * std::exp(soil.alpha1 * s) +
                      (1.0 - soil.p) * soil.alpha2 * std::exp(soil.alpha2 * s));
}

std::optional<double> try_invert_mu_for_a(double mu, double s, const CurveShape& shape) {
    const double d = curve_shape_factor(s, shape);
    if (!(std::abs(d) > kCurveScaleTolerance)) return std::nullopt;
    return mu / d;
}

double invert_mu_for_a(double mu, double s, const CurveShape& shape) {
    if (auto a = try_invert_mu_for_a(mu, s, shape)) return *a;
    throw Error(ErrorKind::DegenerateSlip,
                "slip " + std::to_string(s) + " carries no information about the curve scale");
}

double rolling_radius(double vertical_force, const VehicleParams& params) {
    const double stiffness = 2.0 * std::numbers::pi * 1e5 * params.tire_pressure *
                             std::sqrt(params.tire_width / 2.0 * params.unloaded_radius);
    const double deflection = vertical_force / stiffness;
    if (deflection >= params.unloaded_radius) {
        throw Error(ErrorKind::NonPositiveRadius,
                    "tire deflection " + std::to_string(deflection) + " m reaches the unloaded radius");
    }
    return params.unloaded_radius - deflection;
}

double wheel_accel(double drive_torque, double vertical_force, double rolling_radius, double mu,
                   const VehicleParams& params) {
    const double horizontal_force = mu * vertical_force;
    return (drive_torque - rolling_radius * horizontal_force -
            rolling_radius * params.tire_rr_coeff * vertical_force) /
           params.wheel_inertia;
}

double wheel_accel(const WheelState& wheel, double mu, const VehicleParams& params) {
    const double r_d = rolling_radius(wheel.vertical_force, params);
    return wheel_accel(wheel.drive_torque, wheel.vertical_force, r_d, mu, params);
}

double vehicle_accel(std::span<const double, kWheelCount> mu,
                     std::span<const double, kWheelCount> vertical_forces, double drawbar_pull,
                     double rho_s, const VehicleParams& params) {
    double traction = 0.0;
    for (int i = 0; i < kWheelCount; ++i) traction += mu[i] * vertical_forces[i];
    const double m = params.vehicle_mass;
    return (traction - drawbar_pull - rho_s * m * kGravity) / m;
}

double net_traction(double mu, double rho_s) { return mu - rho_s; }

double efficiency(double kappa, double rho, double s) {
    const double denom = kappa + rho;
    if (std::abs(denom) < kEfficiencyTolerance) {
        throw Error(ErrorKind::DivisionDegenerate, "kappa + rho vanishes");
    }
    return kappa / denom * (1.0 - s);
}

double vertical_force(double axle_load, double vertical_accel, const VehicleParams& params) {
    return params.wheel_mass * vertical_accel + params.wheel_mass * kGravity + axle_load;
}

std::array<double, kWheelCount> wheel_vertical_forces(double front_axle_load,
                                                      const VehicleParams& params) {
    const double rear_axle_load = params.vehicle_mass * kGravity - front_axle_load -
                                  kWheelCount * params.wheel_mass * kGravity;
    const double front = vertical_force(front_axle_load / 2.0, 0.0, params);
    const double rear = vertical_force(rear_axle_load / 2.0, 0.0, params);
    return {front, front, rear, rear};
}

} // namespace traction
