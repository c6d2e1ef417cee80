// Longitudinal wheel/vehicle traction dynamics and the parametric
// adhesion-slip curve. Everything here is a pure function.
#pragma once

#include <array>
#include <optional>
#include <span>

namespace traction {

inline constexpr double kGravity = 9.81;   // m/s^2
inline constexpr int kWheelCount = 4;

/// Static physical description of the machine. SI units except tire pressure (bar).
struct VehicleParams {
    double wheel_mass = 160.0;     ///< m_w [kg]
    double wheel_inertia = 50.0;   ///< J_w [kg m^2]
    double vehicle_mass = 6300.0;  ///< m [kg], wheels included
    double unloaded_radius = 0.85; ///< r_0 [m]
    double tire_pressure = 1.6;    ///< p_t [bar]
    double tire_width = 0.6;       ///< b_t [m]
    double tire_rr_coeff = 0.015;  ///< rho_t, tire-deformation rolling resistance
    int wheel_count = kWheelCount;

    /// Throws Error(InvalidArgument) when an invariant is violated.
    void validate() const;
};

/// The three shape parameters of the adhesion curve that stay fixed for a
/// family of similar surfaces; only the scale `a` varies inside a family.
struct CurveShape {
    double p = 0.5;
    double alpha1 = -8.0;
    double alpha2 = -1.5;
};

/// One ground condition: adhesion curve plus soil-deformation rolling resistance.
struct SoilParams {
    double a = 0.7;
    double p = 0.5;
    double alpha1 = -8.0;
    double alpha2 = -1.5;
    double rho_s = 0.06;

    CurveShape shape() const { return {p, alpha1, alpha2}; }
    static SoilParams from_shape(double a, const CurveShape& shape, double rho_s) {
        return {a, shape.p, shape.alpha1, shape.alpha2, rho_s};
    }

    void validate() const;
};

struct WheelState {
    double angular_speed = 0.0;  ///< omega_w [rad/s]
    double hub_speed = 0.0;      ///< v_w [m/s]
    double vertical_force = 0.0; ///< F_z [N]
    double drive_torque = 0.0;   ///< M_d [N m]
};

/// Below this speed (m/s) for both ground speed and wheel circumference speed
/// the slip is reported as zero.
inline constexpr double kStandstillSpeed = 1e-3;
/// |D(s)| threshold under which the curve scale cannot be recovered.
inline constexpr double kCurveScaleTolerance = 1e-3;
/// |kappa + rho| threshold for the efficiency quotient.
inline constexpr double kEfficiencyTolerance = 1e-9;

/// Longitudinal slip in [-1, 1]: 1 means spinning on the spot, -1 a locked wheel.
double slip(double ground_speed, double angular_speed, double rolling_radius);

/// D(s) = 1 - p exp(alpha1 s) - (1 - p) exp(alpha2 s); mu(s) = a D(s).
double curve_shape_factor(double s, const CurveShape& shape);

double mu_curve(double s, const SoilParams& soil);

/// d mu / d s.
double mu_curve_slope(double s, const SoilParams& soil);

/// Recovers the curve scale `a` from one (mu, s) operating point.
/// Throws Error(DegenerateSlip) when |D(s)| <= kCurveScaleTolerance.
double invert_mu_for_a(double mu, double s, const CurveShape& shape);

/// Non-throwing variant used on the estimation hot path.
std::optional<double> try_invert_mu_for_a(double mu, double s, const CurveShape& shape);

/// Dynamic rolling radius r_d = r_0 - dr with the empirical tire deflection
///
///   dr = F_z / (2 pi 1e5 p_t sqrt(b_t / 2 * r_0))
///
/// where 1e5 converts p_t from bar to Pa. Example: F_z = 20 kN, p_t = 1.6 bar,
/// b_t = 0.6 m, r_0 = 0.85 m gives dr = 20000 / 507656 = 0.0394 m.
/// Throws Error(NonPositiveRadius) if the deflection reaches r_0.
double rolling_radius(double vertical_force, const VehicleParams& params);

/// Wheel spin acceleration from the torque balance
/// J_w domega = M_d - r_d mu F_z - r_d rho_t F_z.
double wheel_accel(const WheelState& wheel, double mu, const VehicleParams& params);

/// Same balance with a precomputed rolling radius.
double wheel_accel(double drive_torque, double vertical_force, double rolling_radius, double mu,
                   const VehicleParams& params);

/// Vehicle longitudinal acceleration m dv = sum mu_i F_zi - F_dx - rho_s m g.
double vehicle_accel(std::span<const double, kWheelCount> mu,
                     std::span<const double, kWheelCount> vertical_forces, double drawbar_pull,
                     double rho_s, const VehicleParams& params);

/// kappa = mu - rho_s.
double net_traction(double mu, double rho_s);

/// eta = kappa / (kappa + rho) (1 - s). Throws Error(DivisionDegenerate) near kappa + rho = 0.
double efficiency(double kappa, double rho, double s);

/// Ground reaction on one wheel from its axle load: F_z = m_w a_z + m_w g + F_z,axle.
double vertical_force(double axle_load, double vertical_accel, const VehicleParams& params);

/// Per-wheel ground reactions (FL, FR, RL, RR) from the measured front axle load.
/// The rear axle carries the static remainder m g - F_zf - 4 m_w g; each axle
/// load is split equally between left and right.
std::array<double, kWheelCount> wheel_vertical_forces(double front_axle_load,
                                                      const VehicleParams& params);

} // namespace traction
