// Traction parameter identification: the 10-state wheel/vehicle model wired
// into the adaptive UKF, plus per-sample extraction of the curve scale `a`.
#pragma once

#include "traction/dynamics.hpp"
#include "traction/point.hpp"
#include "traction/ukf.hpp"

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>

namespace traction {

/// State layout: 0-3 wheel speeds, 4 ground speed, 5-8 adhesion, 9 soil rolling resistance.
struct TractionState {
    static constexpr int kDim = 10;
    static constexpr int kGroundSpeed = 4;
    static constexpr int kAdhesion = 5;
    static constexpr int kSoilResistance = 9;

    std::array<double, kWheelCount> wheel_speed{};
    double ground_speed = 0.0;
    std::array<double, kWheelCount> adhesion{};
    double soil_resistance = 0.0;

    Eigen::VectorXd to_vector() const;
    static TractionState from_vector(const Eigen::VectorXd& x);
};

struct TractionInput {
    static constexpr int kDim = 6;

    std::array<double, kWheelCount> drive_torque{}; ///< M_d1..4 [N m]
    double front_axle_load = 0.0;                   ///< F_zf [N], both front wheels
    double drawbar_pull = 0.0;                      ///< F_dx [N]

    Eigen::VectorXd to_vector() const;
    static TractionInput from_vector(const Eigen::VectorXd& u);
};

struct TractionMeasurement {
    static constexpr int kDim = 5;

    std::array<double, kWheelCount> wheel_speed{};
    double ground_speed = 0.0;

    Eigen::VectorXd to_vector() const;
    static TractionMeasurement from_vector(const Eigen::VectorXd& y);
};

struct EstimateRecord {
    double t = 0.0;
    Point2 position;
    std::array<double, kWheelCount> adhesion{};
    double soil_resistance = 0.0;
    std::array<double, kWheelCount> slip{};
    /// Mean of the per-wheel curve-scale inversions that succeeded.
    std::optional<double> curve_scale;
    std::array<double, TractionState::kDim> cov_diagonal{};
    double fuzzy_factor = 1.0;
};

/// Integrates the wheel torque balances and the vehicle force balance over dt
/// with RK4. Adhesion and soil resistance are held constant over the step.
TractionState process_model(const TractionState& x, const TractionInput& u, double dt,
                            const VehicleParams& params);

TractionMeasurement measurement_model(const TractionState& x);

struct IntensityScales {
    double torque_rate = 1000.0; ///< per-wheel |dM/dt| [N m/s] that saturates the signal
    double acceleration = 0.5;   ///< |dv/dt| [m/s^2] that saturates the signal
};

/// Normalized maneuver intensity in [0, 1] from the first and last entries of
/// the windows: mean per-wheel torque rate and ground acceleration, each
/// divided by its saturation scale, combined by max.
double dynamics_intensity(std::span<const TractionInput> recent_inputs,
                          std::span<const TractionMeasurement> recent_measurements, double dt,
                          const IntensityScales& scales = {});

struct EstimatorConfig {
    VehicleParams vehicle;
    CurveShape family;
    double sample_period = 0.1;

    double initial_adhesion = 0.3;
    double initial_soil_resistance = 0.05;
    double initial_speed_std = 0.1;
    double initial_adhesion_std = 0.2;
    double initial_soil_resistance_std = 0.05;

    double speed_process_var = 1e-2;
    double adhesion_process_var = 1e-4;
    double soil_resistance_process_var = 1e-5;

    double wheel_speed_noise = 0.02;  ///< sigma of the wheel-speed sensors [rad/s]
    double ground_speed_noise = 0.03; ///< sigma of the ground-speed sensor [m/s]
    double measurement_noise_floor = 1e-3;

    ukf::SigmaScaling scaling;
    bool adapt_process_noise = true;
    ukf::AdaptationConfig adaptation;
    bool fuzzy_supervision = true;
    ukf::FuzzyConfig fuzzy;
    IntensityScales intensity;
    std::size_t intensity_window = 10;

    double adhesion_min = -0.2;
    double adhesion_max = 1.5;
    double soil_resistance_min = 0.0;
    double soil_resistance_max = 0.5;
};

ukf::NonlinearModel make_traction_model(const VehicleParams& params, double dt);
ukf::NoiseSpec make_noise_spec(const EstimatorConfig& config);

/// Numerical rank of [H; HF; ...; HF^(n-1)] with a relative singular-value tolerance.
int observability_rank(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& output,
                       double relative_tolerance = 1e-10);

/// Linearizes the sampled model at (x0, u) by central differences and checks full rank.
bool observability_check(const VehicleParams& params, const TractionState& x0,
                         const TractionInput& u, double dt = 0.1);

class TractionEstimator {
public:
    explicit TractionEstimator(EstimatorConfig config);

    /// One filter cycle. The first call only initializes the state from the
    /// measurement. `u` is the input applied over the interval ending at `t`.
    EstimateRecord step(const TractionInput& u, const TractionMeasurement& y, double t,
                        Point2 position);

    const ukf::FilterState& filter_state() const { return fs_; }
    const EstimatorConfig& config() const { return config_; }
    bool initialized() const { return initialized_; }
    /// Number of times a clamped state entry had left its plausible range.
    int clamp_violations() const { return clamp_violations_; }
    double last_intensity() const { return last_intensity_; }

private:
    void initialize(const TractionMeasurement& y);
    EstimateRecord make_record(double t, Point2 position, const TractionInput& u) const;
    void clamp_parameters();

    EstimatorConfig config_;
    ukf::NonlinearModel model_;
    ukf::NoiseSpec noise_;
    ukf::FilterState fs_;
    std::deque<TractionInput> input_window_;
    std::deque<TractionMeasurement> measurement_window_;
    bool initialized_ = false;
    int clamp_violations_ = 0;
    double last_intensity_ = 0.0;
};

} // namespace traction
