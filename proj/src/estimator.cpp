#include "traction/estimator.hpp"

#include "traction/error.hpp"
#include "traction/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace traction {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd TractionState::to_vector() const {
    VectorXd x(kDim);
    for (int i = 0; i < kWheelCount; ++i) {
        x(i) = wheel_speed[i];
        x(kAdhesion + i) = adhesion[i];
    }
    x(kGroundSpeed) = ground_speed;
    x(kSoilResistance) = soil_resistance;
    return x;
}

TractionState TractionState::from_vector(const VectorXd& x) {
    if (x.size() != kDim) throw Error(ErrorKind::InvalidArgument, "traction state needs 10 entries");
    TractionState s;
    for (int i = 0; i < kWheelCount; ++i) {
        s.wheel_speed[i] = x(i);
        s.adhesion[i] = x(kAdhesion + i);
    }
    s.ground_speed = x(kGroundSpeed);
    s.soil_resistance = x(kSoilResistance);
    return s;
}

VectorXd TractionInput::to_vector() const {
    VectorXd u(kDim);
    for (int i = 0; i < kWheelCount; ++i) u(i) = drive_torque[i];
    u(4) = front_axle_load;
    u(5) = drawbar_pull;
    return u;
}

TractionInput TractionInput::from_vector(const VectorXd& u) {
    if (u.size() != kDim) throw Error(ErrorKind::InvalidArgument, "traction input needs 6 entries");
    TractionInput in;
    for (int i = 0; i < kWheelCount; ++i) in.drive_torque[i] = u(i);
    in.front_axle_load = u(4);
    in.drawbar_pull = u(5);
    return in;
}

VectorXd TractionMeasurement::to_vector() const {
    VectorXd y(kDim);
    for (int i = 0; i < kWheelCount; ++i) y(i) = wheel_speed[i];
    y(4) = ground_speed;
    return y;
}

TractionMeasurement TractionMeasurement::from_vector(const VectorXd& y) {
    if (y.size() != kDim) throw Error(ErrorKind::InvalidArgument, "traction measurement needs 5 entries");
    TractionMeasurement m;
    for (int i = 0; i < kWheelCount; ++i) m.wheel_speed[i] = y(i);
    m.ground_speed = y(4);
    return m;
}

namespace {

using StateVector = Eigen::Matrix<double, TractionState::kDim, 1>;

struct WheelLoads {
    std::array<double, kWheelCount> force{};
    std::array<double, kWheelCount> radius{};
};

WheelLoads wheel_loads(const TractionInput& u, const VehicleParams& params) {
    WheelLoads loads;
    loads.force = wheel_vertical_forces(u.front_axle_load, params);
    for (int i = 0; i < kWheelCount; ++i) loads.radius[i] = rolling_radius(loads.force[i], params);
    return loads;
}

} // namespace

TractionState process_model(const TractionState& x, const TractionInput& u, double dt,
                            const VehicleParams& params) {
    const WheelLoads loads = wheel_loads(u, params);

    auto derivative = [&](const StateVector& s) {
        StateVector dx = StateVector::Zero();
        std::array<double, kWheelCount> mu{};
        for (int i = 0; i < kWheelCount; ++i) {
            mu[i] = s(TractionState::kAdhesion + i);
            dx(i) = wheel_accel(u.drive_torque[i], loads.force[i], loads.radius[i], mu[i], params);
        }
        dx(TractionState::kGroundSpeed) =
            vehicle_accel(mu, loads.force, u.drawbar_pull, s(TractionState::kSoilResistance), params);
        return dx;
    };

    const StateVector start = x.to_vector();
    const StateVector end = rk4_step(start, dt, derivative);
    return TractionState::from_vector(end);
}

TractionMeasurement measurement_model(const TractionState& x) {
    TractionMeasurement y;
    y.wheel_speed = x.wheel_speed;
    y.ground_speed = x.ground_speed;
    return y;
}

double dynamics_intensity(std::span<const TractionInput> recent_inputs,
                          std::span<const TractionMeasurement> recent_measurements, double dt,
                          const IntensityScales& scales) {
    double signal = 0.0;
    if (recent_inputs.size() >= 2) {
        const auto& first = recent_inputs.front();
        const auto& last = recent_inputs.back();
        const double span_s = dt * static_cast<double>(recent_inputs.size() - 1);
        double rate = 0.0;
        for (int i = 0; i < kWheelCount; ++i) rate += std::abs(last.drive_torque[i] - first.drive_torque[i]);
        rate /= kWheelCount * span_s;
        signal = std::max(signal, rate / scales.torque_rate);
    }
    if (recent_measurements.size() >= 2) {
        const double span_s = dt * static_cast<double>(recent_measurements.size() - 1);
        const double accel =
            std::abs(recent_measurements.back().ground_speed - recent_measurements.front().ground_speed) / span_s;
        signal = std::max(signal, accel / scales.acceleration);
    }
    return std::clamp(signal, 0.0, 1.0);
}

ukf::NonlinearModel make_traction_model(const VehicleParams& params, double dt) {
    ukf::NonlinearModel model;
    model.state_dim = TractionState::kDim;
    model.input_dim = TractionInput::kDim;
    model.output_dim = TractionMeasurement::kDim;
    model.process = [params, dt](const VectorXd& x, const VectorXd& u) {
        return process_model(TractionState::from_vector(x), TractionInput::from_vector(u), dt, params)
            .to_vector();
    };
    model.measure = [](const VectorXd& x) { return VectorXd(x.head(TractionMeasurement::kDim)); };
    return model;
}

ukf::NoiseSpec make_noise_spec(const EstimatorConfig& config) {
    ukf::NoiseSpec noise;
    VectorXd q(TractionState::kDim);
    q.head(5).setConstant(config.speed_process_var);
    q.segment(TractionState::kAdhesion, kWheelCount).setConstant(config.adhesion_process_var);
    q(TractionState::kSoilResistance) = config.soil_resistance_process_var;
    noise.process = q.asDiagonal();

    const double floor = config.measurement_noise_floor;
    VectorXd r(TractionMeasurement::kDim);
    r.head(kWheelCount).setConstant(std::pow(std::max(config.wheel_speed_noise, floor), 2));
    r(4) = std::pow(std::max(config.ground_speed_noise, floor), 2);
    noise.measurement = r.asDiagonal();
    return noise;
}

int observability_rank(const MatrixXd& transition, const MatrixXd& output, double relative_tolerance) {
    const auto n = transition.rows();
    const auto m = output.rows();
    MatrixXd obs(m * n, n);
    MatrixXd block = output;
    for (Eigen::Index k = 0; k < n; ++k) {
        obs.middleRows(k * m, m) = block;
        block = block * transition;
    }
    Eigen::JacobiSVD<MatrixXd> svd(obs);
    const VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > relative_tolerance * sv(0)) ++rank;
    }
    return rank;
}

bool observability_check(const VehicleParams& params, const TractionState& x0, const TractionInput& u,
                         double dt) {
    const VectorXd base = x0.to_vector();
    const int n = TractionState::kDim;
    MatrixXd jacobian(n, n);
    for (int j = 0; j < n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(base(j)));
        VectorXd plus = base, minus = base;
        plus(j) += h;
        minus(j) -= h;
        jacobian.col(j) = (process_model(TractionState::from_vector(plus), u, dt, params).to_vector() -
                           process_model(TractionState::from_vector(minus), u, dt, params).to_vector()) /
                          (2.0 * h);
    }
    MatrixXd output = MatrixXd::Zero(TractionMeasurement::kDim, n);
    output.leftCols(TractionMeasurement::kDim).setIdentity();
    return observability_rank(jacobian, output) == n;
}

TractionEstimator::TractionEstimator(EstimatorConfig config)
    : config_(std::move(config)),
      model_(make_traction_model(config_.vehicle, config_.sample_period)),
      noise_(make_noise_spec(config_)) {
    config_.vehicle.validate();
    if (!(config_.sample_period > 0.0 && config_.sample_period <= 0.1 + 1e-12)) {
        throw Error(ErrorKind::InvalidArgument, "sample period must lie in (0, 0.1] s");
    }
}

void TractionEstimator::initialize(const TractionMeasurement& y) {
    TractionState x0;
    x0.wheel_speed = y.wheel_speed;
    x0.ground_speed = y.ground_speed;
    x0.adhesion.fill(config_.initial_adhesion);
    x0.soil_resistance = config_.initial_soil_resistance;

    VectorXd std_dev(TractionState::kDim);
    std_dev.head(5).setConstant(config_.initial_speed_std);
    std_dev.segment(TractionState::kAdhesion, kWheelCount).setConstant(config_.initial_adhesion_std);
    std_dev(TractionState::kSoilResistance) = config_.initial_soil_resistance_std;

    fs_ = ukf::FilterState::initial(x0.to_vector(), std_dev.array().square().matrix().asDiagonal(),
                                    config_.adaptation.window);
    initialized_ = true;
}

void TractionEstimator::clamp_parameters() {
    auto clamp_entry = [&](Eigen::Index i, double lo, double hi) {
        const double v = fs_.mean(i);
        if (v < lo || v > hi) {
            ++clamp_violations_;
            fs_.mean(i) = std::clamp(v, lo, hi);
        }
    };
    for (int i = 0; i < kWheelCount; ++i) {
        clamp_entry(TractionState::kAdhesion + i, config_.adhesion_min, config_.adhesion_max);
    }
    clamp_entry(TractionState::kSoilResistance, config_.soil_resistance_min, config_.soil_resistance_max);
}

EstimateRecord TractionEstimator::make_record(double t, Point2 position, const TractionInput& u) const {
    const TractionState x = TractionState::from_vector(fs_.mean);
    EstimateRecord rec;
    rec.t = t;
    rec.position = position;
    rec.adhesion = x.adhesion;
    rec.soil_resistance = x.soil_resistance;
    rec.fuzzy_factor = fs_.fuzzy_factor;
    for (int i = 0; i < TractionState::kDim; ++i) rec.cov_diagonal[i] = fs_.cov(i, i);

    const auto forces = wheel_vertical_forces(u.front_axle_load, config_.vehicle);
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < kWheelCount; ++i) {
        const double r_d = rolling_radius(forces[i], config_.vehicle);
        rec.slip[i] = slip(x.ground_speed, x.wheel_speed[i], r_d);
        if (auto a = try_invert_mu_for_a(x.adhesion[i], rec.slip[i], config_.family)) {
            sum += *a;
            ++count;
        }
    }
    if (count > 0) rec.curve_scale = sum / count;
    return rec;
}

EstimateRecord TractionEstimator::step(const TractionInput& u, const TractionMeasurement& y, double t,
                                       Point2 position) {
    input_window_.push_back(u);
    measurement_window_.push_back(y);
    while (input_window_.size() > config_.intensity_window) input_window_.pop_front();
    while (measurement_window_.size() > config_.intensity_window) measurement_window_.pop_front();

    if (!initialized_) {
        initialize(y);
        return make_record(t, position, u);
    }

    const std::vector<TractionInput> inputs(input_window_.begin(), input_window_.end());
    const std::vector<TractionMeasurement> outputs(measurement_window_.begin(), measurement_window_.end());
    last_intensity_ = dynamics_intensity(inputs, outputs, config_.sample_period, config_.intensity);
    const double phi = config_.fuzzy_supervision ? ukf::fuzzy_factor(last_intensity_, config_.fuzzy) : 1.0;

    if (config_.adapt_process_noise && fs_.window_full() && fs_.last_gain.size() > 0) {
        fs_.adaptation = ukf::adapt_q(fs_, noise_, config_.adaptation);
    }
    fs_.fuzzy_factor = phi;

    fs_ = ukf::predict(std::move(fs_), model_, u.to_vector(), noise_, config_.scaling);
    fs_ = ukf::update(std::move(fs_), model_, y.to_vector(), noise_, config_.scaling);
    clamp_parameters();
    return make_record(t, position, u);
}

} // namespace traction
