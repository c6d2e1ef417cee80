#include "traction/ukf.hpp"

#include "traction/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace traction::ukf {

FilterState FilterState::initial(const VectorXd& mean, const MatrixXd& cov, std::size_t window) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw Error(ErrorKind::InvalidArgument, "covariance shape does not match the state");
    }
    if (window < 2) throw Error(ErrorKind::InvalidArgument, "residual window must hold at least 2 samples");
    FilterState fs;
    fs.mean = mean;
    fs.cov = cov;
    fs.adaptation = VectorXd::Ones(mean.size());
    fs.window = window;
    return fs;
}

MatrixXd robust_cholesky(const MatrixXd& cov) {
    const auto n = cov.rows();
    Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    for (double jitter = 1e-12; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
        llt.compute(cov + jitter * MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw Error(ErrorKind::DecompositionFailure,
                "covariance is not positive semi-definite (jitter up to 1e-6 did not help)");
}

SigmaSet sigma_points(const VectorXd& mean, const MatrixXd& cov, const SigmaScaling& scaling) {
    const int n = static_cast<int>(mean.size());
    const double lambda = scaling.lambda(n);
    const double spread = n + lambda;
    if (!(spread > 0.0)) throw Error(ErrorKind::InvalidArgument, "n + lambda must be positive");

    const MatrixXd root = robust_cholesky(spread * cov);

    SigmaSet set;
    set.points.resize(n, 2 * n + 1);
    set.points.col(0) = mean;
    for (int i = 0; i < n; ++i) {
        set.points.col(1 + i) = mean + root.col(i);
        set.points.col(1 + n + i) = mean - root.col(i);
    }

    set.mean_weights = VectorXd::Constant(2 * n + 1, 0.5 / spread);
    set.cov_weights = set.mean_weights;
    set.mean_weights(0) = lambda / spread;
    set.cov_weights(0) = lambda / spread + (1.0 - scaling.alpha * scaling.alpha + scaling.beta);
    return set;
}

VectorXd weighted_mean(const SigmaSet& set) { return set.points * set.mean_weights; }

MatrixXd weighted_covariance(const SigmaSet& set, const VectorXd& mean) {
    const MatrixXd dev = set.points.colwise() - mean;
    return dev * set.cov_weights.asDiagonal() * dev.transpose();
}

namespace {

MatrixXd scaled_process_noise(const FilterState& fs, const MatrixXd& q) {
    const VectorXd root = (fs.fuzzy_factor * fs.adaptation).cwiseSqrt();
    return root.asDiagonal() * q * root.asDiagonal();
}

void symmetrize(FilterState& fs) {
    fs.last_asymmetry = (fs.cov - fs.cov.transpose()).cwiseAbs().maxCoeff();
    fs.cov = 0.5 * (fs.cov + fs.cov.transpose());
}

} // namespace

FilterState predict(FilterState fs, const NonlinearModel& model, const VectorXd& input,
                    const NoiseSpec& noise, const SigmaScaling& scaling) {
    const SigmaSet prior = sigma_points(fs.mean, fs.cov, scaling);

    SigmaSet propagated = prior;
    for (int i = 0; i < prior.size(); ++i) {
        propagated.points.col(i) = model.process(prior.points.col(i), input);
    }

    fs.mean = weighted_mean(propagated);
    fs.cov = weighted_covariance(propagated, fs.mean) + scaled_process_noise(fs, noise.process);
    symmetrize(fs);
    return fs;
}

FilterState update(FilterState fs, const NonlinearModel& model, const VectorXd& measurement,
                   const NoiseSpec& noise, const SigmaScaling& scaling) {
    const SigmaSet set = sigma_points(fs.mean, fs.cov, scaling);
    const int m = model.output_dim;

    MatrixXd outputs(m, set.size());
    for (int i = 0; i < set.size(); ++i) outputs.col(i) = model.measure(set.points.col(i));

    const VectorXd predicted = outputs * set.mean_weights;
    const MatrixXd out_dev = outputs.colwise() - predicted;
    const MatrixXd state_dev = set.points.colwise() - fs.mean;

    const MatrixXd innovation_cov =
        out_dev * set.cov_weights.asDiagonal() * out_dev.transpose() + noise.measurement;
    const MatrixXd cross_cov = state_dev * set.cov_weights.asDiagonal() * out_dev.transpose();

    Eigen::LLT<MatrixXd> llt(innovation_cov);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
        throw Error(ErrorKind::SingularInnovationCov, "innovation covariance is not invertible");
    }
    // K = C S^-1, with S symmetric.
    const MatrixXd gain = llt.solve(cross_cov.transpose()).transpose();

    const VectorXd residual = measurement - predicted;
    fs.mean += gain * residual;
    fs.cov -= gain * innovation_cov * gain.transpose();
    symmetrize(fs);

    fs.last_gain = gain;
    fs.last_innovation_cov = innovation_cov;
    fs.residuals.push_back(residual);
    while (fs.residuals.size() > fs.window) fs.residuals.pop_front();
    return fs;
}

MatrixXd sample_innovation_covariance(const FilterState& fs) {
    const auto m = fs.residuals.front().size();
    MatrixXd sum = MatrixXd::Zero(m, m);
    for (const VectorXd& r : fs.residuals) sum += r * r.transpose();
    return sum / static_cast<double>(fs.residuals.size() - 1);
}

VectorXd adapt_q(const FilterState& fs, const NoiseSpec& noise, const AdaptationConfig& config) {
    if (fs.residuals.size() < config.window || fs.residuals.size() < 2 || fs.last_gain.size() == 0 ||
        fs.last_innovation_cov.size() == 0) {
        throw Error(ErrorKind::InsufficientSamples,
                    "adaptation needs " + std::to_string(config.window) + " residuals, have " +
                        std::to_string(fs.residuals.size()));
    }
    // Innovation excess over what the filter predicted, mapped to the state.
    const MatrixXd excess = sample_innovation_covariance(fs) - fs.last_innovation_cov;
    const VectorXd mismatch = (fs.last_gain * excess * fs.last_gain.transpose()).diagonal();

    VectorXd next = fs.adaptation;
    for (Eigen::Index i = 0; i < next.size(); ++i) {
        const double assumed = fs.fuzzy_factor * fs.adaptation(i) * noise.process(i, i);
        if (!(assumed > 0.0)) continue;
        const double observed = assumed + mismatch(i);
        const double target = fs.adaptation(i) * observed / assumed;
        next(i) += config.smoothing * (target - fs.adaptation(i));
        next(i) = std::clamp(next(i), config.min_scale, config.max_scale);
    }
    return next;
}

double fuzzy_factor(double dynamics_signal, const FuzzyConfig& config) {
    const double x = std::max(dynamics_signal, 0.0);
    const double lo = config.steady_center;
    const double mid = config.moderate_center;
    const double hi = config.intense_center;

    const double steady = x <= lo ? 1.0 : (x < mid ? (mid - x) / (mid - lo) : 0.0);
    double moderate = 0.0;
    if (x > lo && x <= mid) moderate = (x - lo) / (mid - lo);
    else if (x > mid && x < hi) moderate = (hi - x) / (hi - mid);
    const double intense = x >= hi ? 1.0 : (x > mid ? (x - mid) / (hi - mid) : 0.0);

    const double weight = steady + moderate + intense;
    return (steady * config.steady_output + moderate * config.moderate_output +
            intense * config.intense_output) /
           weight;
}

} // namespace traction::ukf
