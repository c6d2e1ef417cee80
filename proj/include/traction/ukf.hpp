// Unscented Kalman filter with adaptive process noise and a fuzzy supervisor
// that scales the process noise with the intensity of the vehicle dynamics.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>

namespace traction::ukf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SigmaScaling {
    double alpha = 1e-1;
    double beta = 2.0;
    double kappa = 0.0;

    double lambda(int n) const { return alpha * alpha * (n + kappa) - n; }
};

/// 2n+1 points stored column-wise with their mean and covariance weights.
struct SigmaSet {
    MatrixXd points;
    VectorXd mean_weights;
    VectorXd cov_weights;

    int size() const { return static_cast<int>(points.cols()); }
};

/// x_k = f(x_{k-1}, u_{k-1}) + q,  y_k = h(x_k) + r.
struct NonlinearModel {
    int state_dim = 0;
    int input_dim = 0;
    int output_dim = 0;
    std::function<VectorXd(const VectorXd& x, const VectorXd& u)> process;
    std::function<VectorXd(const VectorXd& x)> measure;
};

struct NoiseSpec {
    MatrixXd process;     ///< Q
    MatrixXd measurement; ///< R
};

struct AdaptationConfig {
    std::size_t window = 30;
    double smoothing = 0.1;
    double min_scale = 0.01;
    double max_scale = 100.0;
};

struct FilterState {
    VectorXd mean;
    MatrixXd cov;
    /// Diagonal of the adaptation matrix A.
    VectorXd adaptation;
    /// Most recent innovations y - y_hat, oldest first, at most `window` long.
    std::deque<VectorXd> residuals;
    std::size_t window = 30;
    /// Fuzzy multiplier phi; the effective process noise is (phi A) Q.
    double fuzzy_factor = 1.0;
    /// Kalman gain of the last update; empty before the first one.
    MatrixXd last_gain;
    /// Predicted innovation covariance S of the last update.
    MatrixXd last_innovation_cov;
    /// max |P - P^T| measured just before the last symmetrization.
    double last_asymmetry = 0.0;

    static FilterState initial(const VectorXd& mean, const MatrixXd& cov, std::size_t window = 30);

    bool window_full() const { return residuals.size() >= window; }
};

/// Sigma points from the Cholesky factor of (n + lambda) cov. Escalates a
/// diagonal jitter from 1e-12 to 1e-6 before throwing DecompositionFailure.
SigmaSet sigma_points(const VectorXd& mean, const MatrixXd& cov, const SigmaScaling& scaling = {});

/// Lower Cholesky factor of a symmetric PSD matrix with the jitter escalation above.
MatrixXd robust_cholesky(const MatrixXd& cov);

/// Weighted mean and covariance of a sigma set, the inverse of sigma_points.
VectorXd weighted_mean(const SigmaSet& set);
MatrixXd weighted_covariance(const SigmaSet& set, const VectorXd& mean);

/// Time update. Q is scaled by fuzzy_factor * diag(adaptation).
FilterState predict(FilterState fs, const NonlinearModel& model, const VectorXd& input,
                    const NoiseSpec& noise, const SigmaScaling& scaling = {});

/// Measurement update; appends the innovation to the residual window.
/// Throws SingularInnovationCov when S cannot be factored.
FilterState update(FilterState fs, const NonlinearModel& model, const VectorXd& measurement,
                   const NoiseSpec& noise, const SigmaScaling& scaling = {});

/// New diagonal of A from innovation matching over the residual window. The
/// observed process noise is the assumed (phi A Q)_ii plus the state-space
/// image of the innovation excess, diag(K (S_bar - S) K^T), so a filter whose
/// innovations match their predicted covariance keeps A. Each entry moves a
/// `smoothing` fraction of the way towards the matching scale.
/// Throws InsufficientSamples until the window is full.
VectorXd adapt_q(const FilterState& fs, const NoiseSpec& noise, const AdaptationConfig& config = {});

/// Sample innovation covariance 1/(M-1) sum r r^T over the window.
MatrixXd sample_innovation_covariance(const FilterState& fs);

struct FuzzyConfig {
    double steady_output = 0.2;
    double moderate_output = 1.0;
    double intense_output = 5.0;
    double steady_center = 0.0;
    double moderate_center = 0.5;
    double intense_center = 1.0;
};

/// Maps a normalized dynamics intensity to the process-noise multiplier phi
/// with three triangular sets and centroid defuzzification. The outer sets
/// are shoulders, so phi saturates at the steady and intense outputs.
double fuzzy_factor(double dynamics_signal, const FuzzyConfig& config = {});

} // namespace traction::ukf
