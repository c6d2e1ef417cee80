#include "oracles.hpp"

#include "traction/error.hpp"
#include "traction/ukf.hpp"

#include <doctest.h>

#include <random>

using namespace traction;
using namespace traction::ukf;

namespace {

MatrixXd random_psd(int n, std::mt19937_64& rng, int rank = -1) {
    std::normal_distribution<double> g(0.0, 1.0);
    const int r = rank < 0 ? n : rank;
    MatrixXd a(n, r);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < r; ++k) a(i, k) = g(rng);
    return a * a.transpose() + (rank < 0 ? 0.1 : 0.0) * MatrixXd::Identity(n, n);
}

NonlinearModel linear_model(const MatrixXd& F, const MatrixXd& B, const MatrixXd& H) {
    NonlinearModel m;
    m.state_dim = static_cast<int>(F.rows());
    m.input_dim = static_cast<int>(B.cols());
    m.output_dim = static_cast<int>(H.rows());
    m.process = [F, B](const VectorXd& x, const VectorXd& u) -> VectorXd { return F * x + B * u; };
    m.measure = [H](const VectorXd& x) -> VectorXd { return H * x; };
    return m;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::InvalidArgument;
}

/// Random-walk system x' = x + w, y = x + v, filtered with adaptation on.
VectorXd run_adaptation(double true_q, double filter_q, std::uint64_t seed, int steps) {
    const int n = 2;
    const MatrixXd I = MatrixXd::Identity(n, n);
    const NonlinearModel model = linear_model(I, MatrixXd::Zero(n, 1), I);
    const NoiseSpec noise{filter_q * I, 0.01 * I};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);

    FilterState fs = FilterState::initial(VectorXd::Zero(n), I, 30);
    VectorXd truth = VectorXd::Zero(n);
    VectorXd mean_a = VectorXd::Zero(n);
    int counted = 0;
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < n; ++i) truth(i) += std::sqrt(true_q) * g(rng);
        VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = truth(i) + 0.1 * g(rng);
        if (fs.window_full() && fs.last_gain.size() > 0) {
            fs.adaptation = adapt_q(fs, noise);
            for (Eigen::Index i = 0; i < n; ++i) {
                CHECK(fs.adaptation(i) >= 0.01);
                CHECK(fs.adaptation(i) <= 100.0);
            }
        }
        fs = predict(std::move(fs), model, VectorXd::Zero(1), noise);
        fs = update(std::move(fs), model, y, noise);
        if (k >= steps / 2) {
            mean_a += fs.adaptation;
            ++counted;
        }
    }
    return mean_a / counted;
}

} // namespace

TEST_CASE("sigma points for a scalar unit Gaussian") {
    const SigmaSet set = sigma_points(VectorXd::Zero(1), MatrixXd::Identity(1, 1), {1.0, 0.0, 0.0});
    REQUIRE(set.size() == 3);
    CHECK(set.points(0, 0) == 0.0);
    CHECK(set.points(0, 1) == doctest::Approx(1.0));
    CHECK(set.points(0, 2) == doctest::Approx(-1.0));
    CHECK(set.mean_weights(0) == 0.0);
    CHECK(set.mean_weights(1) == doctest::Approx(0.5));
    CHECK(set.mean_weights(2) == doctest::Approx(0.5));
}

TEST_CASE("sigma points reproduce the generating moments") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 10;
        VectorXd mean(n);
        for (int i = 0; i < n; ++i) mean(i) = 5.0 * g(rng);
        const MatrixXd cov = random_psd(n, rng, trial % 3 == 0 ? std::max(1, n / 2) : -1);
        for (const SigmaScaling& s : {SigmaScaling{}, SigmaScaling{1.0, 0.0, 0.0}, SigmaScaling{0.5, 2.0, 1.0}}) {
            const SigmaSet set = sigma_points(mean, cov, s);
            CHECK(set.mean_weights.sum() == doctest::Approx(1.0));
            CHECK(max_abs(weighted_mean(set) - mean) < 1e-10);
            CHECK(max_abs(weighted_covariance(set, mean) - cov) < 1e-10 * std::max(1.0, max_abs(cov)));
        }
    }
}

TEST_CASE("robust cholesky") {
    MatrixXd singular = MatrixXd::Zero(3, 3);
    singular(0, 0) = 1.0;
    const MatrixXd root = robust_cholesky(singular);
    CHECK(max_abs(root * root.transpose() - singular) < 1e-5);
    CHECK(kind_of([] { robust_cholesky(-MatrixXd::Identity(2, 2)); }) == ErrorKind::DecompositionFailure);
}

TEST_CASE("predict on a linear model") {
    std::mt19937_64 rng(7);
    const int n = 4;
    const MatrixXd F = MatrixXd::Identity(n, n) + 0.1 * random_psd(n, rng);
    const MatrixXd B = MatrixXd::Ones(n, 1);
    const MatrixXd Q = 0.01 * random_psd(n, rng);
    const NonlinearModel model = linear_model(F, B, MatrixXd::Identity(2, n));
    const FilterState fs = FilterState::initial(VectorXd::LinSpaced(n, -1.0, 1.0), random_psd(n, rng));
    VectorXd u(1);
    u << 0.3;

    const FilterState out = predict(fs, model, u, {Q, MatrixXd::Identity(2, 2)});
    CHECK(max_abs(out.mean - (F * fs.mean + B * u)) < 1e-8);
    CHECK(max_abs(out.cov - (F * fs.cov * F.transpose() + Q)) < 1e-8);

    const NonlinearModel identity = linear_model(MatrixXd::Identity(n, n), B, MatrixXd::Identity(2, n));
    const FilterState same = predict(fs, identity, VectorXd::Zero(1), {MatrixXd::Zero(n, n), MatrixXd::Identity(2, 2)});
    CHECK(max_abs(same.mean - fs.mean) < 1e-12);
    CHECK(max_abs(same.cov - fs.cov) < 1e-12);

    const FilterState grown =
        predict(fs, identity, VectorXd::Zero(1), {0.5 * MatrixXd::Identity(n, n), MatrixXd::Identity(2, 2)});
    CHECK(max_abs(grown.cov - fs.cov - 0.5 * MatrixXd::Identity(n, n)) < 1e-12);

    // Adaptation and the fuzzy factor scale the process noise.
    FilterState scaled = fs;
    scaled.adaptation = VectorXd::Constant(n, 2.0);
    scaled.fuzzy_factor = 3.0;
    const FilterState s_out =
        predict(scaled, identity, VectorXd::Zero(1), {0.5 * MatrixXd::Identity(n, n), MatrixXd::Identity(2, 2)});
    CHECK(max_abs(s_out.cov - fs.cov - 3.0 * MatrixXd::Identity(n, n)) < 1e-12);
}

TEST_CASE("update on a linear model matches the Kalman filter") {
    std::mt19937_64 rng(9);
    const int n = 4;
    MatrixXd H(2, n);
    H << 1, 0, 0.5, 0, 0, 1, 0, -1;
    const MatrixXd R = 0.1 * random_psd(2, rng);
    const NonlinearModel model = linear_model(MatrixXd::Identity(n, n), MatrixXd::Zero(n, 1), H);
    const FilterState fs = FilterState::initial(VectorXd::LinSpaced(n, 0.0, 1.0), random_psd(n, rng));
    VectorXd y(2);
    y << 0.7, -0.2;

    oracle::LinearKalman kf{MatrixXd::Identity(n, n), MatrixXd::Zero(n, 1), H, MatrixXd::Zero(n, n), R, fs.mean, fs.cov};
    kf.update(y);
    const FilterState out = update(fs, model, y, {MatrixXd::Zero(n, n), R});
    CHECK(max_abs(out.mean - kf.x) < 1e-8);
    CHECK(max_abs(out.cov - kf.P) < 1e-8);
    const MatrixXd K = fs.cov * H.transpose() * (H * fs.cov * H.transpose() + R).inverse();
    CHECK(max_abs(out.last_gain - K) < 1e-8);
    CHECK(out.residuals.size() == 1);
    CHECK(out.last_asymmetry < 1e-9);
    CHECK(out.cov.trace() <= fs.cov.trace());

    // A measurement equal to the prediction leaves the mean and shrinks P.
    const FilterState exact = update(fs, model, H * fs.mean, {MatrixXd::Zero(n, n), R});
    CHECK(max_abs(exact.mean - fs.mean) < 1e-12);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(fs.cov - exact.cov);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);

    // An uninformative measurement changes nothing.
    const FilterState blind = update(fs, model, y, {MatrixXd::Zero(n, n), 1e12 * MatrixXd::Identity(2, 2)});
    CHECK(max_abs(blind.last_gain) < 1e-6);
    CHECK(max_abs(blind.mean - fs.mean) < 1e-6);
}

TEST_CASE("predict and update track the Kalman filter over many steps") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 4;
    MatrixXd F = MatrixXd::Identity(n, n);
    F(0, 1) = 0.1;
    F(2, 3) = 0.1;
    F(1, 2) = -0.05;
    const MatrixXd B = MatrixXd::Identity(n, 2).eval();
    MatrixXd H = MatrixXd::Zero(2, n);
    H(0, 0) = 1.0;
    H(1, 2) = 1.0;
    const MatrixXd Q = 0.01 * MatrixXd::Identity(n, n);
    const MatrixXd R = 0.04 * MatrixXd::Identity(2, 2);
    const NonlinearModel model = linear_model(F, B, H);

    FilterState fs = FilterState::initial(VectorXd::Zero(n), MatrixXd::Identity(n, n));
    oracle::LinearKalman kf{F, B, H, Q, R, fs.mean, fs.cov};
    VectorXd truth = VectorXd::Ones(n);
    for (int k = 0; k < 200; ++k) {
        VectorXd u(2);
        u << std::sin(0.1 * k), std::cos(0.07 * k);
        VectorXd next = F * truth + B * u;
        for (int i = 0; i < n; ++i) next(i) += 0.1 * g(rng);
        truth = next;
        const VectorXd y = H * truth + 0.2 * VectorXd::NullaryExpr(2, [&] { return g(rng); });
        fs = predict(std::move(fs), model, u, {Q, R});
        fs = update(std::move(fs), model, y, {Q, R});
        kf.predict(u);
        kf.update(y);
        REQUIRE(max_abs(fs.mean - kf.x) < 1e-8);
        REQUIRE(max_abs(fs.cov - kf.P) < 1e-8);
        CHECK(fs.last_asymmetry < 1e-9);
    }
    CHECK(fs.residuals.size() == 30);
}

TEST_CASE("singular innovation covariance") {
    const NonlinearModel model = linear_model(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2));
    const FilterState fs = FilterState::initial(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    VectorXd y(1);
    y << 1.0;
    CHECK(kind_of([&] { update(fs, model, y, {MatrixXd::Zero(2, 2), MatrixXd::Zero(1, 1)}); }) ==
          ErrorKind::SingularInnovationCov);
}

TEST_CASE("process noise adaptation") {
    const FilterState empty = FilterState::initial(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    const NoiseSpec noise{MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)};
    CHECK(kind_of([&] { adapt_q(empty, noise); }) == ErrorKind::InsufficientSamples);

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const VectorXd consistent = run_adaptation(1e-3, 1e-3, seed, 4000);
        for (Eigen::Index i = 0; i < consistent.size(); ++i) {
            CHECK(consistent(i) >= 0.5);
            CHECK(consistent(i) <= 2.0);
        }
        const VectorXd mismatched = run_adaptation(1e-2, 1e-3, seed, 4000);
        for (Eigen::Index i = 0; i < mismatched.size(); ++i) CHECK(mismatched(i) > 1.0);
    }
}

TEST_CASE("fuzzy supervisor") {
    const FuzzyConfig cfg;
    CHECK(fuzzy_factor(0.0) == doctest::Approx(cfg.steady_output));
    CHECK(fuzzy_factor(-1.0) == doctest::Approx(cfg.steady_output));
    CHECK(fuzzy_factor(0.5) == doctest::Approx(cfg.moderate_output));
    CHECK(fuzzy_factor(1.0) == doctest::Approx(cfg.intense_output));
    CHECK(fuzzy_factor(7.0) == doctest::Approx(cfg.intense_output));
    double previous = fuzzy_factor(0.0);
    for (int k = 1; k <= 2000; ++k) {
        const double phi = fuzzy_factor(k * 1e-3);
        CHECK(phi >= previous);
        CHECK(phi >= cfg.steady_output);
        CHECK(phi <= cfg.intense_output);
        previous = phi;
    }
}
