#pragma once

#include "traction/dynamics.hpp"
#include "traction/estimator.hpp"
#include "traction/sim.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace traction {

/// 1 - SS_res / SS_tot with SS_tot taken about the mean of `truth`.
/// Throws InvalidArgument for misaligned or short (< 10 point) grids and
/// DegenerateVariance when the true curve is constant.
double compute_r_squared(std::span<const double> identified, std::span<const double> truth);

/// Samples mu(s) on `points` uniform slips in [0, slip_max].
std::vector<double> sample_curve(const SoilParams& soil, double slip_max = 0.5, int points = 51);

struct MetricsOptions {
    double burn_in = 2.0;              ///< s ignored at the start
    double transition_exclusion = 3.0; ///< s ignored after every soil change
    double r2_slip_max = 0.5;
    int r2_points = 51;
};

struct SoilMetrics {
    int soil_index = kDefaultSoilIndex;
    std::string name;
    std::size_t samples = 0;
    double mean_abs_mu_error = 0.0;
    double mean_true_mu = 0.0;
    double mu_error_pct = 0.0; ///< 100 * mean |mu_hat - mu| / mean |mu|
    double true_a = 0.0;
    std::optional<double> mean_identified_a;
    std::optional<double> r_squared;
    double true_rho = 0.0;
    double mean_rho_estimate = 0.0;
    double rho_abs_error = 0.0;
};

struct MetricsReport {
    std::vector<SoilMetrics> soils;
    std::size_t scored_samples = 0;
    double map_coverage = 0.0;
    int clamp_violations = 0;
    double runtime_s = 0.0;
};

/// Samples that count towards the scores: after the burn-in and outside the
/// exclusion window following each change of the true soil.
std::vector<bool> scoring_mask(std::span<const TruthRecord> truth, const MetricsOptions& options);

/// Per-soil scores; soils are attributed by the true position. Records are
/// matched by index and must share timestamps.
MetricsReport compute_metrics(std::span<const EstimateRecord> estimates, std::span<const TruthRecord> truth,
                              const FieldSpec& field, const CurveShape& family,
                              const MetricsOptions& options = {});

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_text(const MetricsReport& report);

} // namespace traction
