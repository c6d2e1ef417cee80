#include "traction/metrics.hpp"

#include "traction/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <map>

namespace traction {

double compute_r_squared(std::span<const double> identified, std::span<const double> truth) {
    if (identified.size() != truth.size()) throw Error(ErrorKind::InvalidArgument, "curve grids are not aligned");
    if (truth.size() < 10) throw Error(ErrorKind::InvalidArgument, "R-squared needs at least 10 grid points");
    double mean = 0.0;
    for (double v : truth) mean += v;
    mean /= static_cast<double>(truth.size());
    double ss_res = 0.0, ss_tot = 0.0, ss_raw = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_res += (truth[i] - identified[i]) * (truth[i] - identified[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
        ss_raw += truth[i] * truth[i];
    }
    // Rounding in the mean leaves a tiny SS_tot for constant curves.
    if (!(ss_tot > 1e-24 * ss_raw)) throw Error(ErrorKind::DegenerateVariance, "true curve is constant over the grid");
    return 1.0 - ss_res / ss_tot;
}

std::vector<double> sample_curve(const SoilParams& soil, double slip_max, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        out[static_cast<std::size_t>(k)] = mu_curve(slip_max * k / (points - 1), soil);
    }
    return out;
}

std::vector<bool> scoring_mask(std::span<const TruthRecord> truth, const MetricsOptions& options) {
    std::vector<bool> mask(truth.size(), false);
    double last_change = -1e300;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (k > 0 && truth[k].soil_index != truth[k - 1].soil_index) last_change = truth[k].t;
        mask[k] = truth[k].t >= options.burn_in && truth[k].t - last_change >= options.transition_exclusion;
    }
    return mask;
}

MetricsReport compute_metrics(std::span<const EstimateRecord> estimates, std::span<const TruthRecord> truth,
                              const FieldSpec& field, const CurveShape& family, const MetricsOptions& options) {
    if (estimates.size() != truth.size()) {
        throw Error(ErrorKind::InvalidArgument, "estimate and truth logs differ in length");
    }
    struct Accumulator {
        std::size_t samples = 0;
        double abs_err = 0.0, true_mu = 0.0;
        double a_sum = 0.0;
        std::size_t a_count = 0;
        double rho_sum = 0.0, rho_err = 0.0;
        SoilParams soil;
    };
    std::map<int, Accumulator> acc;
    const auto mask = scoring_mask(truth, options);

    MetricsReport report;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (std::abs(estimates[k].t - truth[k].t) > 1e-9) {
            throw Error(ErrorKind::InvalidArgument, "estimate and truth timestamps differ");
        }
        if (!mask[k]) continue;
        ++report.scored_samples;
        Accumulator& a = acc[truth[k].soil_index];
        a.soil = truth[k].soil;
        ++a.samples;
        for (int i = 0; i < kWheelCount; ++i) {
            a.abs_err += std::abs(estimates[k].adhesion[i] - truth[k].adhesion[i]);
            a.true_mu += std::abs(truth[k].adhesion[i]);
        }
        if (estimates[k].curve_scale) {
            a.a_sum += *estimates[k].curve_scale;
            ++a.a_count;
        }
        a.rho_sum += estimates[k].soil_resistance;
        a.rho_err += std::abs(estimates[k].soil_resistance - truth[k].soil.rho_s);
    }

    for (const auto& [index, a] : acc) {
        SoilMetrics m;
        m.soil_index = index;
        m.name = soil_name(field, index);
        m.samples = a.samples;
        const double n = static_cast<double>(a.samples) * kWheelCount;
        m.mean_abs_mu_error = a.abs_err / n;
        m.mean_true_mu = a.true_mu / n;
        m.mu_error_pct = m.mean_true_mu > 0.0 ? 100.0 * m.mean_abs_mu_error / m.mean_true_mu : 0.0;
        m.true_a = a.soil.a;
        m.true_rho = a.soil.rho_s;
        m.mean_rho_estimate = a.rho_sum / static_cast<double>(a.samples);
        m.rho_abs_error = a.rho_err / static_cast<double>(a.samples);
        if (a.a_count > 0) {
            m.mean_identified_a = a.a_sum / static_cast<double>(a.a_count);
            const SoilParams identified = SoilParams::from_shape(*m.mean_identified_a, family, a.soil.rho_s);
            m.r_squared = compute_r_squared(sample_curve(identified, options.r2_slip_max, options.r2_points),
                                            sample_curve(a.soil, options.r2_slip_max, options.r2_points));
        }
        report.soils.push_back(std::move(m));
    }
    return report;
}

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    auto soils = nlohmann::ordered_json::array();
    for (const SoilMetrics& m : report.soils) {
        nlohmann::ordered_json s;
        s["soil"] = m.name;
        s["soil_index"] = m.soil_index;
        s["samples"] = m.samples;
        s["mu_error_pct"] = m.mu_error_pct;
        s["mean_abs_mu_error"] = m.mean_abs_mu_error;
        s["mean_true_mu"] = m.mean_true_mu;
        s["true_a"] = m.true_a;
        s["identified_a"] = m.mean_identified_a ? nlohmann::ordered_json(*m.mean_identified_a) : nullptr;
        s["r_squared"] = m.r_squared ? nlohmann::ordered_json(*m.r_squared) : nullptr;
        s["true_rho_s"] = m.true_rho;
        s["mean_rho_s_estimate"] = m.mean_rho_estimate;
        s["rho_s_abs_error"] = m.rho_abs_error;
        soils.push_back(std::move(s));
    }
    j["soils"] = std::move(soils);
    j["scored_samples"] = report.scored_samples;
    j["map_coverage"] = report.map_coverage;
    j["clamp_violations"] = report.clamp_violations;
    return j.dump(2) + "\n";
}

std::string metrics_to_text(const MetricsReport& report) {
    std::string out = fmt::format("{:<10} {:>8} {:>10} {:>9} {:>9} {:>8} {:>9} {:>9}\n", "soil", "samples",
                                  "mu err %", "true a", "ident a", "R^2", "rho_s", "rho_s est");
    for (const SoilMetrics& m : report.soils) {
        out += fmt::format("{:<10} {:>8} {:>10.3f} {:>9.4f} {:>9} {:>8} {:>9.4f} {:>9.4f}\n", m.name, m.samples,
                           m.mu_error_pct, m.true_a,
                           m.mean_identified_a ? fmt::format("{:.4f}", *m.mean_identified_a) : "-",
                           m.r_squared ? fmt::format("{:.4f}", *m.r_squared) : "-", m.true_rho,
                           m.mean_rho_estimate);
    }
    out += fmt::format("scored samples: {}\nmap coverage: {:.4f}\nclamp violations: {}\n", report.scored_samples,
                       report.map_coverage, report.clamp_violations);
    return out;
}

} // namespace traction
