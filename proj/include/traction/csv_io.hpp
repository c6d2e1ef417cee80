// CSV logs of the pipeline. Column orders:
//
//   telemetry: t,x,y,omega1..omega4,v,torque1..torque4,front_axle_load,drawbar_pull
//   truth:     t,x,y,soil_index,a,p,alpha1,alpha2,rho_s,mu1..mu4,slip1..slip4,v,
//              omega1..omega4,drive_energy,drawbar_work
//   estimates: t,x,y,mu1..mu4,rho_s,slip1..slip4,a,phi,var0..var9   (a empty when absent)
//   series:    t,mu_true1..4,mu_est1..4,rho_s_true,rho_s_est,a_true,a_est
//
// Numbers are written with 17 significant digits so logs round-trip exactly.
#pragma once

#include "traction/estimator.hpp"
#include "traction/sim.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace traction {

void write_telemetry_csv(std::ostream& out, std::span<const TelemetrySample> samples);
std::vector<TelemetrySample> read_telemetry_csv(std::istream& in);

void write_truth_csv(std::ostream& out, std::span<const TruthRecord> truth);
std::vector<TruthRecord> read_truth_csv(std::istream& in);

void write_estimates_csv(std::ostream& out, std::span<const EstimateRecord> estimates);
std::vector<EstimateRecord> read_estimates_csv(std::istream& in);

/// Plot-ready true vs estimated adhesion, soil resistance and curve scale.
void write_series_csv(std::ostream& out, std::span<const EstimateRecord> estimates,
                      std::span<const TruthRecord> truth);

} // namespace traction
