#pragma once

#include <string>
#include <vector>

#include "sewerflow/model.hpp"
#include "sewerflow/simulate.hpp"

namespace sewerflow {

/// Performance of a realized run, from simulator truth only.
struct MetricsReport {
  double flooding_volume = 0.0;        // m3
  double cso_volume = 0.0;             // m3
  double treated_volume = 0.0;         // m3 through the plants
  double pollutant_release = 0.0;      // kg, weighted by w_PR
  std::vector<double> released_mass;   // kg per species, unweighted
  double regulation_violation = 0.0;   // kg/m3 summed over steps
  double slope = 0.0;                  // (m3/min)^2
  double curvature = 0.0;              // (m3/min)^2
  double microbial_growth = 0.0;       // kg, growth reactions only
  double final_volume = 0.0;           // m3
  double total_volume = 0.0;           // m3 summed over steps
  double plant_balance = 0.0;
  double time_balance = 0.0;
};

/// Throws std::invalid_argument if the trajectory logs are incomplete.
MetricsReport compute_metrics(const Trajectory& traj, const Scenario& scenario);

/// Flat JSON object: name -> {"value": v, "units": u}.
std::string metrics_json(const MetricsReport& report, const Scenario& scenario);

}  // namespace sewerflow
