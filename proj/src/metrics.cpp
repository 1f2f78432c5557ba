#include "sewerflow/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "sewerflow/kinetics.hpp"

namespace sewerflow {

MetricsReport compute_metrics(const Trajectory& traj, const Scenario& sc) {
  const NetworkModel& net = sc.network;
  const int n_steps = traj.steps();
  const std::size_t n = static_cast<std::size_t>(std::max(n_steps, 0));
  if (n_steps < 0 || traj.flood.size() != n || traj.cso.size() != n || traj.outflow.size() != n ||
      traj.released.size() != n)
    throw std::invalid_argument("compute_metrics: incomplete trajectory");
  const double delta = traj.delta;
  const std::size_t m = sc.species_count();
  const std::size_t nk = net.plants().size();

  MetricsReport r;
  r.released_mass.assign(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (double f : traj.flood[k]) r.flooding_volume += f * delta;
    for (double c : traj.cso[k]) r.cso_volume += c * delta;
    for (double q : traj.outflow[k]) r.treated_volume += q * delta;
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t s = 0; s < m; ++s) {
        const double kg = traj.released[k][i][s];
        r.released_mass[s] += kg;
        r.pollutant_release += sc.weights.pollutant_release.at(s) * kg;
      }
  }

  // Instantaneous grid quantities, n = 1..N.
  for (std::size_t k = 1; k <= n; ++k) {
    const SystemState& g = traj.grid[k];
    for (std::size_t i : net.storage_tanks()) r.total_volume += g.volume[i];
    for (std::size_t slot = 0; slot < nk; ++slot) {
      const Tank& plant = net.tank(net.plants()[slot]);
      const std::vector<double>& xi = g.conc[net.plants()[slot]];
      for (std::size_t s = 0; s < m; ++s)
        r.regulation_violation += std::max(xi[s] - sc.xi_max.at(s), 0.0);
      const PlantBiology& bio = sc.biology[slot];
      const std::vector<double> t = rate_vector(bio, xi);
      for (std::size_t q = 0; q < bio.reaction_count(); ++q)
        if (bio.laws[q].kind != KineticKind::LinearDecay)
          r.microbial_growth += plant.v_bar * t[q] * delta;
    }
  }
  for (std::size_t i : net.storage_tanks()) r.final_volume += traj.grid[n].volume[i];

  // Actuator smoothness from the commanded setpoints.
  for (int k = 0; k < n_steps; ++k) {
    const auto& q0 = traj.setpoint_at(k);
    const auto& q1 = traj.setpoint_at(k - 1);
    const auto& q2 = traj.setpoint_at(k - 2);
    for (std::size_t p : net.actuator_pipes()) {
      const double d1 = q0[p] - q1[p];
      const double d2 = q0[p] - 2.0 * q1[p] + q2[p];
      r.slope += d1 * d1;
      r.curvature += d2 * d2;
    }
  }

  // Plant utilization balance.
  if (nk > 0 && n > 0) {
    double cap = 0.0;
    std::vector<double> qmax(nk), mean(nk, 0.0);
    for (std::size_t i = 0; i < nk; ++i) {
      qmax[i] = net.tank(net.plants()[i]).q_out_max;
      cap += qmax[i];
    }
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < nk; ++i) mean[i] += traj.outflow[k][i] / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      double total = 0.0;
      for (double q : traj.outflow[k]) total += q;
      for (std::size_t i = 0; i < nk; ++i) {
        const double u = traj.outflow[k][i] / qmax[i];
        const double dev = u - total / cap;
        r.plant_balance += dev * dev;
        const double dt = (traj.outflow[k][i] - mean[i]) / qmax[i];
        r.time_balance += dt * dt;
      }
    }
  }
  return r;
}

std::string metrics_json(const MetricsReport& r, const Scenario& sc) {
  nlohmann::ordered_json j;
  auto put = [&](const std::string& name, double v, const char* units) {
    j[name] = {{"value", v}, {"units", units}};
  };
  put("flooding_volume", r.flooding_volume, "m3");
  put("cso_volume", r.cso_volume, "m3");
  put("treated_volume", r.treated_volume, "m3");
  put("pollutant_release", r.pollutant_release, "kg");
  for (std::size_t s = 0; s < r.released_mass.size(); ++s)
    put("released_mass_" + sc.species.at(s), r.released_mass[s], "kg");
  put("regulation_violation", r.regulation_violation, "kg/m3*steps");
  put("slope", r.slope, "(m3/min)^2");
  put("curvature", r.curvature, "(m3/min)^2");
  put("microbial_growth", r.microbial_growth, "kg");
  put("final_volume", r.final_volume, "m3");
  put("total_volume", r.total_volume, "m3*steps");
  put("plant_balance", r.plant_balance, "1");
  put("time_balance", r.time_balance, "1");
  return j.dump(2);
}

}  // namespace sewerflow
