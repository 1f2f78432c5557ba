#include "sewerflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sewerflow {

const char* to_string(TankKind kind) {
  switch (kind) {
    case TankKind::Plant: return "plant";
    case TankKind::Real: return "real";
    case TankKind::Virtual: return "virtual";
    case TankKind::DiversionNode: return "diversion";
  }
  return "?";
}

const char* to_string(PipeControl control) {
  switch (control) {
    case PipeControl::Uncontrolled: return "uncontrolled";
    case PipeControl::PumpOrGate: return "pump_or_gate";
    case PipeControl::VolumeLimited: return "volume_limited";
    case PipeControl::DiversionBranch: return "diversion_branch";
  }
  return "?";
}

NetworkModel::NetworkModel(std::vector<Tank> tanks, std::vector<Pipe> pipes)
    : tanks_(std::move(tanks)), pipes_(std::move(pipes)) {
  const std::size_t n = tanks_.size();
  in_.assign(n, {});
  out_.assign(n, {});
  slot_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Tank& t = tanks_[i];
    if (!by_id_.emplace(t.id, i).second)
      throw std::invalid_argument("duplicate tank id '" + t.id + "'");
    if (t.is_plant()) {
      slot_[i] = plants_.size();
      plants_.push_back(i);
    } else if (t.is_storage()) {
      slot_[i] = storage_.size();
      storage_.push_back(i);
    } else {
      slot_[i] = diversions_.size();
      diversions_.push_back(i);
    }
    if (t.has_external_inflow) inlets_.push_back(i);
  }
  for (std::size_t p = 0; p < pipes_.size(); ++p) {
    const Pipe& pipe = pipes_[p];
    if (pipe.from >= n || pipe.to >= n)
      throw std::invalid_argument("pipe '" + pipe.label + "' references a missing tank");
    out_[pipe.from].push_back(p);
    in_[pipe.to].push_back(p);
    if (pipe.is_actuator()) actuators_.push_back(p);
  }

  // Kahn's algorithm over zero-delay pipes.
  std::vector<int> indegree(n, 0);
  for (const Pipe& pipe : pipes_)
    if (pipe.delay_steps == 0) ++indegree[pipe.to];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t head = 0;
  while (head < ready.size()) {
    const std::size_t i = ready[head++];
    topo_.push_back(i);
    for (std::size_t p : out_[i]) {
      if (pipes_[p].delay_steps != 0) continue;
      if (--indegree[pipes_[p].to] == 0) ready.push_back(pipes_[p].to);
    }
  }
  if (topo_.size() != n) topo_.clear();
}

std::optional<std::size_t> NetworkModel::find_tank(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t NetworkModel::tank_index(const std::string& id) const {
  auto idx = find_tank(id);
  if (!idx) throw std::out_of_range("unknown tank '" + id + "'");
  return *idx;
}

std::size_t NetworkModel::actuator_device_count() const {
  std::size_t count = diversions_.size();
  for (std::size_t p : actuators_)
    if (pipes_[p].control != PipeControl::DiversionBranch) ++count;
  return count;
}

int NetworkModel::max_delay() const {
  int d = 0;
  for (const Pipe& p : pipes_) d = std::max(d, p.delay_steps);
  return d;
}

std::vector<std::string> validate_network(const NetworkModel& network) {
  std::vector<std::string> out;
  auto report = [&](const std::string& what) { out.push_back(what); };

  for (std::size_t i = 0; i < network.tank_count(); ++i) {
    const Tank& t = network.tank(i);
    const std::string name = "tank '" + t.id + "'";
    if (t.beta < 0.0) report(name + ": beta must be nonnegative");
    switch (t.kind) {
      case TankKind::Plant: {
        if (!(t.v_bar > 0.0)) report(name + ": plant volume v_bar must be positive");
        if (t.q_out_min < 0.0 || t.q_out_min > t.q_out_max)
          report(name + ": plant throughput bounds must satisfy 0 <= q_out_min <= q_out_max");
        if (network.in_pipes(i).empty())
          report(name + ": plant has no inflow pipe");
        if (!network.out_pipes(i).empty())
          report(name + ": plant has " + std::to_string(network.out_pipes(i).size() + 1) +
                 " outflows; a plant has exactly one external outflow");
        if (t.has_external_inflow)
          report(name + ": plant receives inflow only from other tanks");
        break;
      }
      case TankKind::DiversionNode: {
        if (t.v_max != 0.0) report(name + ": diversion node must have zero volume");
        for (std::size_t p : network.out_pipes(i))
          if (network.pipe(p).control != PipeControl::DiversionBranch)
            report(name + ": outgoing pipe '" + network.pipe(p).label +
                   "' of a diversion node must be an actuated branch");
        if (network.out_pipes(i).empty())
          report(name + ": diversion node has no outgoing branch");
        break;
      }
      case TankKind::Real:
      case TankKind::Virtual:
        if (!(t.v_max > 0.0)) report(name + ": v_max must be positive");
        break;
    }
  }

  for (const Pipe& p : network.pipes()) {
    const std::string name = "pipe '" + p.label + "'";
    if (p.q_max < 0.0) report(name + ": q_max must be nonnegative");
    if (p.delay_steps < 0) report(name + ": delay must be nonnegative");
    const Tank& from = network.tank(p.from);
    if (p.control == PipeControl::PumpOrGate && (p.q_min < 0.0 || p.q_min > p.q_max))
      report(name + ": pump range must satisfy 0 <= q_min <= q_max");
    if ((p.control == PipeControl::Uncontrolled || p.control == PipeControl::VolumeLimited) &&
        !from.is_storage())
      report(name + ": volume-driven flow needs a storage tank upstream");
    if ((p.control == PipeControl::Uncontrolled || p.control == PipeControl::VolumeLimited) &&
        !(from.beta > 0.0))
      report(name + ": upstream tank needs beta > 0");
    if (p.control == PipeControl::DiversionBranch && !from.is_diversion())
      report(name + ": diversion branch must leave a diversion node");
  }

  if (network.tank_count() > 0 && network.zero_delay_order().empty())
    report("zero-delay pipes form a cycle");
  return out;
}

void PlantBiology::append_decay_column() {
  for (std::size_t s = 0; s < kappa.size(); ++s)
    kappa[s].push_back(s == biomass_index ? -1.0 : 0.0);
  laws.push_back(KineticLaw::decay(death_rate, biomass_index));
}

std::vector<std::string> PlantBiology::violations() const {
  std::vector<std::string> out;
  const std::size_t m = species.size();
  const std::size_t r = laws.size();
  if (kappa.size() != m)
    out.push_back("kappa has " + std::to_string(kappa.size()) + " rows, expected " +
                  std::to_string(m));
  for (const auto& row : kappa) {
    if (row.size() != r) {
      out.push_back("kappa row has " + std::to_string(row.size()) + " columns, expected " +
                    std::to_string(r));
      break;
    }
    for (double v : row)
      if (!std::isfinite(v)) {
        out.push_back("kappa has a non-finite entry");
        break;
      }
  }
  if (death_rate < 0.0) out.push_back("death rate must be nonnegative");
  if (effluent_biomass_factor < 0.0 || effluent_biomass_factor > 1.0)
    out.push_back("effluent biomass factor must lie in [0, 1]");
  if (biomass_index >= m) out.push_back("biomass index out of range");
  for (const KineticLaw& law : laws) {
    try {
      law.validate();
    } catch (const DomainError& e) {
      out.push_back(e.what());
    }
    if (law.substrate_index >= m || law.biomass_index >= m)
      out.push_back("kinetic law references a species out of range");
  }
  return out;
}

PlantBiology case_study_biology(int plant) {
  if (plant < 0 || plant > 2) throw std::out_of_range("case study has plants 0..2");
  struct Row {
    double mu[4];       // 1/day: BOD, NH4, NO2, NO3
    double k[4];        // tabulated, x 1e-3
    double y_nh4_no2, y_no2_no3, y_x_bod, y_x_nh4;
    double death;       // 1/day
  };
  static constexpr Row table[3] = {
      {{3.99, 0.84, 1.68, 1.21}, {13.67, 6.59, 2.46, 1.40}, 0.28, 0.68, 0.67, 0.24, 0.01},
      {{2.56, 0.83, 1.27, 1.38}, {11.65, 14.98, 1.15, 2.69}, 0.25, 0.64, 0.67, 0.24, 0.1},
      {{1.93, 0.89, 0.92, 0.85}, {14.26, 8.53, 2.55, 4.20}, 0.27, 0.70, 0.67, 0.24, 0.1},
  };
  const Row& row = table[plant];

  PlantBiology bio;
  bio.species = {"BOD", "NH4", "NO2", "NO3", "X"};
  bio.biomass_index = 4;
  bio.kappa = {
      {-1.0, 0.0, 0.0, 0.0},
      {0.0, -1.0, 0.0, 0.0},
      {0.0, 1.0 / row.y_nh4_no2, -1.0, 0.0},
      {0.0, 0.0, 1.0 / row.y_no2_no3, -1.0},
      {row.y_x_bod, row.y_x_nh4, 0.0, 0.0},
  };
  for (std::size_t j = 0; j < 4; ++j)
    bio.laws.push_back(KineticLaw::contois(row.mu[j] / kMinutesPerDay, row.k[j] * 1e-3, j, 4));
  bio.death_rate = row.death / kMinutesPerDay;
  bio.effluent_biomass_factor = 0.1;
  bio.append_decay_column();
  return bio;
}

int Timing::steps_per_period() const {
  if (!(delta > 0.0) || !(capital_delta > 0.0))
    throw std::invalid_argument("timing: step lengths must be positive");
  const double ratio = capital_delta / delta;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "timing: control period " << capital_delta << " min is not an integer multiple of "
        << "the trajectory step " << delta << " min";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<int>(rounded);
}

double InfluentSeries::flow_at(double step) const {
  const double pos = step - first_step;
  if (flow.empty()) return 0.0;
  if (pos <= 0.0) return flow.front();
  const auto last = static_cast<double>(flow.size() - 1);
  if (pos >= last) return flow.back();
  const auto k = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * flow[k] + w * flow[k + 1];
}

void InfluentSeries::conc_at(double step, std::span<double> out) const {
  if (conc.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double pos = step - first_step;
  const auto last = static_cast<double>(conc.size() - 1);
  std::size_t k = 0;
  double w = 0.0;
  if (pos >= last) {
    k = conc.size() - 1;
  } else if (pos > 0.0) {
    k = static_cast<std::size_t>(pos);
    w = pos - static_cast<double>(k);
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    const double a = conc[k][s];
    const double b = (w > 0.0) ? conc[k + 1][s] : a;
    out[s] = (1.0 - w) * a + w * b;
  }
}

int Scenario::am_backsteps() const {
  return timing.am_order <= 1 ? 1 : timing.am_order - 1;
}

int Scenario::tau_ic() const {
  return std::max({network.max_delay(), am_backsteps(), 3});
}

int Scenario::required_last_step() const {
  return timing.total_steps() + timing.horizon_steps + 1;
}

const InfluentSeries* Scenario::influent_for(std::size_t tank) const {
  for (const InfluentSeries& s : influent)
    if (s.tank == tank) return &s;
  return nullptr;
}

std::vector<std::string> Scenario::violations() const {
  std::vector<std::string> out = validate_network(network);
  const std::size_t m = species.size();
  try {
    (void)timing.steps_per_period();
  } catch (const std::invalid_argument& e) {
    out.push_back(e.what());
  }
  if (timing.horizon_steps < 1) out.push_back("timing: horizon must be at least one step");
  if (timing.sim_periods < 0) out.push_back("timing: sim_periods must be nonnegative");
  if (timing.am_order < 1 || timing.am_order > 4)
    out.push_back("timing: Adams-Moulton order must be in 1..4");

  if (biology.size() != network.plants().size())
    out.push_back("biology: expected one entry per plant");
  for (std::size_t k = 0; k < biology.size(); ++k) {
    for (const std::string& v : biology[k].violations())
      out.push_back("biology[" + std::to_string(k) + "]: " + v);
    if (biology[k].species != species)
      out.push_back("biology[" + std::to_string(k) + "]: species list differs from scenario");
  }

  auto check_len = [&](const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n)
      out.push_back(std::string(what) + ": expected " + std::to_string(n) + " entries");
  };
  check_len(weights.pollutant_release, m, "weights.pollutant_release");
  check_len(weights.regulation_violation, m, "weights.regulation_violation");
  if (!biology.empty())
    check_len(weights.microbial_growth, biology.front().reaction_count(),
              "weights.microbial_growth");
  check_len(xi_max, m, "xi_max");

  const std::size_t nt = network.tank_count();
  check_len(initial.volume, nt, "initial_state.volume");
  check_len(initial.pipe_setpoint, network.pipe_count(), "initial_state.setpoints");
  check_len(initial.plant_outflow, network.plants().size(), "initial_state.plant_outflow");
  if (initial.conc.size() != nt) {
    out.push_back("initial_state.concentrations: expected one vector per tank");
  } else {
    for (const auto& c : initial.conc)
      if (c.size() != m) {
        out.push_back("initial_state.concentrations: wrong species count");
        break;
      }
  }
  if (initial.volume.size() == nt) {
    for (std::size_t i : network.storage_tanks()) {
      const double v = initial.volume[i];
      if (v < 0.0 || v > network.tank(i).v_max)
        out.push_back("initial_state: volume of '" + network.tank(i).id +
                      "' outside [0, v_max]");
    }
  }

  if (!(volume_margin >= 0.0 && volume_margin < 0.5))
    out.push_back("options.volume_margin: must lie in [0, 0.5)");

  for (std::size_t i : network.inlets())
    if (influent_for(i) == nullptr)
      out.push_back("influent: no series for inlet '" + network.tank(i).id + "'");
  return out;
}

std::vector<std::string> Scenario::coverage_violations() const {
  std::vector<std::string> out;
  const std::size_t nt = network.tank_count();
  for (const InfluentSeries& s : influent) {
    if (s.tank >= nt || !network.tank(s.tank).has_external_inflow) {
      out.push_back("influent: series for a tank without external inflow");
      continue;
    }
    const std::string name = network.tank(s.tank).id;
    if (s.flow.empty() || s.first_step > -tau_ic() ||
        s.last_step() < required_last_step()) {
      out.push_back("influent: series for '" + name + "' does not cover steps " +
                    std::to_string(-tau_ic()) + ".." + std::to_string(required_last_step()));
    }
    if (s.conc.size() != s.flow.size())
      out.push_back("influent: concentration samples for '" + name + "' misaligned");
  }
  return out;
}

}  // namespace sewerflow
