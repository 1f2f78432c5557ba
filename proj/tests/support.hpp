#pragma once

// Small programmatic scenario builder shared by the unit tests.

#include <string>
#include <vector>

#include "sewerflow/model.hpp"

namespace testing_support {

using namespace sewerflow;

struct Builder {
  std::vector<Tank> tanks;
  std::vector<Pipe> pipes;
  std::vector<std::string> species{"S"};
  std::vector<PlantBiology> biology;
  std::vector<double> v0;
  std::vector<std::vector<double>> c0;
  std::vector<double> setpoint;
  struct Inflow {
    std::string tank;
    std::vector<double> flow;  // per grid step from step 0 (last repeats)
    std::vector<double> conc;
  };
  std::vector<Inflow> inflows;
  Timing timing{1.0, 1.0, 4, 10, 1};

  std::size_t tank(const std::string& id, TankKind kind, double v_max, double volume = 0.0) {
    Tank t;
    t.id = id;
    t.kind = kind;
    t.v_max = v_max;
    tanks.push_back(t);
    v0.push_back(volume);
    c0.push_back({});
    return tanks.size() - 1;
  }
  std::size_t plant(const std::string& id, double v_bar, double q_max, double q_min = 0.0) {
    const std::size_t i = tank(id, TankKind::Plant, 0.0);
    tanks[i].v_bar = v_bar;
    tanks[i].q_out_max = q_max;
    tanks[i].q_out_min = q_min;
    return i;
  }
  std::size_t pipe(std::size_t from, std::size_t to, PipeControl control, double q_max,
                   int delay = 0, double initial = 0.0) {
    Pipe p;
    p.label = tanks[from].id + "->" + tanks[to].id;
    p.from = from;
    p.to = to;
    p.q_max = q_max;
    p.control = control;
    p.delay_steps = delay;
    pipes.push_back(p);
    setpoint.push_back(initial);
    return pipes.size() - 1;
  }
  void inflow(const std::string& id, std::vector<double> flow, std::vector<double> conc) {
    inflows.push_back({id, std::move(flow), std::move(conc)});
  }

  Scenario build() const {
    Scenario sc;
    sc.name = "test";
    sc.species = species;
    const std::size_t m = species.size();
    std::vector<Tank> ts = tanks;
    for (const Inflow& f : inflows)
      for (Tank& t : ts)
        if (t.id == f.tank) t.has_external_inflow = true;
    sc.network = NetworkModel(ts, pipes);
    sc.biology = biology;
    while (sc.biology.size() < sc.network.plants().size()) {
      PlantBiology b;
      b.species = species;
      b.kappa.assign(m, {});
      b.biomass_index = m - 1;
      b.effluent_biomass_factor = 1.0;
      sc.biology.push_back(b);
    }
    sc.timing = timing;
    sc.weights.pollutant_release.assign(m, 1.0);
    sc.weights.regulation_violation.assign(m, 0.0);
    sc.weights.microbial_growth.assign(sc.biology.front().reaction_count(), 0.0);
    sc.xi_max.assign(m, 1e30);
    sc.initial.volume = v0;
    for (std::size_t i = 0; i < ts.size(); ++i)
      sc.initial.conc.push_back(c0[i].empty() ? std::vector<double>(m, 0.0) : c0[i]);
    sc.initial.pipe_setpoint = setpoint;
    sc.initial.plant_outflow.assign(sc.network.plants().size(), 0.0);
    const int first = -sc.tau_ic() - 2;
    const int last = sc.required_last_step() + 2;
    for (const Inflow& f : inflows) {
      InfluentSeries s;
      s.tank = sc.network.tank_index(f.tank);
      s.first_step = first;
      for (int k = first; k <= last; ++k) {
        const std::size_t idx = static_cast<std::size_t>(std::max(k, 0));
        s.flow.push_back(f.flow[std::min(idx, f.flow.size() - 1)]);
        s.conc.push_back(f.conc);
      }
      sc.influent.push_back(std::move(s));
    }
    return sc;
  }
};

}  // namespace testing_support
