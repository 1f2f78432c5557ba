#include "sewerflow/socp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sewerflow/discretize.hpp"

namespace sewerflow {

namespace {

constexpr std::size_t kNone = VariableLayout::kNone;

int positive_mod(int a, int r) { return ((a % r) + r) % r; }

double external_flow(const Scenario& sc, std::size_t tank, int step) {
  const InfluentSeries* s = sc.influent_for(tank);
  return s ? s->flow_at(static_cast<double>(step)) : 0.0;
}

/// Q_p at l with history before -tau clamped to the oldest value.
std::size_t q_var(const VariableLayout& L, std::size_t pipe, int l) {
  return L.q[L.row(std::max(l, -L.tau_ic))][pipe];
}

void eq(ConicProgram& prog, LinearExpr e, RowTag tag) {
  prog.add_equality({std::move(e.terms), -e.constant, tag});
}
void le(ConicProgram& prog, LinearExpr e, RowTag tag) {
  prog.add_inequality({std::move(e.terms), -e.constant, tag});
}

/// Volume derivative of storage tank i at l as an affine expression.
LinearExpr volume_derivative(const Scenario& sc, const VariableLayout& L, std::size_t tank, int l) {
  const NetworkModel& net = sc.network;
  LinearExpr d;
  d.constant = external_flow(sc, tank, L.first_step + l);
  for (std::size_t p : net.in_pipes(tank)) d.add(q_var(L, p, l - net.pipe(p).delay_steps), 1.0);
  for (std::size_t p : net.out_pipes(tank)) d.add(q_var(L, p, l), -1.0);
  if (l >= 0 && L.flood[L.row(l)][tank] != kNone) d.add(L.flood[L.row(l)][tank], -1.0);
  return d;
}

/// Sum of delayed inflows into a tank at l plus its external inflow.
LinearExpr tank_inflow(const Scenario& sc, const VariableLayout& L, std::size_t tank, int l) {
  const NetworkModel& net = sc.network;
  LinearExpr e;
  e.constant = external_flow(sc, tank, L.first_step + l);
  for (std::size_t p : net.in_pipes(tank)) e.add(q_var(L, p, l - net.pipe(p).delay_steps), 1.0);
  return e;
}

double max_influent_conc(const Scenario& sc, std::size_t species) {
  double hi = 0.0;
  for (const InfluentSeries& s : sc.influent)
    for (const auto& c : s.conc) hi = std::max(hi, c.at(species));
  return hi;
}

/// Typical concentration per species: influent and initial plant levels.
std::vector<double> conc_scales(const Scenario& sc) {
  std::vector<double> out(sc.species_count(), 0.0);
  for (std::size_t s = 0; s < out.size(); ++s) {
    out[s] = max_influent_conc(sc, s);
    for (std::size_t i : sc.network.plants()) out[s] = std::max(out[s], sc.initial.conc[i][s]);
    if (!(out[s] > 0.0)) out[s] = 1.0;
  }
  return out;
}

std::size_t scaled(ConicProgram& prog, std::size_t var, double scale) {
  if (scale > 0.0 && std::isfinite(scale)) prog.set_scale(var, scale);
  return var;
}

}  // namespace

const char* to_string(ControllerKind kind) { return kind == ControllerKind::FC ? "FC" : "F"; }

std::vector<bool> held_pipes(const NetworkModel& net) {
  std::vector<bool> held(net.pipe_count(), false);
  for (std::size_t p : net.actuator_pipes())
    held[p] = net.pipe(p).control != PipeControl::VolumeLimited;
  for (std::size_t d : net.diversion_nodes()) {
    const auto& outs = net.out_pipes(d);
    if (!outs.empty()) held[outs.back()] = false;
  }
  return held;
}

VariableLayout allocate_layout(ConicProgram& prog, const Scenario& sc, const Observation& obs,
                               ControllerKind kind) {
  const NetworkModel& net = sc.network;
  VariableLayout L;
  L.kind = kind;
  L.tau_ic = sc.tau_ic();
  L.horizon = sc.timing.horizon_steps;
  L.first_step = obs.step + 1;
  const int R = sc.timing.steps_per_period();
  L.first_free = 0;
  while (positive_mod(L.first_step + L.first_free, R) != 0) ++L.first_free;

  const std::size_t rows = static_cast<std::size_t>(L.rows());
  const std::size_t np = net.pipe_count(), nk = net.plants().size(), nt = net.tank_count();
  L.q.assign(rows, std::vector<std::size_t>(np, kNone));
  L.q_out.assign(rows, std::vector<std::size_t>(nk, kNone));
  L.cso.assign(rows, std::vector<std::size_t>(nk, kNone));
  L.volume.assign(rows, std::vector<std::size_t>(nt, kNone));
  L.flood.assign(rows, std::vector<std::size_t>(nt, kNone));
  L.cap_gap.assign(rows, std::vector<std::size_t>(np, kNone));
  if (sc.volume_margin > 0.0) L.excess.assign(rows, std::vector<std::size_t>(nt, kNone));
  const bool fc = kind == ControllerKind::FC;
  if (fc) {
    L.xi.assign(rows, std::vector<std::vector<std::size_t>>(nk));
    L.rate.assign(rows, std::vector<std::vector<std::size_t>>(nk));
    L.hinge.assign(rows, std::vector<std::vector<std::size_t>>(nk));
  }

  double flow_scale = 0.0;
  for (const Pipe& p : net.pipes()) flow_scale = std::max(flow_scale, p.q_max);
  const std::vector<double> cs = fc ? conc_scales(sc) : std::vector<double>{};

  for (int l = -L.tau_ic; l <= L.horizon; ++l) {
    const std::size_t r = L.row(l);
    const bool ic = l < 0;
    for (std::size_t p = 0; p < np; ++p) {
      const Pipe& pipe = net.pipe(p);
      const double lo = pipe.control == PipeControl::PumpOrGate ? pipe.q_min : 0.0;
      L.q[r][p] = scaled(prog, ic ? prog.add_variable() : prog.add_variable(lo, pipe.q_max),
                         pipe.q_max);
      if (!ic && pipe.control == PipeControl::VolumeLimited)
        L.cap_gap[r][p] = scaled(prog, prog.add_variable(0.0, kInf), pipe.q_max);
    }
    for (std::size_t k = 0; k < nk; ++k) {
      const Tank& t = net.tank(net.plants()[k]);
      L.q_out[r][k] = scaled(
          prog, ic ? prog.add_variable() : prog.add_variable(t.q_out_min, t.q_out_max),
          t.q_out_max);
      if (!ic) L.cso[r][k] = scaled(prog, prog.add_variable(0.0, kInf), flow_scale);
    }
    for (std::size_t i : net.storage_tanks()) {
      const Tank& t = net.tank(i);
      L.volume[r][i] =
          scaled(prog, ic ? prog.add_variable() : prog.add_variable(0.0, t.v_max), t.v_max);
      if (!ic && sc.volume_margin > 0.0)
        L.excess[r][i] = scaled(prog, prog.add_variable(0.0, kInf), t.v_max);
      if (!ic && t.kind == TankKind::Virtual)
        L.flood[r][i] = scaled(prog, prog.add_variable(0.0, kInf), flow_scale);
    }
    if (!fc) continue;
    for (std::size_t k = 0; k < nk; ++k) {
      const PlantBiology& bio = sc.biology[k];
      const std::size_t m = bio.species_count();
      for (std::size_t s = 0; s < m; ++s)
        L.xi[r][k].push_back(
            scaled(prog, ic ? prog.add_variable() : prog.add_variable(0.0, kInf), cs[s]));
      if (ic) continue;
      for (std::size_t q = 0; q < bio.reaction_count(); ++q) {
        const KineticLaw& law = bio.laws[q];
        L.rate[r][k].push_back(scaled(prog, prog.add_variable(0.0, kInf),
                                      rate_eval(law, cs[law.substrate_index],
                                                cs[law.biomass_index])));
      }
      for (std::size_t s = 0; s < m; ++s)
        L.hinge[r][k].push_back(
            sc.xi_max.at(s) < 1e29 ? scaled(prog, prog.add_variable(0.0, kInf), cs[s]) : kNone);
    }
  }
  L.shortfall.assign(np, kNone);
  if (L.first_free > 0) {
    const std::vector<bool> held = held_pipes(net);
    for (std::size_t p = 0; p < np; ++p) {
      const Pipe& pipe = net.pipe(p);
      if (held[p] && L.volume[0][pipe.from] != kNone)
        L.shortfall[p] = scaled(prog, prog.add_variable(0.0, kInf), pipe.q_max);
    }
  }
  if (fc)
    for (std::size_t k = 0; k < nk; ++k)
      L.outflow_sum.push_back(scaled(prog, prog.add_variable(),
                                     net.tank(net.plants()[k]).q_out_max * (L.horizon + 1)));
  return L;
}

void build_omega(ConicProgram& prog, const VariableLayout& L, const Scenario& sc,
                 const Observation& obs) {
  const NetworkModel& net = sc.network;
  const int tau = L.tau_ic;
  if (static_cast<int>(obs.volume.size()) != tau)
    throw std::invalid_argument("build_omega: observation history does not match tau_ic");
  const int R = sc.timing.steps_per_period();
  const std::vector<bool> held = held_pipes(net);

  // Initial conditions.
  for (int l = -tau; l < 0; ++l) {
    const std::size_t r = L.row(l);
    const std::size_t j = r;
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
      const Pipe& pipe = net.pipe(p);
      double v = obs.pipe_flow[j][p];
      if (held[p])
        v = obs.setpoint[j][p];
      else if (!pipe.is_actuator())
        v = net.tank(pipe.from).beta * obs.volume[j][pipe.from];
      prog.add_equality({{{L.q[r][p], 1.0}}, v, RowTag::InitialCondition});
    }
    for (std::size_t k = 0; k < net.plants().size(); ++k)
      prog.add_equality({{{L.q_out[r][k], 1.0}}, obs.plant_outflow[j][k], RowTag::InitialCondition});
    for (std::size_t i : net.storage_tanks())
      prog.add_equality({{{L.volume[r][i], 1.0}}, obs.volume[j][i], RowTag::InitialCondition});
  }

  for (int l = 0; l <= L.horizon; ++l) {
    const std::size_t r = L.row(l);
    const bool block_start = positive_mod(L.first_step + l, R) == 0;
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
      const Pipe& pipe = net.pipe(p);
      if (pipe.control == PipeControl::Uncontrolled || pipe.control == PipeControl::VolumeLimited) {
        const std::size_t v = L.volume[r][pipe.from];
        if (v == kNone) throw std::logic_error("pipe " + pipe.label + " leaves a stateless tank");
        LinearExpr e;
        e.add(L.q[r][p], 1.0).add(v, -net.tank(pipe.from).beta);
        if (pipe.control == PipeControl::Uncontrolled)
          eq(prog, e, RowTag::Uncontrolled);
        else
          le(prog, e, RowTag::VolumeLimit);
      }
      if (held[p] && !block_start) {
        LinearExpr e;
        e.add(L.q[r][p], 1.0).add(L.q[L.row(l - 1)][p], -1.0);
        if (l == 0 && L.shortfall[p] != kNone) e.add(L.shortfall[p], 1.0);
        eq(prog, e, RowTag::Hold);
      }
      if (L.cap_gap[r][p] != kNone && !block_start) {
        // command = flow + gap, constant inside the block
        LinearExpr e;
        e.add(L.q[r][p], 1.0).add(L.cap_gap[r][p], 1.0);
        if (l == 0)
          e.constant = -obs.setpoint.back()[p];
        else
          e.add(L.q[L.row(l - 1)][p], -1.0).add(L.cap_gap[L.row(l - 1)][p], -1.0);
        eq(prog, e, RowTag::Hold);
      }
    }
    for (std::size_t d : net.diversion_nodes()) {
      LinearExpr e = tank_inflow(sc, L, d, l);
      for (std::size_t p : net.out_pipes(d)) e.add(L.q[r][p], -1.0);
      eq(prog, e, RowTag::DiversionBalance);
    }
    for (std::size_t k = 0; k < net.plants().size(); ++k) {
      LinearExpr e = tank_inflow(sc, L, net.plants()[k], l);
      e.add(L.cso[r][k], -1.0).add(L.q_out[r][k], -1.0);
      eq(prog, e, RowTag::PlantBalance);
    }
  }

  // Volume dynamics.
  const AMScheme am = am_coefficients(sc.timing.am_order);
  const double delta = sc.timing.delta;
  for (int l = 0; l <= L.horizon; ++l) {
    for (std::size_t i : net.storage_tanks()) {
      LinearExpr e;
      e.add(L.volume[L.row(l)][i], 1.0).add(L.volume[L.row(l - 1)][i], -1.0);
      for (int k = 0; k <= am.backsteps(); ++k) {
        const LinearExpr d = volume_derivative(sc, L, i, l - k);
        const double w = -delta * am.alpha[static_cast<std::size_t>(k)];
        for (const LinTerm& t : d.terms) e.add(t.var, w * t.coef);
        e.constant += w * d.constant;
      }
      eq(prog, e, RowTag::VolumeDynamics);
      if (!L.excess.empty()) {
        LinearExpr b;
        b.add(L.volume[L.row(l)][i], 1.0).add(L.excess[L.row(l)][i], -1.0);
        b.constant = -(1.0 - sc.volume_margin) * net.tank(i).v_max;
        le(prog, b, RowTag::VolumeLimit);
      }
    }
  }
}

namespace {

void add_common_objective(ConicProgram& prog, const VariableLayout& L, const Scenario& sc) {
  const NetworkModel& net = sc.network;
  const Weights& w = sc.weights;
  const double delta = sc.timing.delta;
  const int R = sc.timing.steps_per_period();
  const std::vector<bool> held = held_pipes(net);

  for (int l = 0; l <= L.horizon; ++l) {
    const std::size_t r = L.row(l);
    const int phase = positive_mod(L.first_step + l, R);
    for (std::size_t p : net.actuator_pipes()) {
      // Held pipes are constant inside a block; only boundary terms can be nonzero.
      if (w.slope > 0.0 && (!held[p] || phase == 0)) {
        LinearExpr e;
        e.add(L.q[r][p], 1.0).add(L.q[L.row(l - 1)][p], -1.0);
        prog.add_square(w.slope, e);
      }
      if (w.curvature > 0.0 && (!held[p] || phase == 0 || phase == 1 || R == 1)) {
        LinearExpr e;
        e.add(L.q[r][p], 1.0).add(L.q[L.row(l - 1)][p], -2.0).add(L.q[L.row(l - 2)][p], 1.0);
        prog.add_square(w.curvature, e);
      }
    }
    for (std::size_t i : net.storage_tanks()) {
      if (w.total_volume != 0.0) prog.add_linear_cost(L.volume[r][i], w.total_volume);
      if (l == L.horizon && w.final_volume != 0.0)
        prog.add_linear_cost(L.volume[r][i], w.final_volume);
      if (L.flood[r][i] != kNone) prog.add_linear_cost(L.flood[r][i], w.flooding * delta);
    }
    for (std::size_t k = 0; k < net.plants().size(); ++k)
      prog.add_linear_cost(L.cso[r][k], w.cso * delta);
  }
  for (std::size_t v : L.shortfall)
    if (v != kNone) prog.add_linear_cost(v, w.flooding * delta * L.first_free);
  // Undelivered command and volume inside the back-off are cheaper than a
  // flood of the same size, so a real flood is never traded for them.
  for (const auto& row : L.cap_gap)
    for (std::size_t v : row)
      if (v != kNone) prog.add_linear_cost(v, 0.1 * w.flooding * delta);
  for (const auto& row : L.excess)
    for (std::size_t v : row)
      if (v != kNone) prog.add_linear_cost(v, 0.1 * w.flooding);
}

void add_balance_objective(ConicProgram& prog, const VariableLayout& L, const Scenario& sc) {
  const NetworkModel& net = sc.network;
  const Weights& w = sc.weights;
  const std::size_t nk = net.plants().size();
  double cap = 0.0;
  for (std::size_t i : net.plants()) cap += net.tank(i).q_out_max;
  const double n = L.horizon + 1;
  for (std::size_t k = 0; k < nk; ++k) {
    LinearExpr sum;
    sum.add(L.outflow_sum[k], 1.0);
    for (int l = 0; l <= L.horizon; ++l) sum.add(L.q_out[L.row(l)][k], -1.0);
    eq(prog, sum, RowTag::Auxiliary);
  }
  for (int l = 0; l <= L.horizon; ++l) {
    const std::size_t r = L.row(l);
    for (std::size_t k = 0; k < nk; ++k) {
      const double qmax = net.tank(net.plants()[k]).q_out_max;
      if (w.plant_balance > 0.0 && nk > 1) {
        LinearExpr e;
        for (std::size_t j = 0; j < nk; ++j) e.add(L.q_out[r][j], (j == k ? 1.0 / qmax : 0.0) - 1.0 / cap);
        prog.add_square(w.plant_balance, e);
      }
      if (w.time_balance > 0.0) {
        LinearExpr e;
        e.add(L.q_out[r][k], 1.0 / qmax).add(L.outflow_sum[k], -1.0 / (n * qmax));
        prog.add_square(w.time_balance, e);
      }
    }
  }
}

}  // namespace

TrajProgram build_traj_f(const Scenario& sc, const Observation& obs) {
  TrajProgram tp;
  tp.layout = allocate_layout(tp.program, sc, obs, ControllerKind::F);
  build_omega(tp.program, tp.layout, sc, obs);
  add_common_objective(tp.program, tp.layout, sc);
  return tp;
}

TrajProgram build_traj_fc(const Scenario& sc, const Observation& obs, const PlantEstimate& est) {
  TrajProgram tp;
  ConicProgram& prog = tp.program;
  VariableLayout& L = tp.layout;
  L = allocate_layout(prog, sc, obs, ControllerKind::FC);
  build_omega(prog, L, sc, obs);
  add_common_objective(prog, L, sc);
  add_balance_objective(prog, L, sc);

  const NetworkModel& net = sc.network;
  const Weights& w = sc.weights;
  const double delta = sc.timing.delta;
  const int tau = L.tau_ic;
  const std::size_t nk = net.plants().size();
  if (est.first_step != L.first_step - tau)
    throw std::invalid_argument("build_traj_fc: estimate does not start at the history");
  if (static_cast<int>(est.conc.size()) < L.rows())
    throw std::invalid_argument("build_traj_fc: estimate does not cover the horizon");

  // Initial conditions and constant history rates.
  tp.t_ic.assign(static_cast<std::size_t>(tau), {});
  for (int l = -tau; l < 0; ++l) {
    const std::size_t r = L.row(l);
    for (std::size_t k = 0; k < nk; ++k) {
      const auto& xi = obs.plant_conc[r][k];
      for (std::size_t s = 0; s < xi.size(); ++s)
        prog.add_equality({{{L.xi[r][k][s], 1.0}}, xi[s], RowTag::InitialCondition});
      const std::vector<double> t = rate_vector(sc.biology[k], xi);
      tp.t_ic[r].insert(tp.t_ic[r].end(), t.begin(), t.end());
    }
  }

  const AMScheme am = am_coefficients(sc.timing.am_order);
  for (std::size_t k = 0; k < nk; ++k) {
    const PlantBiology& bio = sc.biology[k];
    const Tank& plant = net.tank(net.plants()[k]);
    const std::size_t m = bio.species_count(), nr = bio.reaction_count();
    // Offset of plant k inside the flattened history rate rows.
    std::size_t t_off = 0;
    for (std::size_t j = 0; j < k; ++j) t_off += sc.biology[j].reaction_count();

    for (int l = 0; l <= L.horizon; ++l) {
      const std::size_t r = L.row(l);
      // Dynamics.
      for (std::size_t s = 0; s < m; ++s) {
        LinearExpr e;
        e.add(L.xi[r][k][s], 1.0).add(L.xi[L.row(l - 1)][k][s], -1.0);
        for (int b = 0; b <= am.backsteps(); ++b) {
          const int j = l - b;
          const std::size_t jr = L.row(j);
          const double a = -delta * am.alpha[static_cast<std::size_t>(b)];
          for (std::size_t q = 0; q < nr; ++q) {
            const double kap = bio.kappa[s][q];
            if (kap == 0.0) continue;
            if (j >= 0)
              e.add(L.rate[jr][k][q], a * kap);
            else
              e.constant += a * kap * tp.t_ic[jr][t_off + q];
          }
          // Q (xi_in - xi) linearized around the nominal outflow and estimate:
          // Q (xi_in^ - xi^) - Q^ (xi - xi^).
          const double f = bio.outflow_factor(s) / plant.v_bar;
          const double q_hat = est.outflow[jr][k];
          e.add(L.q_out[jr][k], a * f * (est.inlet[jr][k][s] - est.conc[jr][k][s]));
          e.add(L.xi[jr][k][s], -a * f * q_hat);
          e.constant += a * f * q_hat * est.conc[jr][k][s];
        }
        eq(prog, e, RowTag::PlantDynamics);
      }
      // Kinetics.
      for (std::size_t q = 0; q < nr; ++q) {
        const KineticLaw& law = bio.laws[q];
        const std::size_t tv = L.rate[r][k][q];
        if (law.kind == KineticKind::LinearDecay) {
          eq(prog, LinearExpr().add(tv, 1.0).add(L.xi[r][k][law.biomass_index], -law.mu),
             RowTag::Decay);
          continue;
        }
        const std::size_t z[3] = {L.xi[r][k][law.substrate_index], L.xi[r][k][law.biomass_index],
                                  tv};
        for (const ConeRow& row : soc_rows(law)) {
          ConeBlock cone;
          cone.tag = RowTag::Kinetics;
          for (std::size_t c = 0; c < 3; ++c) cone.head.add(z[c], row.c[c]);
          cone.head.constant = row.d;
          for (std::size_t i = 0; i < row.a.size(); ++i) {
            LinearExpr t;
            for (std::size_t c = 0; c < 3; ++c) t.add(z[c], row.a[i][c]);
            t.constant = row.b[i];
            cone.tail.push_back(std::move(t));
          }
          prog.add_cone(std::move(cone));
        }
        if (sc.underestimator.enabled) {
          const double s_max =
              sc.underestimator.s_max_factor * max_influent_conc(sc, law.substrate_index);
          if (s_max > 0.0) {
            const double x_ref = std::max(est.conc[r][k][law.biomass_index], 0.0);
            const LinearUnderestimator u = underestimator_row(law, 0.0, s_max, x_ref);
            LinearExpr e;
            e.add(L.xi[r][k][law.substrate_index], u.slope).add(tv, -1.0);
            e.constant = u.intercept;
            le(prog, e, RowTag::Underestimator);
          }
        }
        // Growth reward.
        if (w.microbial_growth.at(q) != 0.0)
          prog.add_linear_cost(tv, -w.microbial_growth[q] * plant.v_bar * delta);
      }
      // Hinges and release.
      for (std::size_t s = 0; s < m; ++s) {
        const std::size_t h = L.hinge[r][k][s];
        if (h != kNone) {
          LinearExpr e;
          e.add(L.xi[r][k][s], 1.0).add(h, -1.0);
          e.constant = -sc.xi_max[s];
          le(prog, e, RowTag::Hinge);
          prog.add_linear_cost(h, w.regulation_violation.at(s));
        }
        const double wpr = w.pollutant_release.at(s);
        if (wpr != 0.0)
          prog.add_linear_cost(L.q_out[r][k],
                               delta * wpr * bio.outflow_factor(s) * est.conc[r][k][s]);
      }
    }
  }
  return tp;
}

ExtractedControls extract_controls(const Solution& sol, const VariableLayout& L,
                                   const Scenario& sc) {
  if (!usable(sol.status))
    throw std::runtime_error(std::string("extract_controls: solver status ") +
                             to_string(sol.status));
  const NetworkModel& net = sc.network;
  ExtractedControls out;
  const std::size_t r0 = L.row(L.first_free);
  out.setpoints.assign(net.pipe_count(), 0.0);
  for (std::size_t p : net.actuator_pipes()) {
    double u = sol.x.at(L.q[r0][p]);
    if (L.cap_gap[r0][p] != kNone) u += sol.x.at(L.cap_gap[r0][p]);
    out.setpoints[p] = std::clamp(u, 0.0, net.pipe(p).q_max);
  }
  for (std::size_t k = 0; k < net.plants().size(); ++k)
    out.plant_outflow.push_back(sol.x.at(L.q_out[r0][k]));
  for (int l = 0; l <= L.horizon; ++l) {
    std::vector<double> row(net.pipe_count());
    for (std::size_t p = 0; p < net.pipe_count(); ++p)
      row[p] = std::clamp(sol.x.at(L.q[L.row(l)][p]), 0.0, net.pipe(p).q_max);
    out.nominal.push_back(std::move(row));
  }
  return out;
}

ExactnessAudit audit_exactness(const Solution& sol, const VariableLayout& L, const Scenario& sc) {
  ExactnessAudit a;
  if (L.kind != ControllerKind::FC) return a;
  const NetworkModel& net = sc.network;
  for (std::size_t k = 0; k < net.plants().size(); ++k) {
    const PlantBiology& bio = sc.biology[k];
    for (int l = 0; l <= L.horizon; ++l) {
      const std::size_t r = L.row(l);
      for (std::size_t q = 0; q < bio.reaction_count(); ++q) {
        const KineticLaw& law = bio.laws[q];
        if (law.kind == KineticKind::LinearDecay) continue;
        const double s = sol.x.at(L.xi[r][k][law.substrate_index]);
        const double x = sol.x.at(L.xi[r][k][law.biomass_index]);
        const double t = sol.x.at(L.rate[r][k][q]);
        const double gap = exactness_gap(law, s, x, t);
        a.gaps.push_back(gap);
        ++a.count;
        if (gap < 1e-4) ++a.below_1e4;
        const double phi = rate_eval(law, std::max(s, 0.0), std::max(x, 0.0));
        a.worst_excess = std::max(a.worst_excess, t - phi);
      }
    }
  }
  return a;
}

}  // namespace sewerflow
