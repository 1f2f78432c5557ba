#include "sewerflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "sewerflow/kinetics.hpp"

namespace sewerflow {

namespace {

constexpr double kStageC[4] = {0.0, 0.5, 0.5, 1.0};
constexpr double kStageA[4] = {0.0, 0.5, 0.5, 1.0};
constexpr double kStageB[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
constexpr double kTinyVolume = 1e-9;  // m3

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

struct Simulator::StageOut {
  std::vector<double> q;                   // per pipe departure flow
  std::vector<std::vector<double>> c;      // per pipe departure concentration
  std::vector<double> dv;                  // per tank
  std::vector<std::vector<double>> dm;     // storage mass / plant conc derivative
  std::vector<double> ext_q;               // per tank
  std::vector<std::vector<double>> ext_m;  // per tank
  std::vector<double> q_out, cso;          // per plant
  std::vector<std::vector<double>> xi_in;  // per plant
  std::vector<std::vector<double>> xi_plant;  // per plant, stage reactor state
};

Simulator::Simulator(const Scenario& scenario) : sc_(&scenario) {
  const NetworkModel& net = scenario.network;
  m_ = scenario.species_count();
  h_ = scenario.timing.delta / kSubsteps;
  const std::size_t n = net.tank_count();
  vol_.assign(n, 0.0);
  mass_.assign(n, std::vector<double>(m_, 0.0));
  xi_.assign(n, std::vector<double>(m_, 0.0));
  last_c_.assign(n, std::vector<double>(m_, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const Tank& t = net.tank(i);
    const std::vector<double>& c0 = scenario.initial.conc.at(i);
    last_c_[i] = c0;
    if (t.is_storage()) {
      vol_[i] = scenario.initial.volume.at(i);
      for (std::size_t s = 0; s < m_; ++s) mass_[i][s] = vol_[i] * c0[s];
    } else if (t.is_plant()) {
      xi_[i] = c0;
    }
  }
  last_xi_in_.assign(net.plants().size(), std::vector<double>(m_, 0.0));
  last_q_out_ = scenario.initial.plant_outflow;
  last_q_out_.resize(net.plants().size(), 0.0);
  for (std::size_t k = 0; k < net.plants().size(); ++k) {
    // inlet concentration before any flow: mix of upstream initial values
    double q = 0.0;
    std::vector<double> mix(m_, 0.0);
    for (std::size_t p : net.in_pipes(net.plants()[k])) {
      const double qp = std::max(scenario.initial.pipe_setpoint.at(p), 1e-12);
      q += qp;
      for (std::size_t s = 0; s < m_; ++s) mix[s] += qp * last_c_[net.pipe(p).from][s];
    }
    for (std::size_t s = 0; s < m_; ++s) last_xi_in_[k][s] = q > 0.0 ? mix[s] / q : 0.0;
  }

  ring_ = static_cast<std::size_t>(kSubsteps) * static_cast<std::size_t>(net.max_delay()) + 1;
  ring_buf_.resize(net.pipe_count());
  for (std::size_t p = 0; p < net.pipe_count(); ++p) {
    const Pipe& pipe = net.pipe(p);
    if (pipe.delay_steps == 0) continue;
    const Tank& src = net.tank(pipe.from);
    double q0 = pipe.control == PipeControl::Uncontrolled ? src.beta * vol_[pipe.from]
                                                          : scenario.initial.pipe_setpoint.at(p);
    q0 = std::max(q0, 0.0);
    Departure d;
    for (double& q : d.q) q = q0;
    d.c.resize(4 * m_);
    for (int st = 0; st < 4; ++st)
      for (std::size_t s = 0; s < m_; ++s) d.c[st * m_ + s] = last_c_[pipe.from][s];
    ring_buf_[p].assign(ring_, d);
  }

  totals_.inflow_mass.assign(m_, 0.0);
  totals_.released_mass.assign(m_, 0.0);
  totals_.cso_mass.assign(m_, 0.0);
  totals_.flood_mass.assign(m_, 0.0);
  totals_.clipped_mass.assign(m_, 0.0);
  step_pipe_.assign(net.pipe_count(), 0.0);
  step_flood_.assign(n, 0.0);
  step_in_.assign(n, 0.0);
  step_cso_.assign(net.plants().size(), 0.0);
  step_out_.assign(net.plants().size(), 0.0);
  step_rel_.assign(net.plants().size(), std::vector<double>(m_, 0.0));
}

const Simulator::Departure& Simulator::departed(std::size_t pipe, long long substep) const {
  const long long r = static_cast<long long>(ring_);
  return ring_buf_[pipe][static_cast<std::size_t>(((substep % r) + r) % r)];
}

Simulator::Departure& Simulator::departing(std::size_t pipe, long long substep) {
  const long long r = static_cast<long long>(ring_);
  return ring_buf_[pipe][static_cast<std::size_t>(((substep % r) + r) % r)];
}

namespace {

/// Flow into branch p of diversion d for inflow q. Commanded branches are
/// scaled down together when q cannot cover them; the last branch gets the rest.
double branch_flow(const NetworkModel& net, const std::vector<double>& cmd, std::size_t d,
                   std::size_t p, double q) {
  const auto& outs = net.out_pipes(d);
  double held = 0.0;
  for (std::size_t j = 0; j + 1 < outs.size(); ++j) held += cmd[outs[j]];
  q = std::max(q, 0.0);
  if (p == outs.back()) return std::max(q - held, 0.0);
  return held > q ? cmd[p] * q / held : cmd[p];
}

}  // namespace

void Simulator::plan_actuators(std::span<const double> setpoints, std::vector<double>& fixed,
                               std::vector<double>& share) const {
  const Scenario& sc = *sc_;
  const NetworkModel& net = sc.network;
  fixed.assign(net.pipe_count(), 0.0);
  share.assign(net.pipe_count(), 0.0);

  // diversion commands; the last branch takes the remainder
  for (std::size_t d : net.diversion_nodes()) {
    const auto& outs = net.out_pipes(d);
    for (std::size_t j = 0; j + 1 < outs.size(); ++j)
      share[outs[j]] = std::clamp(setpoints[outs[j]], 0.0, net.pipe(outs[j]).q_max);
  }

  // Lower/upper bounds on stage inflow, propagated in zero-delay order, so
  // that fixed actuator outflows cannot empty a tank below zero.
  const std::size_t n = net.tank_count();
  std::vector<double> in_min(n, 0.0), in_max(n, 0.0);
  const double t0 = time();
  for (std::size_t i = 0; i < n; ++i) {
    if (const InfluentSeries* ext = sc.influent_for(i)) {
      const double a = ext->flow_at(t0 / sc.timing.delta);
      const double b = ext->flow_at((t0 + h_) / sc.timing.delta);
      in_min[i] += std::max(0.0, std::min(a, b));
      in_max[i] += std::max(0.0, std::max(a, b));
    }
  }
  for (std::size_t p = 0; p < net.pipe_count(); ++p) {
    const Pipe& pipe = net.pipe(p);
    if (pipe.delay_steps == 0) continue;
    const Departure& d = departed(p, substep_ - static_cast<long long>(kSubsteps) * pipe.delay_steps);
    in_min[pipe.to] += *std::min_element(d.q, d.q + 4);
    in_max[pipe.to] += *std::max_element(d.q, d.q + 4);
  }
  for (std::size_t i : net.zero_delay_order()) {
    const Tank& t = net.tank(i);
    if (t.is_diversion()) {
      for (std::size_t p : net.out_pipes(i)) {
        if (net.pipe(p).delay_steps != 0) continue;
        in_min[net.pipe(p).to] += branch_flow(net, share, i, p, in_min[i]);
        in_max[net.pipe(p).to] += branch_flow(net, share, i, p, in_max[i]);
      }
      continue;
    }
    if (!t.is_storage()) continue;
    const double v0 = std::max(vol_[i], 0.0);
    double beta_unc = 0.0;
    std::vector<std::size_t> acts;
    for (std::size_t p : net.out_pipes(i)) {
      if (net.pipe(p).control == PipeControl::Uncontrolled)
        beta_unc += t.beta;
      else
        acts.push_back(p);
    }
    double want = 0.0;
    for (std::size_t p : acts) {
      const Pipe& pipe = net.pipe(p);
      double q = std::clamp(setpoints[p], 0.0, pipe.q_max);
      if (pipe.control == PipeControl::VolumeLimited) q = std::min(q, t.beta * v0);
      fixed[p] = q;
      want += q;
    }
    const double vmax_stage = v0 + h_ * in_max[i];
    // at most half the content per substep keeps stage volumes well above 0
    const double avail =
        std::max(0.0, 0.5 * v0 / h_ + in_min[i] - beta_unc * vmax_stage * (1.0 + 1e-9));
    if (want > avail && want > 0.0) {
      const double scale = avail / want;
      for (std::size_t p : acts) fixed[p] *= scale;
    }
    for (std::size_t p : net.out_pipes(i)) {
      if (net.pipe(p).delay_steps != 0) continue;
      const std::size_t to = net.pipe(p).to;
      if (net.pipe(p).control == PipeControl::Uncontrolled) {
        in_max[to] += t.beta * vmax_stage;
      } else {
        in_min[to] += fixed[p];
        in_max[to] += fixed[p];
      }
    }
  }
}

void Simulator::evaluate(int stage, double t, const std::vector<double>& vol,
                         const std::vector<std::vector<double>>& mass,
                         const std::vector<std::vector<double>>& xi,
                         const std::vector<double>& fixed, const std::vector<double>& share,
                         StageOut& out) const {
  const Scenario& sc = *sc_;
  const NetworkModel& net = sc.network;
  const std::size_t n = net.tank_count();
  out.q.assign(net.pipe_count(), 0.0);
  out.c.assign(net.pipe_count(), std::vector<double>(m_, 0.0));
  out.dv.assign(n, 0.0);
  out.dm.assign(n, std::vector<double>(m_, 0.0));
  out.ext_q.assign(n, 0.0);
  out.ext_m.assign(n, std::vector<double>(m_, 0.0));
  out.q_out.assign(net.plants().size(), 0.0);
  out.cso.assign(net.plants().size(), 0.0);
  out.xi_in.assign(net.plants().size(), std::vector<double>(m_, 0.0));
  out.xi_plant.assign(net.plants().size(), std::vector<double>(m_, 0.0));

  std::vector<double> in_q(n, 0.0);
  std::vector<std::vector<double>> in_m(n, std::vector<double>(m_, 0.0));
  std::vector<double> ext_c(m_);
  for (std::size_t i = 0; i < n; ++i) {
    if (const InfluentSeries* ext = sc.influent_for(i)) {
      const double pos = t / sc.timing.delta;
      const double q = std::max(0.0, ext->flow_at(pos));
      ext->conc_at(pos, ext_c);
      out.ext_q[i] = q;
      in_q[i] += q;
      for (std::size_t s = 0; s < m_; ++s) {
        out.ext_m[i][s] = q * std::max(0.0, ext_c[s]);
        in_m[i][s] += out.ext_m[i][s];
      }
    }
  }
  for (std::size_t p = 0; p < net.pipe_count(); ++p) {
    const Pipe& pipe = net.pipe(p);
    if (pipe.delay_steps == 0) continue;
    const Departure& d = departed(p, substep_ - static_cast<long long>(kSubsteps) * pipe.delay_steps);
    in_q[pipe.to] += d.q[stage];
    for (std::size_t s = 0; s < m_; ++s) in_m[pipe.to][s] += d.q[stage] * d.c[stage * m_ + s];
  }

  auto depart = [&](std::size_t p, double q, const std::vector<double>& c) {
    out.q[p] = q;
    out.c[p] = c;
    const Pipe& pipe = net.pipe(p);
    if (pipe.delay_steps == 0) {
      in_q[pipe.to] += q;
      for (std::size_t s = 0; s < m_; ++s) in_m[pipe.to][s] += q * c[s];
    }
  };

  std::vector<double> c(m_);
  for (std::size_t i : net.zero_delay_order()) {
    const Tank& tank = net.tank(i);
    if (tank.is_storage()) {
      const double v = std::max(vol[i], 0.0);
      double q_out = 0.0;
      for (std::size_t p : net.out_pipes(i))
        q_out += net.pipe(p).control == PipeControl::Uncontrolled ? tank.beta * v : fixed[p];
      // Nearly empty tanks are stiff: mix content with one substep of inflow.
      const double v_mix = v < h_ * (in_q[i] + q_out) ? v + h_ * in_q[i] : v;
      const double w_in = v_mix > v ? h_ : 0.0;
      if (v_mix > kTinyVolume) {
        for (std::size_t s = 0; s < m_; ++s)
          c[s] = (std::max(mass[i][s], 0.0) + w_in * in_m[i][s]) / v_mix;
      } else if (in_q[i] > 0.0) {
        for (std::size_t s = 0; s < m_; ++s) c[s] = in_m[i][s] / in_q[i];
      } else {
        c = last_c_[i];
      }
      for (std::size_t p : net.out_pipes(i))
        depart(p, net.pipe(p).control == PipeControl::Uncontrolled ? tank.beta * v : fixed[p], c);
      out.dv[i] = in_q[i] - q_out;
      for (std::size_t s = 0; s < m_; ++s) out.dm[i][s] = in_m[i][s] - q_out * c[s];
    } else if (tank.is_diversion()) {
      if (in_q[i] > 0.0) {
        for (std::size_t s = 0; s < m_; ++s) c[s] = in_m[i][s] / in_q[i];
      } else {
        c = last_c_[i];
      }
      for (std::size_t p : net.out_pipes(i)) depart(p, branch_flow(net, share, i, p, in_q[i]), c);
    } else {
      const std::size_t k = net.plant_slot(i);
      const PlantBiology& bio = sc.biology.at(k);
      const double q_in = in_q[i];
      const double q_out = std::min(q_in, tank.q_out_max);
      out.q_out[k] = q_out;
      out.cso[k] = q_in - q_out;
      if (q_in > 0.0) {
        for (std::size_t s = 0; s < m_; ++s) out.xi_in[k][s] = in_m[i][s] / q_in;
      } else {
        out.xi_in[k] = last_xi_in_[k];
      }
      std::vector<double> x(m_);
      for (std::size_t s = 0; s < m_; ++s) x[s] = std::max(xi[i][s], 0.0);
      out.xi_plant[k] = xi[i];
      const std::vector<double> rates = rate_vector(bio, x);
      for (std::size_t s = 0; s < m_; ++s) {
        double r = 0.0;
        for (std::size_t j = 0; j < rates.size(); ++j) r += bio.kappa[s][j] * rates[j];
        out.dm[i][s] =
            r + bio.outflow_factor(s) * q_out / tank.v_bar * (out.xi_in[k][s] - xi[i][s]);
      }
    }
  }
}

StateDerivative Simulator::derivative(std::span<const double> setpoints) const {
  std::vector<double> fixed, share;
  plan_actuators(setpoints, fixed, share);
  StageOut o;
  evaluate(0, time(), vol_, mass_, xi_, fixed, share, o);
  StateDerivative d;
  const NetworkModel& net = sc_->network;
  d.volume = o.dv;
  d.mass.assign(net.tank_count(), {});
  d.conc.assign(net.tank_count(), {});
  for (std::size_t i = 0; i < net.tank_count(); ++i) {
    if (net.tank(i).is_storage()) d.mass[i] = o.dm[i];
    if (net.tank(i).is_plant()) d.conc[i] = o.dm[i];
  }
  return d;
}

void Simulator::substep(std::span<const double> setpoints) {
  const Scenario& sc = *sc_;
  const NetworkModel& net = sc.network;
  const std::size_t n = net.tank_count();
  const std::size_t np = net.plants().size();

  std::vector<double> fixed, share;
  plan_actuators(setpoints, fixed, share);

  StageOut k[4];
  std::vector<double> vol = vol_;
  std::vector<std::vector<double>> mass = mass_, xi = xi_;
  const double t0 = time();
  for (int st = 0; st < 4; ++st) {
    if (st > 0) {
      const double a = kStageA[st] * h_;
      const StageOut& prev = k[st - 1];
      for (std::size_t i = 0; i < n; ++i) {
        const Tank& t = net.tank(i);
        if (t.is_storage()) {
          vol[i] = vol_[i] + a * prev.dv[i];
          for (std::size_t s = 0; s < m_; ++s) mass[i][s] = mass_[i][s] + a * prev.dm[i][s];
        } else if (t.is_plant()) {
          for (std::size_t s = 0; s < m_; ++s) xi[i][s] = xi_[i][s] + a * prev.dm[i][s];
        }
      }
    }
    evaluate(st, t0 + kStageC[st] * h_, vol, mass, xi, fixed, share, k[st]);
    for (std::size_t p = 0; p < net.pipe_count(); ++p) {
      if (net.pipe(p).delay_steps == 0) continue;
      Departure& d = departing(p, substep_);
      d.q[st] = k[st].q[p];
      std::copy(k[st].c[p].begin(), k[st].c[p].end(), d.c.begin() + st * m_);
    }
  }

  auto quad = [&](auto f) {
    double v = 0.0;
    for (int st = 0; st < 4; ++st) v += kStageB[st] * f(k[st]);
    return h_ * v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Tank& t = net.tank(i);
    if (t.is_storage()) {
      vol_[i] += quad([&](const StageOut& o) { return o.dv[i]; });
      for (std::size_t s = 0; s < m_; ++s)
        mass_[i][s] += quad([&](const StageOut& o) { return o.dm[i][s]; });
    } else if (t.is_plant()) {
      for (std::size_t s = 0; s < m_; ++s) {
        xi_[i][s] += quad([&](const StageOut& o) { return o.dm[i][s]; });
        if (xi_[i][s] < 0.0) xi_[i][s] = 0.0;
      }
    }
  }

  // pipe flows, inflow, plant logs
  for (std::size_t p = 0; p < net.pipe_count(); ++p)
    step_pipe_[p] += quad([&](const StageOut& o) { return o.q[p]; });
  for (std::size_t i = 0; i < n; ++i) {
    const double qin = quad([&](const StageOut& o) { return o.ext_q[i]; });
    step_in_[i] += qin;
    totals_.inflow_volume += qin;
    for (std::size_t s = 0; s < m_; ++s)
      totals_.inflow_mass[s] += quad([&](const StageOut& o) { return o.ext_m[i][s]; });
  }
  for (std::size_t kk = 0; kk < np; ++kk) {
    const PlantBiology& bio = sc.biology.at(kk);
    const double out = quad([&](const StageOut& o) { return o.q_out[kk]; });
    const double cso = quad([&](const StageOut& o) { return o.cso[kk]; });
    step_out_[kk] += out;
    step_cso_[kk] += cso;
    totals_.outflow_volume += out;
    totals_.cso_volume += cso;
    for (std::size_t s = 0; s < m_; ++s) {
      const double rel = quad([&](const StageOut& o) {
        return bio.outflow_factor(s) * o.q_out[kk] * o.xi_plant[kk][s];
      });
      const double lost = quad([&](const StageOut& o) { return o.cso[kk] * o.xi_in[kk][s]; });
      step_rel_[kk][s] += rel;
      totals_.released_mass[s] += rel;
      totals_.cso_mass[s] += lost;
    }
  }
  last_q_out_.assign(np, 0.0);
  for (std::size_t kk = 0; kk < np; ++kk) {
    last_q_out_[kk] = k[3].q_out[kk];
    last_xi_in_[kk] = k[3].xi_in[kk];
  }

  // flood (clip-then-log) and nonnegativity
  for (std::size_t i = 0; i < n; ++i) {
    const Tank& t = net.tank(i);
    if (!t.is_storage()) continue;
    if (vol_[i] > t.v_max) {
      const double excess = vol_[i] - t.v_max;
      for (std::size_t s = 0; s < m_; ++s) {
        const double dm = std::max(mass_[i][s], 0.0) * excess / vol_[i];
        mass_[i][s] -= dm;
        totals_.flood_mass[s] += dm;
      }
      vol_[i] = t.v_max;
      step_flood_[i] += excess;
      totals_.flood_volume += excess;
    } else if (vol_[i] < 0.0) {
      totals_.clipped_volume += -vol_[i];
      vol_[i] = 0.0;
    }
    for (std::size_t s = 0; s < m_; ++s)
      if (mass_[i][s] < 0.0) {
        totals_.clipped_mass[s] += -mass_[i][s];
        mass_[i][s] = 0.0;
      }
    if (vol_[i] > kTinyVolume)
      for (std::size_t s = 0; s < m_; ++s) last_c_[i][s] = mass_[i][s] / vol_[i];
  }
  for (std::size_t d : net.diversion_nodes())
    for (std::size_t p : net.out_pipes(d)) last_c_[d] = k[3].c[p];
  ++substep_;
}

void Simulator::advance(std::span<const double> setpoints) {
  const NetworkModel& net = sc_->network;
  if (setpoints.size() != net.pipe_count())
    throw std::invalid_argument("advance: setpoint vector size mismatch");
  std::fill(step_pipe_.begin(), step_pipe_.end(), 0.0);
  std::fill(step_flood_.begin(), step_flood_.end(), 0.0);
  std::fill(step_in_.begin(), step_in_.end(), 0.0);
  std::fill(step_cso_.begin(), step_cso_.end(), 0.0);
  std::fill(step_out_.begin(), step_out_.end(), 0.0);
  for (auto& r : step_rel_) std::fill(r.begin(), r.end(), 0.0);
  for (int j = 0; j < kSubsteps; ++j) substep(setpoints);
  const double delta = sc_->timing.delta;
  for (double& v : step_pipe_) v /= delta;
  for (double& v : step_flood_) v /= delta;
  for (double& v : step_in_) v /= delta;
  for (double& v : step_cso_) v /= delta;
  for (double& v : step_out_) v /= delta;
  for (std::size_t i = 0; i < net.tank_count(); ++i) {
    if (!std::isfinite(vol_[i]) || !finite_all(mass_[i]) || !finite_all(xi_[i]))
      throw SimulationError("non-finite state in tank '" + net.tank(i).id + "'", step());
  }
}

SystemState Simulator::state() const {
  const NetworkModel& net = sc_->network;
  SystemState st;
  st.step = step();
  st.volume.assign(net.tank_count(), 0.0);
  st.conc = last_c_;
  for (std::size_t i = 0; i < net.tank_count(); ++i) {
    if (net.tank(i).is_storage()) st.volume[i] = vol_[i];
    if (net.tank(i).is_plant()) st.conc[i] = xi_[i];
  }
  st.plant_inlet_conc = last_xi_in_;
  st.plant_outflow = last_q_out_;
  return st;
}

double Simulator::stored_volume() const {
  const NetworkModel& net = sc_->network;
  double v = 0.0;
  for (std::size_t i : net.storage_tanks()) v += vol_[i];
  for (std::size_t p = 0; p < net.pipe_count(); ++p) {
    const int d = net.pipe(p).delay_steps;
    for (long long j = substep_ - static_cast<long long>(kSubsteps) * d; j < substep_; ++j) {
      const Departure& dep = departed(p, j);
      for (int st = 0; st < 4; ++st) v += h_ * kStageB[st] * dep.q[st];
    }
  }
  return v;
}

std::vector<double> Simulator::stored_mass() const {
  const NetworkModel& net = sc_->network;
  std::vector<double> m(m_, 0.0);
  for (std::size_t i : net.storage_tanks())
    for (std::size_t s = 0; s < m_; ++s) m[s] += mass_[i][s];
  for (std::size_t i : net.plants())
    for (std::size_t s = 0; s < m_; ++s) m[s] += net.tank(i).v_bar * xi_[i][s];
  for (std::size_t p = 0; p < net.pipe_count(); ++p) {
    const int d = net.pipe(p).delay_steps;
    for (long long j = substep_ - static_cast<long long>(kSubsteps) * d; j < substep_; ++j) {
      const Departure& dep = departed(p, j);
      for (int st = 0; st < 4; ++st)
        for (std::size_t s = 0; s < m_; ++s)
          m[s] += h_ * kStageB[st] * dep.q[st] * dep.c[st * m_ + s];
    }
  }
  return m;
}

void Simulator::set_volume(std::size_t tank, double v) {
  if (!sc_->network.tank(tank).is_storage()) return;
  v = std::max(v, 0.0);
  for (std::size_t s = 0; s < m_; ++s) mass_[tank][s] = v * last_c_[tank][s];
  vol_[tank] = v;
}

void Simulator::set_plant_conc(std::size_t plant_slot, std::span<const double> xi) {
  const std::size_t i = sc_->network.plants().at(plant_slot);
  for (std::size_t s = 0; s < m_; ++s) xi_[i][s] = std::max(xi[s], 0.0);
}

const std::vector<double>& Trajectory::setpoint_at(int k) const {
  if (k < 0) return initial_setpoints;
  const std::size_t period = static_cast<std::size_t>(k / steps_per_period);
  if (period >= period_setpoints.size())
    throw std::out_of_range("setpoint_at: no setpoint recorded for step " + std::to_string(k));
  return period_setpoints[period];
}

void Trajectory::record(const Simulator& sim) {
  grid.push_back(sim.state());
  if (grid.size() > 1) {
    pipe_flow.push_back(sim.step_pipe_flow());
    flood.push_back(sim.step_flood());
    cso.push_back(sim.step_cso());
    outflow.push_back(sim.step_outflow());
    inflow.push_back(sim.step_inflow());
    released.push_back(sim.step_released());
  } else {
    initial_stored_volume = sim.stored_volume();
    initial_stored_mass = sim.stored_mass();
  }
  totals = sim.totals();
  final_stored_volume = sim.stored_volume();
  final_stored_mass = sim.stored_mass();
}

std::vector<std::vector<double>> expand_open_loop(const Scenario& scenario) {
  const auto& act = scenario.network.actuator_pipes();
  std::vector<std::vector<double>> rows;
  for (const auto& period : scenario.open_loop.periods) {
    std::vector<double> row = scenario.initial.pipe_setpoint;
    for (std::size_t a = 0; a < act.size() && a < period.size(); ++a) row[act[a]] = period[a];
    rows.push_back(std::move(row));
  }
  if (rows.empty()) rows.push_back(scenario.initial.pipe_setpoint);
  return rows;
}

Trajectory run(const Scenario& scenario, const std::vector<std::vector<double>>& periods,
               int steps) {
  if (periods.empty()) throw std::invalid_argument("run: no control periods");
  Simulator sim(scenario);
  Trajectory traj;
  traj.delta = scenario.timing.delta;
  traj.steps_per_period = scenario.timing.steps_per_period();
  traj.initial_setpoints = scenario.initial.pipe_setpoint;
  traj.record(sim);
  for (int k = 0; k < steps; ++k) {
    const std::size_t c = static_cast<std::size_t>(k / traj.steps_per_period);
    if (c >= traj.period_setpoints.size())
      traj.period_setpoints.push_back(periods[std::min(c, periods.size() - 1)]);
    sim.advance(traj.period_setpoints[c]);
    traj.record(sim);
  }
  return traj;
}

Observation observe(const Scenario& scenario, const Trajectory& traj, int n, double noise,
                    std::uint64_t seed) {
  if (n < 0 || n > traj.steps())
    throw std::out_of_range("observe: step " + std::to_string(n) + " not recorded");
  const NetworkModel& net = scenario.network;
  const int tau = scenario.tau_ic();
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(n));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto perturb = [&](double v) { return noise > 0.0 ? v * (1.0 + noise * gauss(rng)) : v; };

  Observation obs;
  obs.step = n;
  for (int j = 0; j < tau; ++j) {
    const int k = n - tau + 1 + j;
    const SystemState& g = traj.grid[static_cast<std::size_t>(std::max(k, 0))];
    std::vector<double> v(net.tank_count(), 0.0);
    for (std::size_t i : net.storage_tanks())
      v[i] = std::clamp(perturb(g.volume[i]), 0.0, net.tank(i).v_max);
    obs.volume.push_back(std::move(v));
    std::vector<std::vector<double>> xi;
    for (std::size_t i : net.plants()) {
      std::vector<double> x = g.conc[i];
      for (double& e : x) e = std::max(perturb(e), 0.0);
      xi.push_back(std::move(x));
    }
    obs.plant_conc.push_back(std::move(xi));
    obs.setpoint.push_back(traj.setpoint_at(k));
    if (k >= 1) {
      obs.pipe_flow.push_back(traj.pipe_flow[static_cast<std::size_t>(k - 1)]);
    } else {
      std::vector<double> q = traj.initial_setpoints;
      for (std::size_t p = 0; p < net.pipe_count(); ++p)
        if (!net.pipe(p).is_actuator())
          q[p] = net.tank(net.pipe(p).from).beta * traj.grid.front().volume[net.pipe(p).from];
      obs.pipe_flow.push_back(std::move(q));
    }
    obs.plant_outflow.push_back(k < 0 ? scenario.initial.plant_outflow : g.plant_outflow);
  }
  return obs;
}

PlantEstimate estimate_plant_concentrations(const Scenario& scenario, const Simulator& truth,
                                            const Trajectory& traj, const Observation& obs,
                                            const std::vector<std::vector<double>>& nominal,
                                            int history, int horizon) {
  const NetworkModel& net = scenario.network;
  const int n = truth.step();
  PlantEstimate est;
  est.first_step = n - history + 1;
  const int tau = static_cast<int>(obs.volume.size());
  for (int r = 0; r < history; ++r) {
    const int k = est.first_step + r;
    const SystemState& g = traj.grid[static_cast<std::size_t>(std::clamp(k, 0, traj.steps()))];
    est.inlet.push_back(g.plant_inlet_conc);
    est.outflow.push_back(g.plant_outflow);
    const int j = k - (obs.step - tau + 1);
    if (j >= 0 && j < tau)
      est.conc.push_back(obs.plant_conc[static_cast<std::size_t>(j)]);
    else
      est.conc.push_back(obs.plant_conc.front());
  }

  Simulator sim = truth;
  if (!obs.volume.empty()) {
    for (std::size_t i : net.storage_tanks()) sim.set_volume(i, obs.volume.back()[i]);
    for (std::size_t k = 0; k < net.plants().size(); ++k)
      sim.set_plant_conc(k, obs.plant_conc.back()[k]);
  }
  for (int r = 0; r < horizon; ++r) {
    const std::vector<double>& sp =
        nominal.empty() ? scenario.initial.pipe_setpoint
                        : nominal[std::min(static_cast<std::size_t>(r), nominal.size() - 1)];
    sim.advance(sp);
    const SystemState st = sim.state();
    est.inlet.push_back(st.plant_inlet_conc);
    est.outflow.push_back(st.plant_outflow);
    std::vector<std::vector<double>> xi;
    for (std::size_t i : net.plants()) xi.push_back(st.conc[i]);
    est.conc.push_back(std::move(xi));
  }
  return est;
}

void write_states_csv(std::ostream& out, const Scenario& scenario, const Trajectory& traj) {
  const NetworkModel& net = scenario.network;
  out << std::setprecision(10);
  out << "t_min,tank_id,V";
  for (const std::string& s : scenario.species) out << ",c_" << s;
  out << ",QF,QCSO\n";
  for (int k = 0; k <= traj.steps(); ++k) {
    const SystemState& g = traj.grid[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < net.tank_count(); ++i) {
      const Tank& t = net.tank(i);
      out << k * traj.delta << ',' << t.id << ',' << (t.is_plant() ? t.v_bar : g.volume[i]);
      for (double c : g.conc[i]) out << ',' << c;
      const double qf = k > 0 ? traj.flood[static_cast<std::size_t>(k - 1)][i] : 0.0;
      const double qc = k > 0 && t.is_plant()
                            ? traj.cso[static_cast<std::size_t>(k - 1)][net.plant_slot(i)]
                            : 0.0;
      out << ',' << qf << ',' << qc << '\n';
    }
  }
}

void write_flows_csv(std::ostream& out, const Scenario& scenario, const Trajectory& traj) {
  const NetworkModel& net = scenario.network;
  out << std::setprecision(10);
  out << "t_min";
  for (const Pipe& p : net.pipes()) out << ',' << p.label;
  for (std::size_t i : net.plants()) out << ",out_" << net.tank(i).id;
  out << '\n';
  for (int k = 1; k <= traj.steps(); ++k) {
    const std::size_t r = static_cast<std::size_t>(k - 1);
    out << k * traj.delta;
    for (double q : traj.pipe_flow[r]) out << ',' << q;
    for (double q : traj.outflow[r]) out << ',' << q;
    out << '\n';
  }
}

}  // namespace sewerflow
