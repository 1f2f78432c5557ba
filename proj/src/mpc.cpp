#include "sewerflow/mpc.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace sewerflow {

namespace {

ClarabelOptions solver_options(const Scenario& sc) {
  ClarabelOptions o;
  o.tol = sc.solver.tol;
  o.max_iter = sc.solver.max_iter;
  o.time_limit = sc.solver.time_limit;
  return ClarabelOptions::from_env(o);
}

/// Linearized release of the rows controlled by this solve.
double linearized_release(const Solution& sol, const VariableLayout& L, const Scenario& sc,
                          const PlantEstimate& est) {
  const int R = sc.timing.steps_per_period();
  double total = 0.0;
  for (int l = L.first_free; l < std::min(L.first_free + R, L.horizon + 1); ++l) {
    const std::size_t r = L.row(l);
    for (std::size_t k = 0; k < sc.network.plants().size(); ++k) {
      const PlantBiology& bio = sc.biology[k];
      for (std::size_t s = 0; s < bio.species_count(); ++s)
        total += sc.timing.delta * sc.weights.pollutant_release.at(s) * bio.outflow_factor(s) *
                 est.conc[r][k][s] * sol.x.at(L.q_out[r][k]);
    }
  }
  return total;
}

}  // namespace

double ClosedLoopResult::mean_solve_time() const {
  double t = 0.0;
  std::size_t n = 0;
  for (const SolveRecord& s : solves)
    if (!s.fallback || s.solve_time > 0.0) {
      t += s.solve_time;
      ++n;
    }
  return n ? t / static_cast<double>(n) : 0.0;
}

double ClosedLoopResult::max_solve_time() const {
  double t = 0.0;
  for (const SolveRecord& s : solves) t = std::max(t, s.solve_time);
  return t;
}

std::size_t ClosedLoopResult::exact_count() const {
  std::size_t n = 0;
  for (const SolveRecord& s : solves) n += s.exact_count;
  return n;
}

std::size_t ClosedLoopResult::exact_below_1e4() const {
  std::size_t n = 0;
  for (const SolveRecord& s : solves) n += s.exact_below_1e4;
  return n;
}

double ClosedLoopResult::worst_excess() const {
  double w = 0.0;
  for (const SolveRecord& s : solves) w = std::max(w, s.worst_excess);
  return w;
}

double ClosedLoopResult::linearized_release() const {
  double t = 0.0;
  for (const SolveRecord& s : solves) t += s.linearized_release;
  return t;
}

const std::vector<double>& NominalPlan::at(int step) const {
  if (flows.empty()) throw std::logic_error("NominalPlan::at: empty plan");
  const int idx = std::clamp(step - first_step, 0, static_cast<int>(flows.size()) - 1);
  return flows[static_cast<std::size_t>(idx)];
}

std::vector<double> fallback_controls(const NominalPlan& previous, int period, const Scenario& sc,
                                      const std::vector<double>& last_applied) {
  const std::size_t np = sc.network.pipe_count();
  if (previous.empty()) return std::vector<double>(np, 0.0);
  const int step = period * sc.timing.steps_per_period();
  const int idx = step - previous.first_step;
  if (idx < 0 || idx >= static_cast<int>(previous.flows.size())) return last_applied;
  return previous.flows[static_cast<std::size_t>(idx)];
}

ClosedLoopResult run_closed_loop(const Scenario& sc, ControllerKind kind,
                                 const ClosedLoopOptions& options) {
  const int R = sc.timing.steps_per_period();
  const int periods = options.periods >= 0 ? std::min(options.periods, sc.timing.sim_periods)
                                           : sc.timing.sim_periods;
  const int tau = sc.tau_ic();
  const int H = sc.timing.horizon_steps;
  const std::size_t np = sc.network.pipe_count();
  const ClarabelAdapter solver(solver_options(sc));

  ClosedLoopResult res;
  res.kind = kind;
  Trajectory& traj = res.trajectory;
  traj.delta = sc.timing.delta;
  traj.steps_per_period = R;
  traj.initial_setpoints = sc.initial.pipe_setpoint;

  Simulator sim(sc);
  traj.record(sim);
  std::vector<double> control = sc.initial.pipe_setpoint;
  NominalPlan plan;
  int failures = 0;

  try {
    for (int c = 0; c < periods; ++c) {
      traj.period_setpoints.push_back(control);
      std::vector<double> next = control;
      if (c + 1 < periods) {
        const int n = c * R;
        const Observation obs = observe(sc, traj, n, sc.observation_noise, sc.seed);
        SolveRecord rec;
        rec.period = c + 1;
        TrajProgram tp;
        PlantEstimate est;
        if (kind == ControllerKind::FC) {
          std::vector<std::vector<double>> nominal;
          for (int r = 0; r <= H; ++r) {
            if (r < R)
              nominal.push_back(control);
            else
              nominal.push_back(plan.empty() ? std::vector<double>(np, 0.0) : plan.at(n + r));
          }
          est = estimate_plant_concentrations(sc, sim, traj, obs, nominal, tau, H + 1);
          tp = build_traj_fc(sc, obs, est);
        } else {
          tp = build_traj_f(sc, obs);
        }
        if (c == 0 && !options.dump_program.empty()) {
          std::ofstream out(options.dump_program);
          tp.program.write_cbf(out);
        }
        rec.variables = tp.program.variable_count();
        rec.constraints = tp.program.constraint_count();
        const Solution sol = solver.solve(tp.program);
        rec.status = sol.status;
        rec.solve_time = sol.solve_time;
        rec.iterations = sol.iterations;
        rec.objective = sol.objective;
        if (usable(sol.status)) {
          failures = 0;
          const ExtractedControls ex = extract_controls(sol, tp.layout, sc);
          next = ex.setpoints;
          plan.first_step = tp.layout.first_step;
          plan.flows = ex.nominal;
          if (kind == ControllerKind::FC) {
            const ExactnessAudit a = audit_exactness(sol, tp.layout, sc);
            rec.exact_count = a.count;
            rec.exact_below_1e4 = a.below_1e4;
            rec.worst_excess = a.worst_excess;
            rec.linearized_release = linearized_release(sol, tp.layout, sc, est);
          }
        } else {
          ++failures;
          rec.fallback = true;
          next = fallback_controls(plan, c + 1, sc, control);
        }
        res.solves.push_back(rec);
        if (options.progress) options.progress(rec);
        if (failures >= options.max_consecutive_failures) {
          res.aborted = true;
          res.error = "solver failed " + std::to_string(failures) +
                      " consecutive times (last status " + to_string(rec.status) + ")";
        }
      }
      for (int k = 0; k < R; ++k) {
        sim.advance(control);
        traj.record(sim);
      }
      control = next;
      if (res.aborted) break;
    }
  } catch (const SimulationError& e) {
    res.aborted = true;
    res.error = e.what();
  }
  res.metrics = compute_metrics(traj, sc);
  return res;
}

void write_result(const std::filesystem::path& dir, const Scenario& sc,
                  const ClosedLoopResult& res) {
  std::filesystem::create_directories(dir);
  const NetworkModel& net = sc.network;
  {
    auto j = nlohmann::ordered_json::parse(metrics_json(res.metrics, sc));
    auto put = [&](const char* name, double v, const char* units) {
      j[name] = {{"value", v}, {"units", units}};
    };
    put("mean_solve_time", res.mean_solve_time(), "s");
    put("max_solve_time", res.max_solve_time(), "s");
    if (res.kind == ControllerKind::FC) {
      const std::size_t n = res.exact_count();
      put("exact_fraction", n ? static_cast<double>(res.exact_below_1e4()) / n : 1.0, "1");
      put("worst_rate_excess", res.worst_excess(), "kg/m3/min");
      put("linearized_release", res.linearized_release(), "kg");
    }
    std::ofstream out(dir / "metrics.json");
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "states.csv");
    write_states_csv(out, sc, res.trajectory);
  }
  {
    std::ofstream out(dir / "flows.csv");
    write_flows_csv(out, sc, res.trajectory);
  }
  {
    std::ofstream out(dir / "controls.csv");
    out << std::setprecision(10) << "period,t_min";
    for (std::size_t p : net.actuator_pipes()) out << ',' << net.pipe(p).label;
    out << '\n';
    const auto& rows = res.trajectory.period_setpoints;
    for (std::size_t c = 0; c < rows.size(); ++c) {
      out << c << ',' << static_cast<double>(c) * sc.timing.capital_delta;
      for (std::size_t p : net.actuator_pipes()) out << ',' << rows[c][p];
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "diagnostics.csv");
    out << std::setprecision(10)
        << "period,status,fallback,solve_time_s,iterations,objective,variables,constraints,"
           "exact_triples,exact_below_1e4,worst_rate_excess\n";
    for (const SolveRecord& s : res.solves)
      out << s.period << ',' << to_string(s.status) << ',' << (s.fallback ? 1 : 0) << ','
          << s.solve_time << ',' << s.iterations << ',' << s.objective << ',' << s.variables << ','
          << s.constraints << ',' << s.exact_count << ',' << s.exact_below_1e4 << ','
          << s.worst_excess << '\n';
  }
  if (res.aborted) {
    std::ofstream out(dir / "error.txt");
    out << res.error << '\n';
  }
}

Comparison compare(const Scenario& sc, const ClosedLoopOptions& options) {
  Comparison cmp;
  ClosedLoopOptions f_opts = options;
  f_opts.dump_program.clear();
  std::thread t([&] { cmp.f = run_closed_loop(sc, ControllerKind::F, f_opts); });
  cmp.fc = run_closed_loop(sc, ControllerKind::FC, options);
  t.join();
  const double rf = cmp.f.metrics.pollutant_release;
  const double vf = cmp.f.metrics.treated_volume;
  cmp.release_reduction = rf > 0.0 ? (rf - cmp.fc.metrics.pollutant_release) / rf : 0.0;
  cmp.treated_volume_diff = vf > 0.0 ? (cmp.fc.metrics.treated_volume - vf) / vf : 0.0;
  return cmp;
}

void write_comparison(const std::filesystem::path& dir, const Scenario& sc, const Comparison& cmp) {
  write_result(dir / "fc", sc, cmp.fc);
  write_result(dir / "f", sc, cmp.f);
  nlohmann::ordered_json j;
  auto side = [](const ClosedLoopResult& r) {
    return nlohmann::ordered_json{{"mean_solve_time_s", r.mean_solve_time()},
                                  {"treated_volume_m3", r.metrics.treated_volume},
                                  {"pollutant_release_kg", r.metrics.pollutant_release},
                                  {"flooding_volume_m3", r.metrics.flooding_volume},
                                  {"cso_volume_m3", r.metrics.cso_volume},
                                  {"aborted", r.aborted}};
  };
  j["FC"] = side(cmp.fc);
  j["F"] = side(cmp.f);
  j["release_reduction"] = cmp.release_reduction;
  j["treated_volume_difference"] = cmp.treated_volume_diff;
  std::ofstream out(dir / "comparison.json");
  out << j.dump(2) << '\n';
}

}  // namespace sewerflow
