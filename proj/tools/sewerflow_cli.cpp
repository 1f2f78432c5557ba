// sewerflow command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sewerflow/metrics.hpp"
#include "sewerflow/mpc.hpp"
#include "sewerflow/scenario_io.hpp"
#include "sewerflow/simulate.hpp"

namespace fs = std::filesystem;
using namespace sewerflow;

namespace {

constexpr int kUsage = 2;
constexpr int kInvalid = 3;
constexpr int kRuntime = 4;

struct Overrides {
  int horizon = -1;
  int am_order = -1;
  long long seed = -1;
  int periods = -1;
  std::vector<std::string> weights;  // name=value
};

void set_weight(Weights& w, std::size_t species, std::size_t reactions, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("--weight", "expected name=value");
  const std::string name = kv.substr(0, eq);
  double v = 0.0;
  try {
    v = std::stod(kv.substr(eq + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--weight", "bad number in '" + kv + "'");
  }
  std::map<std::string, double*> scalars{
      {"slope", &w.slope},           {"curvature", &w.curvature},
      {"final_volume", &w.final_volume}, {"total_volume", &w.total_volume},
      {"plant_balance", &w.plant_balance}, {"time_balance", &w.time_balance},
      {"flooding", &w.flooding},     {"cso", &w.cso}};
  if (auto it = scalars.find(name); it != scalars.end()) {
    *it->second = v;
  } else if (name == "pollutant_release") {
    w.pollutant_release.assign(species, v);
  } else if (name == "regulation_violation") {
    w.regulation_violation.assign(species, v);
  } else if (name == "microbial_growth") {
    w.microbial_growth.assign(reactions, v);
  } else {
    throw CLI::ValidationError("--weight", "unknown weight '" + name + "'");
  }
}

/// Loads the scenario, applies overrides and re-validates. Returns an exit
/// code, 0 on success.
int load(const std::string& path, const Overrides& ov, Scenario& sc) {
  try {
    sc = load_scenario(path);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const std::string& d : e.details()) std::cerr << "  " << d << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  if (ov.horizon >= 0) sc.timing.horizon_steps = ov.horizon;
  if (ov.am_order >= 0) sc.timing.am_order = ov.am_order;
  if (ov.seed >= 0) sc.seed = static_cast<std::uint64_t>(ov.seed);
  if (ov.periods >= 0) sc.timing.sim_periods = ov.periods;
  const std::size_t r = sc.biology.empty() ? 0 : sc.biology.front().reaction_count();
  for (const std::string& kv : ov.weights) set_weight(sc.weights, sc.species_count(), r, kv);
  std::vector<std::string> bad = sc.violations();
  for (std::string& s : sc.coverage_violations()) bad.push_back(std::move(s));
  if (!bad.empty()) {
    std::cerr << "error: scenario invalid after overrides\n";
    for (const std::string& s : bad) std::cerr << "  " << s << '\n';
    return kInvalid;
  }
  return 0;
}

void print_summary(const char* label, const ClosedLoopResult& r) {
  std::printf("%-3s release %.6g kg  treated %.6g m3  flood %.6g m3  cso %.6g m3  "
              "mean solve %.3f s\n",
              label, r.metrics.pollutant_release, r.metrics.treated_volume,
              r.metrics.flooding_volume, r.metrics.cso_volume, r.mean_solve_time());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pollution-aware model-predictive control of wastewater networks"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", kind = "fc", dump;
  Overrides ov;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("scenario,--scenario", scenario_path, "Scenario document")->required();
    if (with_out) sub->add_option("-o,--out", out_dir, "Output directory");
    sub->add_option("--horizon", ov.horizon, "Horizon in trajectory steps")
        ->check(CLI::PositiveNumber);
    sub->add_option("--am-order", ov.am_order, "Adams-Moulton order")->check(CLI::Range(1, 4));
    sub->add_option("--seed", ov.seed, "Observation-noise seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--periods", ov.periods, "Simulated control periods")
        ->check(CLI::PositiveNumber);
    sub->add_option("--weight", ov.weights, "Weight override name=value (repeatable)");
  };

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario");
  add_common(validate, false);
  CLI::App* simulate = app.add_subcommand("simulate", "Open-loop run with scenario setpoints");
  add_common(simulate, true);
  CLI::App* control = app.add_subcommand("control", "One closed-loop run");
  add_common(control, true);
  control->add_option("--kind", kind, "Controller")
      ->check(CLI::IsMember({"fc", "f"}, CLI::ignore_case));
  control->add_option("--dump-program", dump, "Write the first trajectory program (CBF)");
  control->add_flag("-v,--verbose", verbose, "Print one line per solve");
  CLI::App* cmp = app.add_subcommand("compare", "Run FC and F side by side");
  add_common(cmp, true);
  cmp->add_option("--dump-program", dump, "Write the first FC trajectory program (CBF)");
  cmp->add_flag("-v,--verbose", verbose, "Print one line per FC solve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  Scenario sc;
  int rc = 0;
  try {
    rc = load(scenario_path, ov, sc);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (rc != 0) return rc;

  if (validate->parsed()) {
    std::printf("%s: ok (%zu tanks, %zu pipes, %zu plants, tau_ic %d)\n", sc.name.c_str(),
                sc.network.tank_count(), sc.network.pipe_count(), sc.network.plants().size(),
                sc.tau_ic());
    return 0;
  }

  try {
    const fs::path out(out_dir);
    fs::create_directories(out);
    if (simulate->parsed()) {
      const Trajectory tr = run(sc, expand_open_loop(sc), sc.timing.total_steps());
      {
        std::ofstream f(out / "states.csv");
        write_states_csv(f, sc, tr);
      }
      {
        std::ofstream f(out / "flows.csv");
        write_flows_csv(f, sc, tr);
      }
      std::ofstream(out / "metrics.json") << metrics_json(compute_metrics(tr, sc), sc) << '\n';
      return 0;
    }

    ClosedLoopOptions opts;
    if (!dump.empty()) opts.dump_program = dump;
    if (verbose)
      opts.progress = [](const SolveRecord& s) {
        std::printf("period %4d  %-12s %7.3f s  %3d it%s\n", s.period, to_string(s.status),
                    s.solve_time, s.iterations, s.fallback ? "  fallback" : "");
        std::fflush(stdout);
      };

    if (control->parsed()) {
      const ControllerKind k = (kind == "f" || kind == "F") ? ControllerKind::F : ControllerKind::FC;
      const ClosedLoopResult res = run_closed_loop(sc, k, opts);
      write_result(out, sc, res);
      print_summary(to_string(k), res);
      if (res.aborted) {
        std::cerr << "error: " << res.error << " (see " << (out / "diagnostics.csv") << ")\n";
        return kRuntime;
      }
      return 0;
    }

    const Comparison c = compare(sc, opts);
    write_comparison(out, sc, c);
    print_summary("FC", c.fc);
    print_summary("F", c.f);
    std::printf("release reduction %.2f%%  treated volume difference %.2f%%\n",
                100.0 * c.release_reduction, 100.0 * c.treated_volume_diff);
    if (c.fc.aborted || c.f.aborted) {
      std::cerr << "error: " << (c.fc.aborted ? c.fc.error : c.f.error) << '\n';
      return kRuntime;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::ofstream(fs::path(out_dir) / "error.txt") << e.what() << '\n';
    return kRuntime;
  }
}
