#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sewerflow/conic.hpp"
#include "sewerflow/metrics.hpp"
#include "sewerflow/socp.hpp"

namespace sewerflow {

/// One trajectory solve (or its fallback) and the period it controls.
struct SolveRecord {
  int period = 0;  // control period whose setpoints this solve produced
  SolveStatus status = SolveStatus::Optimal;
  bool fallback = false;
  double solve_time = 0.0;  // s
  int iterations = 0;
  double objective = 0.0;
  std::size_t variables = 0;
  std::size_t constraints = 0;
  std::size_t exact_count = 0;
  std::size_t exact_below_1e4 = 0;
  double worst_excess = 0.0;
  double linearized_release = 0.0;  // kg over the controlled period, FC only
};

struct ClosedLoopResult {
  ControllerKind kind = ControllerKind::F;
  Trajectory trajectory;
  std::vector<SolveRecord> solves;
  MetricsReport metrics;
  bool aborted = false;
  std::string error;

  double mean_solve_time() const;
  double max_solve_time() const;
  /// Triples over all solves.
  std::size_t exact_count() const;
  std::size_t exact_below_1e4() const;
  double worst_excess() const;
  double linearized_release() const;
};

/// A solved trajectory and the step of its first window row.
struct NominalPlan {
  int first_step = 0;
  std::vector<std::vector<double>> flows;  // [l][pipe]

  bool empty() const { return flows.empty(); }
  /// Per-pipe setpoints planned for grid step s; out-of-range steps clamp.
  const std::vector<double>& at(int step) const;
};

/// Setpoints for `period` after solver failures: the last plan shifted
/// forward, the last applied setpoints once the plan is exhausted, or
/// all-zero without a plan.
std::vector<double> fallback_controls(const NominalPlan& previous, int period,
                                      const Scenario& scenario,
                                      const std::vector<double>& last_applied);

struct ClosedLoopOptions {
  int periods = -1;  // override of timing.sim_periods when >= 0
  int max_consecutive_failures = 3;
  std::filesystem::path dump_program;  // CBF of the first solve when non-empty
  std::function<void(const SolveRecord&)> progress;
};

ClosedLoopResult run_closed_loop(const Scenario& scenario, ControllerKind kind,
                                 const ClosedLoopOptions& options = {});

/// Writes metrics.json, states.csv, controls.csv, diagnostics.csv and flows.csv.
void write_result(const std::filesystem::path& dir, const Scenario& scenario,
                  const ClosedLoopResult& result);

struct Comparison {
  ClosedLoopResult fc, f;
  double release_reduction = 0.0;  // (F - FC) / F
  double treated_volume_diff = 0.0;  // (FC - F) / F
};

/// Both controllers on the same scenario, run concurrently.
Comparison compare(const Scenario& scenario, const ClosedLoopOptions& options = {});

/// Writes fc/ and f/ result directories plus comparison.json.
void write_comparison(const std::filesystem::path& dir, const Scenario& scenario,
                      const Comparison& cmp);

}  // namespace sewerflow
