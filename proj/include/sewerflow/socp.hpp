#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "sewerflow/conic.hpp"
#include "sewerflow/model.hpp"
#include "sewerflow/simulate.hpp"

namespace sewerflow {

enum class ControllerKind { FC, F };
const char* to_string(ControllerKind kind);

/// Variable indices of one trajectory program. Rows are indexed by
/// l + tau_ic for l in [-tau_ic, horizon]; kNone marks absent variables.
struct VariableLayout {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  ControllerKind kind = ControllerKind::F;
  int tau_ic = 0;
  int horizon = 0;     // H; l = 0..H is the optimized window
  int first_step = 0;  // grid step of l = 0

  std::vector<std::vector<std::size_t>> q;       // [row][pipe]
  std::vector<std::vector<std::size_t>> q_out;   // [row][plant]
  std::vector<std::vector<std::size_t>> cso;     // [row][plant], l >= 0
  std::vector<std::vector<std::size_t>> volume;  // [row][tank], storage tanks
  std::vector<std::vector<std::size_t>> flood;   // [row][tank], virtual tanks, l >= 0
  std::vector<std::vector<std::vector<std::size_t>>> xi;     // [row][plant][species]
  std::vector<std::vector<std::vector<std::size_t>>> rate;   // [row][plant][reaction], l >= 0
  std::vector<std::vector<std::vector<std::size_t>>> hinge;  // [row][plant][species], l >= 0
  std::vector<std::size_t> outflow_sum;  // per plant, time-balance auxiliary
  /// Per pipe: undelivered part of the command in force until first_free.
  /// Only held pipes leaving a storage tank; an empty tank cannot supply it.
  std::vector<std::size_t> shortfall;
  /// [row][pipe], volume-limited pumps, l >= 0: command minus delivered flow.
  std::vector<std::vector<std::size_t>> cap_gap;
  /// [row][tank], storage tanks, l >= 0: volume above the back-off level.
  /// Empty when the scenario sets no volume margin.
  std::vector<std::vector<std::size_t>> excess;

  std::size_t row(int l) const { return static_cast<std::size_t>(l + tau_ic); }
  int rows() const { return tau_ic + horizon + 1; }
  /// First l whose setpoint is free (the next control period).
  int first_free = 0;
};

/// Allocate decision variables for the window starting after obs.step.
VariableLayout allocate_layout(ConicProgram& program, const Scenario& scenario,
                               const Observation& obs, ControllerKind kind);

/// Initial conditions, pipe and actuator constraints, diversion and plant
/// flow balances, and the discretized volume dynamics.
void build_omega(ConicProgram& program, const VariableLayout& layout, const Scenario& scenario,
                 const Observation& obs);

/// Pipes whose flow is held within each control period. The last branch
/// of every diversion node stays free to absorb inflow changes.
/// Volume-limited pumps hold their command instead; the flow is the command
/// less cap_gap, since the simulator caps it at beta V every step.
std::vector<bool> held_pipes(const NetworkModel& network);

struct TrajProgram {
  ConicProgram program;
  VariableLayout layout;
  std::vector<std::vector<double>> t_ic;  // [row l<0][plant] flattened reactions
};

/// Pollution-aware program. est rows must cover steps layout.first_step -
/// tau_ic .. first_step + H (see estimate_plant_concentrations).
TrajProgram build_traj_fc(const Scenario& scenario, const Observation& obs,
                          const PlantEstimate& est);

/// Volume-based program: no concentration or reaction variables.
TrajProgram build_traj_f(const Scenario& scenario, const Observation& obs);

struct ExtractedControls {
  std::vector<double> setpoints;                // per pipe, next control period
  std::vector<double> plant_outflow;            // per plant, same step
  std::vector<std::vector<double>> nominal;     // [l = 0..H][pipe]
};

/// Q*(first_free) for every actuator pipe plus the full pipe trajectory.
/// Throws std::runtime_error if the solution is not usable.
ExtractedControls extract_controls(const Solution& solution, const VariableLayout& layout,
                                   const Scenario& scenario);

/// Per (plant, l >= 0, growth reaction) exactness gaps of a solved FC program.
struct ExactnessAudit {
  std::vector<double> gaps;
  std::size_t count = 0;
  std::size_t below_1e4 = 0;
  double worst_excess = 0.0;  // max over triples of T* - phi(xi*)
};
ExactnessAudit audit_exactness(const Solution& solution, const VariableLayout& layout,
                               const Scenario& scenario);

}  // namespace sewerflow
