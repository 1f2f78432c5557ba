#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "sewerflow/model.hpp"

namespace sewerflow {

class SimulationError : public std::runtime_error {
public:
  SimulationError(const std::string& what, int step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

private:
  int step_;
};

/// Integration substeps per trajectory step.
inline constexpr int kSubsteps = 10;

/// Instantaneous truth. Volumes are meaningful for storage tanks only;
/// conc holds the mixed concentration of every tank (plants: reactor state).
struct SystemState {
  int step = 0;
  std::vector<double> volume;             // per tank
  std::vector<std::vector<double>> conc;  // per tank
  std::vector<std::vector<double>> plant_inlet_conc;  // per plant slot
  std::vector<double> plant_outflow;      // per plant slot, m3/min
};

/// Derivative of the state at the start of the next substep.
struct StateDerivative {
  std::vector<double> volume;             // per tank (storage only)
  std::vector<std::vector<double>> mass;  // storage: d(V c)/dt
  std::vector<std::vector<double>> conc;  // plants: dxi/dt
};

/// Cumulative flows since the start of the run.
struct RunTotals {
  double inflow_volume = 0.0;
  double outflow_volume = 0.0;  // plant effluent
  double flood_volume = 0.0;
  double cso_volume = 0.0;
  double clipped_volume = 0.0;  // negative-volume round-off removed
  std::vector<double> inflow_mass, released_mass, cso_mass, flood_mass;
  std::vector<double> clipped_mass;  // negative-mass round-off removed
};

/// Nonlinear plant model integrated with classical RK4 at delta / kSubsteps.
/// Pipe transport is an exact shift of departure flows and concentrations.
class Simulator {
public:
  explicit Simulator(const Scenario& scenario);

  /// Advance one trajectory step with the given per-pipe setpoints (entries
  /// of non-actuator pipes are ignored).
  void advance(std::span<const double> setpoints);

  int step() const { return substep_ / kSubsteps; }
  double time() const { return substep_ * h_; }
  SystemState state() const;
  StateDerivative derivative(std::span<const double> setpoints) const;

  /// Water in storage tanks plus water in transit in delayed pipes.
  double stored_volume() const;
  /// Mass in storage tanks, plants and delayed pipes, per species.
  std::vector<double> stored_mass() const;

  const RunTotals& totals() const { return totals_; }

  /// Means over the last step.
  const std::vector<double>& step_pipe_flow() const { return step_pipe_; }
  const std::vector<double>& step_flood() const { return step_flood_; }      // per tank
  const std::vector<double>& step_cso() const { return step_cso_; }          // per plant
  const std::vector<double>& step_outflow() const { return step_out_; }      // per plant
  const std::vector<double>& step_inflow() const { return step_in_; }        // per tank
  /// Mass released by each plant over the last step, kg (biomass factor applied).
  const std::vector<std::vector<double>>& step_released() const { return step_rel_; }

  /// Overwrite observed quantities (estimator use).
  void set_volume(std::size_t tank, double v);
  void set_plant_conc(std::size_t plant_slot, std::span<const double> xi);

private:
  struct Departure {
    double q[4];
    std::vector<double> c;  // 4 x m, stage-major
  };
  struct StageOut;

  void substep(std::span<const double> setpoints);
  void plan_actuators(std::span<const double> setpoints, std::vector<double>& fixed,
                      std::vector<double>& share) const;
  void evaluate(int stage, double t, const std::vector<double>& vol,
                const std::vector<std::vector<double>>& mass,
                const std::vector<std::vector<double>>& xi, const std::vector<double>& fixed,
                const std::vector<double>& share, StageOut& out) const;
  const Departure& departed(std::size_t pipe, long long substep) const;
  Departure& departing(std::size_t pipe, long long substep);

  const Scenario* sc_;
  std::size_t m_ = 0;
  double h_ = 0.0;
  long long substep_ = 0;
  std::size_t ring_ = 1;

  std::vector<double> vol_;
  std::vector<std::vector<double>> mass_, xi_, last_c_, last_xi_in_;
  std::vector<double> last_q_out_;
  std::vector<std::vector<Departure>> ring_buf_;  // per pipe

  RunTotals totals_;
  std::vector<double> step_pipe_, step_flood_, step_cso_, step_out_, step_in_;
  std::vector<std::vector<double>> step_rel_;
};

/// Recorded run on the delta grid. Grid rows k = 0..N hold instantaneous
/// values; interval rows k = 1..N (stored at k - 1) hold means over
/// ((k-1) delta, k delta].
struct Trajectory {
  double delta = 0.0;
  int steps_per_period = 1;
  std::vector<SystemState> grid;
  std::vector<std::vector<double>> pipe_flow;   // [k-1][pipe]
  std::vector<std::vector<double>> flood;       // [k-1][tank]
  std::vector<std::vector<double>> cso;         // [k-1][plant]
  std::vector<std::vector<double>> outflow;     // [k-1][plant]
  std::vector<std::vector<double>> inflow;      // [k-1][tank]
  std::vector<std::vector<std::vector<double>>> released;  // [k-1][plant][species], kg
  std::vector<std::vector<double>> period_setpoints;       // [period][pipe]
  std::vector<double> initial_setpoints;                   // per pipe
  RunTotals totals;
  double initial_stored_volume = 0.0, final_stored_volume = 0.0;
  std::vector<double> initial_stored_mass, final_stored_mass;

  int steps() const { return static_cast<int>(grid.size()) - 1; }
  /// Setpoint in force at step k (initial setpoints for k < 0).
  const std::vector<double>& setpoint_at(int k) const;
  void record(const Simulator& sim);
};

/// Open-loop run; periods[c] holds the per-pipe setpoints of control period c
/// (the last row repeats). Throws SimulationError on NaN.
Trajectory run(const Scenario& scenario, const std::vector<std::vector<double>>& periods,
               int steps);

/// Expand OpenLoopControls (one value per actuator pipe) to per-pipe rows.
std::vector<std::vector<double>> expand_open_loop(const Scenario& scenario);

/// Observation at step n: rows j = 0..tau_ic-1 cover steps n - tau_ic + 1 + j.
struct Observation {
  int step = 0;
  std::vector<std::vector<double>> volume;       // [j][tank]
  std::vector<std::vector<std::vector<double>>> plant_conc;  // [j][plant][species]
  std::vector<std::vector<double>> setpoint;     // [j][pipe]
  std::vector<std::vector<double>> pipe_flow;    // [j][pipe], realized mean over the step
  std::vector<std::vector<double>> plant_outflow;  // [j][plant]
};

/// Observation of traj at step n. Steps before 0 repeat the initial state.
/// noise is a relative standard deviation; values are clamped to their
/// physical ranges.
Observation observe(const Scenario& scenario, const Trajectory& traj, int n, double noise = 0.0,
                    std::uint64_t seed = 0);

struct PlantEstimate {
  int first_step = 0;  // step of row 0
  std::vector<std::vector<std::vector<double>>> inlet;  // [row][plant][species]
  std::vector<std::vector<std::vector<double>>> conc;   // [row][plant][species]
  std::vector<std::vector<double>> outflow;             // [row][plant], m3/min
};

/// Forward simulation from `truth` with observed volumes and plant
/// concentrations overwritten. nominal[k] are the per-pipe setpoints for
/// the k-th step after truth's current step (last row repeats). Rows cover
/// history rows taken from traj for steps before the current one.
PlantEstimate estimate_plant_concentrations(const Scenario& scenario, const Simulator& truth,
                                            const Trajectory& traj, const Observation& obs,
                                            const std::vector<std::vector<double>>& nominal,
                                            int history, int horizon);

/// CSV: t_min, tank_id, V, c_<species>..., QF, QCSO
void write_states_csv(std::ostream& out, const Scenario& scenario, const Trajectory& traj);
/// CSV: t_min, then one column per pipe label (step mean flows) and plant outflows.
void write_flows_csv(std::ostream& out, const Scenario& scenario, const Trajectory& traj);

}  // namespace sewerflow
