#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sewerflow/kinetics.hpp"

namespace sewerflow {

enum class TankKind { Plant, Real, Virtual, DiversionNode };

struct Tank {
  std::string id;
  TankKind kind = TankKind::Virtual;
  double v_max = 0.0;      // m3
  double v_bar = 0.0;      // m3, plants only
  double q_out_min = 0.0;  // m3/min, plants only
  double q_out_max = 0.0;  // m3/min, plants only
  double beta = 0.0;       // 1/min
  bool has_external_inflow = false;

  bool is_plant() const { return kind == TankKind::Plant; }
  bool is_diversion() const { return kind == TankKind::DiversionNode; }
  /// Tanks with a volume state: real storage and virtual tanks.
  bool is_storage() const {
    return kind == TankKind::Real || kind == TankKind::Virtual;
  }

  bool operator==(const Tank&) const = default;
};

enum class PipeControl { Uncontrolled, PumpOrGate, VolumeLimited, DiversionBranch };

struct Pipe {
  std::string label;  // actuator name or "from->to"
  std::size_t from = 0;
  std::size_t to = 0;
  double q_max = 0.0;  // m3/min
  double q_min = 0.0;  // PumpOrGate lower bound
  int delay_steps = 0;
  PipeControl control = PipeControl::Uncontrolled;

  bool is_actuator() const { return control != PipeControl::Uncontrolled; }

  bool operator==(const Pipe&) const = default;
};

/// Tank/pipe topology with id lookup and adjacency lists.
class NetworkModel {
public:
  NetworkModel() = default;
  NetworkModel(std::vector<Tank> tanks, std::vector<Pipe> pipes);

  const std::vector<Tank>& tanks() const { return tanks_; }
  const std::vector<Pipe>& pipes() const { return pipes_; }
  const Tank& tank(std::size_t i) const { return tanks_.at(i); }
  const Pipe& pipe(std::size_t p) const { return pipes_.at(p); }
  std::size_t tank_count() const { return tanks_.size(); }
  std::size_t pipe_count() const { return pipes_.size(); }

  std::optional<std::size_t> find_tank(const std::string& id) const;
  std::size_t tank_index(const std::string& id) const;  // throws

  const std::vector<std::size_t>& in_pipes(std::size_t tank) const { return in_.at(tank); }
  const std::vector<std::size_t>& out_pipes(std::size_t tank) const { return out_.at(tank); }

  const std::vector<std::size_t>& plants() const { return plants_; }
  const std::vector<std::size_t>& storage_tanks() const { return storage_; }
  const std::vector<std::size_t>& diversion_nodes() const { return diversions_; }
  const std::vector<std::size_t>& actuator_pipes() const { return actuators_; }
  const std::vector<std::size_t>& inlets() const { return inlets_; }

  /// Physical actuating devices: pumps, gates and diversion gates.
  std::size_t actuator_device_count() const;
  int max_delay() const;

  /// Position of a plant in plants(), or of a storage tank in storage_tanks().
  std::size_t plant_slot(std::size_t tank) const { return slot_.at(tank); }
  std::size_t storage_slot(std::size_t tank) const { return slot_.at(tank); }

  /// Tanks ordered so that every zero-delay pipe points forward.
  /// Empty if zero-delay pipes contain a cycle.
  const std::vector<std::size_t>& zero_delay_order() const { return topo_; }

  bool operator==(const NetworkModel& o) const {
    return tanks_ == o.tanks_ && pipes_ == o.pipes_;
  }

private:
  std::vector<Tank> tanks_;
  std::vector<Pipe> pipes_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::vector<std::size_t>> in_, out_;
  std::vector<std::size_t> plants_, storage_, diversions_, actuators_, inlets_;
  std::vector<std::size_t> slot_;
  std::vector<std::size_t> topo_;
};

/// Species, stoichiometry and kinetics of one plant. Rates are per minute.
struct PlantBiology {
  std::vector<std::string> species;
  std::vector<std::vector<double>> kappa;  // m rows x r columns
  std::vector<KineticLaw> laws;            // r entries
  double death_rate = 0.0;                 // 1/min
  double effluent_biomass_factor = 1.0;
  std::size_t biomass_index = 0;

  std::size_t species_count() const { return species.size(); }
  std::size_t reaction_count() const { return laws.size(); }

  /// Appends a first-order decay column (rate death_rate * X) to kappa.
  void append_decay_column();

  /// Outflow multiplier for species s (the biomass factor or 1).
  double outflow_factor(std::size_t s) const {
    return s == biomass_index ? effluent_biomass_factor : 1.0;
  }

  std::vector<std::string> violations() const;

  bool operator==(const PlantBiology&) const = default;
};

inline constexpr double kMinutesPerDay = 1440.0;

/// Reaction parameters of the three-plant case study (plant = 0, 1, 2) with
/// rates converted to per minute and half-saturation constants scaled by 1e-3.
/// Species order: BOD, NH4, NO2, NO3, X. Includes the decay column.
PlantBiology case_study_biology(int plant);

struct Timing {
  double delta = 3.0;           // trajectory step [min]
  double capital_delta = 15.0;  // control period [min]
  int horizon_steps = 160;
  int sim_periods = 200;        // control periods simulated
  int am_order = 3;

  /// Delta / delta; throws if not a positive integer.
  int steps_per_period() const;
  int total_steps() const { return steps_per_period() * sim_periods; }

  bool operator==(const Timing&) const = default;
};

struct Weights {
  std::vector<double> pollutant_release;     // w_PR, per species
  std::vector<double> regulation_violation;  // w_RV, per species
  std::vector<double> microbial_growth;      // w_MG, per reaction
  double slope = 0.0;
  double curvature = 0.0;
  double final_volume = 0.0;
  double total_volume = 0.0;
  double plant_balance = 0.0;
  double time_balance = 0.0;
  double flooding = 0.0;
  double cso = 0.0;

  bool operator==(const Weights&) const = default;
};

/// Per-inlet external inflow sampled on the delta grid, starting at first_step.
struct InfluentSeries {
  std::size_t tank = 0;
  int first_step = 0;
  std::vector<double> flow;               // m3/min
  std::vector<std::vector<double>> conc;  // kg/m3, m species per sample

  int last_step() const { return first_step + static_cast<int>(flow.size()) - 1; }
  /// Linear interpolation at t = step position (fractional allowed).
  double flow_at(double step) const;
  void conc_at(double step, std::span<double> out) const;

  bool operator==(const InfluentSeries&) const = default;
};

/// Values held constant over the initial-condition history.
struct InitialState {
  std::vector<double> volume;                  // per tank (storage only used)
  std::vector<std::vector<double>> conc;       // per tank, m species
  std::vector<double> pipe_setpoint;           // per pipe (actuators used)
  std::vector<double> plant_outflow;           // per plant slot

  bool operator==(const InitialState&) const = default;
};

struct UnderestimatorConfig {
  bool enabled = false;
  double s_max_factor = 2.0;  // s_max = factor * max influent concentration

  bool operator==(const UnderestimatorConfig&) const = default;
};

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 200;
  double time_limit = 300.0;  // s

  bool operator==(const SolverConfig&) const = default;
};

/// Open-loop setpoints for `simulate`: one row per control period, one value
/// per actuator pipe. Periods past the end repeat the last row.
struct OpenLoopControls {
  std::vector<std::vector<double>> periods;

  bool operator==(const OpenLoopControls&) const = default;
};

struct Scenario {
  std::string name;
  NetworkModel network;
  std::vector<std::string> species;
  std::vector<PlantBiology> biology;  // per plant slot
  Timing timing;
  Weights weights;
  std::vector<double> xi_max;
  InitialState initial;
  std::vector<InfluentSeries> influent;
  UnderestimatorConfig underestimator;
  SolverConfig solver;
  double observation_noise = 0.0;
  std::uint64_t seed = 0;
  /// Fraction of v_max the trajectory programs keep free as a back-off.
  double volume_margin = 0.0;
  OpenLoopControls open_loop;

  std::size_t species_count() const { return species.size(); }
  /// Back-steps of the Adams-Moulton stencil for timing.am_order.
  int am_backsteps() const;
  /// max(largest delay, AM back-steps, 3).
  int tau_ic() const;
  /// Last grid step any run or horizon may touch.
  int required_last_step() const;

  /// Influent series for an inlet tank, or nullptr.
  const InfluentSeries* influent_for(std::size_t tank) const;

  /// All invariants that involve more than the network alone, except
  /// influent coverage.
  std::vector<std::string> violations() const;
  /// Influent series that miss part of the initial history, run or horizon.
  std::vector<std::string> coverage_violations() const;

  bool operator==(const Scenario&) const = default;
};

/// Network rule checks; empty iff valid.
std::vector<std::string> validate_network(const NetworkModel& network);

const char* to_string(TankKind kind);
const char* to_string(PipeControl control);

}  // namespace sewerflow
