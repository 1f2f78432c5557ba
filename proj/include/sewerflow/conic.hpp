#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace sewerflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

/// sum coef * x[var] + constant.
struct LinearExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinearExpr& add(std::size_t var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  double eval(const std::vector<double>& x) const;
};

/// What a constraint row encodes; used for audits, counts and dumps.
enum class RowTag : std::uint8_t {
  InitialCondition,
  VolumeDynamics,
  PlantDynamics,
  DiversionBalance,
  PlantBalance,
  Uncontrolled,
  VolumeLimit,
  Hold,
  Hinge,
  Kinetics,
  Decay,
  Underestimator,
  Auxiliary,
  Other,
};

const char* to_string(RowTag tag);

/// terms . x (== or <=) rhs
struct LinearRow {
  std::vector<LinTerm> terms;
  double rhs = 0.0;
  RowTag tag = RowTag::Other;
};

/// ||tail|| <= head
struct ConeBlock {
  LinearExpr head;
  std::vector<LinearExpr> tail;
  RowTag tag = RowTag::Kinetics;
};

/// weight * expr^2, weight >= 0.
struct SquareTerm {
  double weight = 0.0;
  LinearExpr expr;
};

/// Solver-agnostic conic program:
///   minimize  c.x + c0 + sum_k w_k (a_k.x + b_k)^2
///   subject to equality rows, inequality rows, variable bounds, SOC blocks.
class ConicProgram {
public:
  std::size_t add_variable(double lower = -kInf, double upper = kInf);
  std::size_t add_variables(std::size_t count, double lower = -kInf, double upper = kInf);

  void add_equality(LinearRow row) { eq_.push_back(std::move(row)); }
  void add_inequality(LinearRow row) { ineq_.push_back(std::move(row)); }
  void add_cone(ConeBlock cone) { cones_.push_back(std::move(cone)); }
  void add_square(double weight, LinearExpr expr);
  void add_linear_cost(std::size_t var, double coef) { cost_.at(var) += coef; }
  void add_constant_cost(double value) { cost_constant_ += value; }

  void set_bounds(std::size_t var, double lower, double upper);
  /// Typical magnitude of a variable. Backends may solve in x / scale;
  /// the program and its solutions stay in original units.
  void set_scale(std::size_t var, double scale);
  void fix(std::size_t var, double value) { set_bounds(var, value, value); }

  std::size_t variable_count() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<LinearRow>& equalities() const { return eq_; }
  const std::vector<LinearRow>& inequalities() const { return ineq_; }
  const std::vector<ConeBlock>& cones() const { return cones_; }
  const std::vector<SquareTerm>& squares() const { return squares_; }
  const std::vector<double>& linear_cost() const { return cost_; }
  const std::vector<double>& scale() const { return scale_; }
  double constant_cost() const { return cost_constant_; }

  /// Scalar constraints: rows, finite bounds (a fixed variable counts once),
  /// and one per cone block.
  std::size_t constraint_count() const;
  std::size_t count_rows(RowTag tag) const;

  double objective(const std::vector<double>& x) const;
  /// Largest violation over rows, bounds and cones at x.
  double max_violation(const std::vector<double>& x) const;

  /// Throws std::logic_error if any term references a missing variable or a
  /// square weight is negative.
  void check() const;

  /// Deterministic text dump in the Conic Benchmark Format (CBF v3); squares
  /// are lifted to rotated-cone epigraphs.
  void write_cbf(std::ostream& out) const;

private:
  std::vector<double> lower_, upper_, cost_, scale_;
  double cost_constant_ = 0.0;
  std::vector<LinearRow> eq_, ineq_;
  std::vector<ConeBlock> cones_;
  std::vector<SquareTerm> squares_;
};

enum class SolveStatus {
  Optimal,
  NearOptimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  TimeLimit,
  NumericalError,
};

const char* to_string(SolveStatus status);
inline bool usable(SolveStatus s) {
  return s == SolveStatus::Optimal || s == SolveStatus::NearOptimal;
}

struct Solution {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<double> x;
  double objective = 0.0;
  double solve_time = 0.0;  // s
  int iterations = 0;
  double primal_residual = 0.0;
};

struct SolverCapabilities {
  bool native_quadratic = false;
  bool second_order_cones = false;
};

class SolverAdapter {
public:
  virtual ~SolverAdapter() = default;
  virtual SolverCapabilities capabilities() const = 0;
  virtual double tolerance() const = 0;
  virtual Solution solve(const ConicProgram& program) const = 0;
};

struct ClarabelOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double time_limit = 300.0;
  bool verbose = false;

  /// Applies SEWERFLOW_SOLVER_TOL when set.
  static ClarabelOptions from_env(ClarabelOptions base);
  static ClarabelOptions from_env() { return from_env(ClarabelOptions()); }
};

/// Interior-point backend. Squares are lifted to auxiliary variables with a
/// diagonal quadratic cost.
class ClarabelAdapter final : public SolverAdapter {
public:
  ClarabelAdapter() : options_(ClarabelOptions::from_env()) {}
  explicit ClarabelAdapter(ClarabelOptions options) : options_(options) {}
  SolverCapabilities capabilities() const override { return {true, true}; }
  double tolerance() const override { return options_.tol; }
  Solution solve(const ConicProgram& program) const override;

private:
  ClarabelOptions options_;
};

}  // namespace sewerflow
