#include "sewerflow/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace sewerflow {

double LinearExpr::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const LinTerm& t : terms) v += t.coef * x[t.var];
  return v;
}

const char* to_string(RowTag tag) {
  switch (tag) {
    case RowTag::InitialCondition: return "initial_condition";
    case RowTag::VolumeDynamics: return "volume_dynamics";
    case RowTag::PlantDynamics: return "plant_dynamics";
    case RowTag::DiversionBalance: return "diversion_balance";
    case RowTag::PlantBalance: return "plant_balance";
    case RowTag::Uncontrolled: return "uncontrolled";
    case RowTag::VolumeLimit: return "volume_limit";
    case RowTag::Hold: return "hold";
    case RowTag::Hinge: return "hinge";
    case RowTag::Kinetics: return "kinetics";
    case RowTag::Decay: return "decay";
    case RowTag::Underestimator: return "underestimator";
    case RowTag::Auxiliary: return "auxiliary";
    case RowTag::Other: return "other";
  }
  return "?";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::NearOptimal: return "near_optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "?";
}

std::size_t ConicProgram::add_variable(double lower, double upper) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(0.0);
  scale_.push_back(1.0);
  return lower_.size() - 1;
}

std::size_t ConicProgram::add_variables(std::size_t count, double lower, double upper) {
  const std::size_t first = lower_.size();
  lower_.resize(first + count, lower);
  upper_.resize(first + count, upper);
  cost_.resize(first + count, 0.0);
  scale_.resize(first + count, 1.0);
  return first;
}

void ConicProgram::add_square(double weight, LinearExpr expr) {
  if (weight == 0.0) return;
  squares_.push_back({weight, std::move(expr)});
}

void ConicProgram::set_scale(std::size_t var, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("ConicProgram::set_scale: scale must be positive");
  scale_.at(var) = scale;
}

void ConicProgram::set_bounds(std::size_t var, double lower, double upper) {
  lower_.at(var) = lower;
  upper_.at(var) = upper;
}

std::size_t ConicProgram::constraint_count() const {
  std::size_t count = eq_.size() + ineq_.size() + cones_.size();
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (lower_[j] == upper_[j]) {
      ++count;
      continue;
    }
    if (std::isfinite(lower_[j])) ++count;
    if (std::isfinite(upper_[j])) ++count;
  }
  return count;
}

std::size_t ConicProgram::count_rows(RowTag tag) const {
  auto match = [tag](const auto& r) { return r.tag == tag; };
  return static_cast<std::size_t>(std::count_if(eq_.begin(), eq_.end(), match) +
                                  std::count_if(ineq_.begin(), ineq_.end(), match) +
                                  std::count_if(cones_.begin(), cones_.end(), match));
}

double ConicProgram::objective(const std::vector<double>& x) const {
  double v = cost_constant_;
  for (std::size_t j = 0; j < cost_.size(); ++j) v += cost_[j] * x[j];
  for (const SquareTerm& s : squares_) {
    const double e = s.expr.eval(x);
    v += s.weight * e * e;
  }
  return v;
}

double ConicProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  auto row_value = [&](const LinearRow& r) {
    double v = 0.0;
    for (const LinTerm& t : r.terms) v += t.coef * x[t.var];
    return v;
  };
  for (const LinearRow& r : eq_) worst = std::max(worst, std::abs(row_value(r) - r.rhs));
  for (const LinearRow& r : ineq_) worst = std::max(worst, row_value(r) - r.rhs);
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lower_[j] - x[j]);
    worst = std::max(worst, x[j] - upper_[j]);
  }
  for (const ConeBlock& c : cones_) {
    double n2 = 0.0;
    for (const LinearExpr& e : c.tail) {
      const double v = e.eval(x);
      n2 += v * v;
    }
    worst = std::max(worst, std::sqrt(n2) - c.head.eval(x));
  }
  return worst;
}

void ConicProgram::check() const {
  const std::size_t n = variable_count();
  auto check_terms = [n](const std::vector<LinTerm>& terms, const char* where) {
    for (const LinTerm& t : terms)
      if (t.var >= n || !std::isfinite(t.coef))
        throw std::logic_error(std::string("conic program: bad term in ") + where);
  };
  for (const LinearRow& r : eq_) check_terms(r.terms, "equality");
  for (const LinearRow& r : ineq_) check_terms(r.terms, "inequality");
  for (const ConeBlock& c : cones_) {
    check_terms(c.head.terms, "cone head");
    for (const LinearExpr& e : c.tail) check_terms(e.terms, "cone tail");
  }
  for (const SquareTerm& s : squares_) {
    if (!(s.weight >= 0.0)) throw std::logic_error("conic program: negative square weight");
    check_terms(s.expr.terms, "square");
  }
  for (std::size_t j = 0; j < n; ++j)
    if (lower_[j] > upper_[j]) throw std::logic_error("conic program: empty variable bounds");
}

void ConicProgram::write_cbf(std::ostream& out) const {
  // Layout: original variables, then y_k = a_k.x + b_k and epigraph s_k per
  // square, so that the objective is linear: c.x + sum w_k s_k.
  const std::size_t n = variable_count();
  const std::size_t nsq = squares_.size();
  const std::size_t total_vars = n + 2 * nsq;

  struct Entry {
    std::size_t row, col;
    double v;
  };
  std::vector<Entry> a;
  std::vector<std::pair<std::size_t, double>> b;
  std::vector<std::pair<const char*, std::size_t>> blocks;
  std::size_t row = 0;

  auto emit_row = [&](const std::vector<LinTerm>& terms, double constant) {
    for (const LinTerm& t : terms) a.push_back({row, t.var, t.coef});
    if (constant != 0.0) b.push_back({row, constant});
    ++row;
  };
  auto push_block = [&](const char* cone, std::size_t dim) {
    if (!blocks.empty() && std::string(blocks.back().first) == cone &&
        std::string(cone) != "Q" && std::string(cone) != "QR")
      blocks.back().second += dim;
    else
      blocks.push_back({cone, dim});
  };

  // Equalities: a.x - rhs = 0.
  for (const LinearRow& r : eq_) emit_row(r.terms, -r.rhs), push_block("L=", 1);
  for (std::size_t k = 0; k < nsq; ++k) {
    std::vector<LinTerm> terms = squares_[k].expr.terms;
    terms.push_back({n + k, -1.0});
    emit_row(terms, squares_[k].expr.constant);
    push_block("L=", 1);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (lower_[j] == upper_[j]) emit_row({{j, 1.0}}, -lower_[j]), push_block("L=", 1);
  // Inequalities: rhs - a.x >= 0.
  for (const LinearRow& r : ineq_) {
    std::vector<LinTerm> terms;
    for (const LinTerm& t : r.terms) terms.push_back({t.var, -t.coef});
    emit_row(terms, r.rhs);
    push_block("L+", 1);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (lower_[j] == upper_[j]) continue;
    if (std::isfinite(lower_[j])) emit_row({{j, 1.0}}, -lower_[j]), push_block("L+", 1);
    if (std::isfinite(upper_[j])) emit_row({{j, -1.0}}, upper_[j]), push_block("L+", 1);
  }
  for (const ConeBlock& c : cones_) {
    emit_row(c.head.terms, c.head.constant);
    for (const LinearExpr& e : c.tail) emit_row(e.terms, e.constant);
    push_block("Q", 1 + c.tail.size());
  }
  // 2 * s_k * (1/2) >= y_k^2
  for (std::size_t k = 0; k < nsq; ++k) {
    emit_row({{n + nsq + k, 1.0}}, 0.0);
    emit_row({}, 0.5);
    emit_row({{n + k, 1.0}}, 0.0);
    push_block("QR", 3);
  }

  out << std::setprecision(17);
  out << "VER\n3\n\nOBJSENSE\nMIN\n\n";
  out << "VAR\n" << total_vars << " 1\nF " << total_vars << "\n\n";
  out << "CON\n" << row << " " << blocks.size() << "\n";
  for (const auto& [cone, dim] : blocks) out << cone << " " << dim << "\n";
  out << "\n";

  std::size_t nnz_obj = 0;
  for (double c : cost_)
    if (c != 0.0) ++nnz_obj;
  for (const SquareTerm& s : squares_)
    if (s.weight != 0.0) ++nnz_obj;
  out << "OBJACOORD\n" << nnz_obj << "\n";
  for (std::size_t j = 0; j < n; ++j)
    if (cost_[j] != 0.0) out << j << " " << cost_[j] << "\n";
  for (std::size_t k = 0; k < nsq; ++k)
    if (squares_[k].weight != 0.0) out << n + nsq + k << " " << squares_[k].weight << "\n";
  out << "\n";
  if (cost_constant_ != 0.0) out << "OBJBCOORD\n" << cost_constant_ << "\n\n";

  out << "ACOORD\n" << a.size() << "\n";
  for (const Entry& e : a) out << e.row << " " << e.col << " " << e.v << "\n";
  out << "\nBCOORD\n" << b.size() << "\n";
  for (const auto& [r, v] : b) out << r << " " << v << "\n";
}

}  // namespace sewerflow
