#include "sewerflow/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

extern "C" {
struct ClarabelFfiCsc {
  std::size_t nrows;
  std::size_t ncols;
  const std::size_t* colptr;
  const std::size_t* rowval;
  const double* nzval;
};

struct ClarabelFfiSettings {
  std::uint32_t max_iter;
  double time_limit;
  double tol_gap_abs;
  double tol_gap_rel;
  double tol_feas;
  bool verbose;
};

struct ClarabelFfiResult {
  std::uint32_t status;
  double obj_val;
  double solve_time;
  std::uint32_t iterations;
  double r_prim;
  double r_dual;
};

int clarabel_ffi_solve(const ClarabelFfiCsc* p, const double* q, const ClarabelFfiCsc* a,
                       const double* b, std::size_t ncones, const std::uint32_t* cone_types,
                       const std::size_t* cone_dims, const ClarabelFfiSettings* settings,
                       double* x_out, ClarabelFfiResult* result);
}

namespace sewerflow {

namespace {

struct Triplet {
  std::size_t row, col;
  double v;
};

struct Csc {
  std::size_t nrows = 0, ncols = 0;
  std::vector<std::size_t> colptr, rowval;
  std::vector<double> nzval;

  ClarabelFfiCsc view() const {
    return {nrows, ncols, colptr.data(), rowval.data(), nzval.data()};
  }
};

// Sorts by (col, row) and sums duplicates.
Csc to_csc(std::size_t nrows, std::size_t ncols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& x, const Triplet& y) {
    return x.col != y.col ? x.col < y.col : x.row < y.row;
  });
  Csc m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.colptr.assign(ncols + 1, 0);
  for (std::size_t i = 0; i < t.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < t.size() && t[j].col == t[i].col && t[j].row == t[i].row) sum += t[j++].v;
    if (sum != 0.0) {
      m.rowval.push_back(t[i].row);
      m.nzval.push_back(sum);
      ++m.colptr[t[i].col + 1];
    }
    i = j;
  }
  for (std::size_t c = 0; c < ncols; ++c) m.colptr[c + 1] += m.colptr[c];
  return m;
}

SolveStatus map_status(std::uint32_t s) {
  switch (s) {
    case 0: return SolveStatus::Optimal;
    case 1: return SolveStatus::NearOptimal;
    case 2: return SolveStatus::Infeasible;
    case 3: return SolveStatus::Unbounded;
    case 4: return SolveStatus::IterationLimit;
    case 5: return SolveStatus::TimeLimit;
    default: return SolveStatus::NumericalError;
  }
}

}  // namespace

ClarabelOptions ClarabelOptions::from_env(ClarabelOptions base) {
  if (const char* env = std::getenv("SEWERFLOW_SOLVER_TOL")) {
    try {
      const double tol = std::stod(env);
      if (tol > 0.0 && std::isfinite(tol)) base.tol = tol;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return base;
}

Solution ClarabelAdapter::solve(const ConicProgram& program) const {
  program.check();
  const std::size_t n = program.variable_count();
  const auto& squares = program.squares();
  const std::size_t nsq = squares.size();
  const std::size_t nvar = n + nsq;

  // Solved in x~ = x / scale.
  const std::vector<double>& sc = program.scale();
  std::vector<double> q(nvar, 0.0);
  for (std::size_t j = 0; j < n; ++j) q[j] = program.linear_cost()[j] * sc[j];

  std::vector<Triplet> pt;
  for (std::size_t k = 0; k < nsq; ++k) pt.push_back({n + k, n + k, 2.0 * squares[k].weight});

  std::vector<Triplet> at;
  std::vector<double> b;
  std::vector<std::uint32_t> cone_types;
  std::vector<std::size_t> cone_dims;
  std::size_t row = 0;
  auto push_cone = [&](std::uint32_t type, std::size_t dim) {
    if (dim == 0) return;
    if (type != 2 && !cone_types.empty() && cone_types.back() == type)
      cone_dims.back() += dim;
    else
      cone_types.push_back(type), cone_dims.push_back(dim);
  };
  auto add_row = [&](const std::vector<LinTerm>& terms, double scale, double rhs) {
    for (const LinTerm& t : terms)
      at.push_back({row, t.var, scale * t.coef * (t.var < n ? sc[t.var] : 1.0)});
    b.push_back(rhs);
    ++row;
  };

  const auto& lo = program.lower();
  const auto& up = program.upper();

  // zero cone
  std::size_t start = row;
  for (const LinearRow& r : program.equalities()) add_row(r.terms, 1.0, r.rhs);
  for (std::size_t k = 0; k < nsq; ++k) {
    // y_k - a_k.x = b_k
    at.push_back({row, n + k, 1.0});
    add_row(squares[k].expr.terms, -1.0, squares[k].expr.constant);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (lo[j] == up[j]) add_row({{j, 1.0 / sc[j]}}, 1.0, lo[j] / sc[j]);
  push_cone(0, row - start);

  // nonnegative cone
  start = row;
  for (const LinearRow& r : program.inequalities()) add_row(r.terms, 1.0, r.rhs);
  for (std::size_t j = 0; j < n; ++j) {
    if (lo[j] == up[j]) continue;
    if (std::isfinite(up[j])) add_row({{j, 1.0 / sc[j]}}, 1.0, up[j] / sc[j]);
    if (std::isfinite(lo[j])) add_row({{j, -1.0 / sc[j]}}, 1.0, -lo[j] / sc[j]);
  }
  push_cone(1, row - start);

  // second-order cones: s = b - A x, s = (head, tail...)
  for (const ConeBlock& c : program.cones()) {
    add_row(c.head.terms, -1.0, c.head.constant);
    for (const LinearExpr& e : c.tail) add_row(e.terms, -1.0, e.constant);
    push_cone(2, 1 + c.tail.size());
  }

  const Csc P = to_csc(nvar, nvar, std::move(pt));
  const Csc A = to_csc(row, nvar, std::move(at));
  const ClarabelFfiCsc pv = P.view(), av = A.view();

  ClarabelFfiSettings settings{};
  settings.max_iter = static_cast<std::uint32_t>(std::max(1, options_.max_iter));
  settings.time_limit = options_.time_limit > 0.0 ? options_.time_limit : 1e30;
  settings.tol_gap_abs = options_.tol;
  settings.tol_gap_rel = options_.tol;
  settings.tol_feas = options_.tol;
  settings.verbose = options_.verbose;

  std::vector<double> x(nvar, 0.0);
  ClarabelFfiResult res{};
  const int rc = clarabel_ffi_solve(&pv, q.data(), &av, b.data(), cone_types.size(),
                                    cone_types.data(), cone_dims.data(), &settings, x.data(),
                                    &res);
  Solution sol;
  if (rc != 0) {
    sol.status = SolveStatus::NumericalError;
    return sol;
  }
  sol.status = map_status(res.status);
  x.resize(n);
  for (std::size_t j = 0; j < n; ++j) x[j] *= sc[j];
  sol.x = std::move(x);
  sol.objective = program.objective(sol.x);
  sol.solve_time = res.solve_time;
  sol.iterations = static_cast<int>(res.iterations);
  sol.primal_residual = program.max_violation(sol.x);
  return sol;
}

}  // namespace sewerflow
