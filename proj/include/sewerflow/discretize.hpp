#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "sewerflow/model.hpp"

namespace sewerflow {

class HistoryError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// Implicit Adams-Moulton stencil:
///   y(n) - y(n-1) = delta * sum_k alpha[k] * f(n-k),  k = 0..backsteps.
/// alpha[0] weights the current (implicit) derivative.
struct AMScheme {
  int order = 1;
  std::vector<double> alpha;

  int backsteps() const { return static_cast<int>(alpha.size()) - 1; }
};

/// Orders 1..4. Order 1 is the trapezoidal rule; orders 2..4 are the
/// classical schemes of that accuracy (order 2 coincides with order 1).
AMScheme am_coefficients(int order);

/// states[n] - states[n-1] - delta * sum_k alpha_k derivs[n-k].
double stencil_residual(const AMScheme& scheme, std::span<const double> states,
                        std::span<const double> derivs, double delta, std::size_t n);

/// n - pipe.delay_steps; throws HistoryError if that precedes -tau_ic.
int delayed_index(int n, const Pipe& pipe, int tau_ic);

}  // namespace sewerflow
