#include "sewerflow/discretize.hpp"

#include <string>

namespace sewerflow {

AMScheme am_coefficients(int order) {
  AMScheme scheme;
  scheme.order = order;
  switch (order) {
    case 1:
    case 2:
      scheme.alpha = {1.0 / 2.0, 1.0 / 2.0};
      break;
    case 3:
      scheme.alpha = {5.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
      break;
    case 4:
      scheme.alpha = {9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0};
      break;
    default:
      throw std::invalid_argument("am_coefficients: unsupported order " +
                                  std::to_string(order) + " (expected 1..4)");
  }
  return scheme;
}

double stencil_residual(const AMScheme& scheme, std::span<const double> states,
                        std::span<const double> derivs, double delta, std::size_t n) {
  const auto k_max = static_cast<std::size_t>(scheme.backsteps());
  if (n < 1 || n >= states.size() || n >= derivs.size() || n < k_max)
    throw HistoryError("stencil_residual: not enough history at index " + std::to_string(n));
  double sum = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) sum += scheme.alpha[k] * derivs[n - k];
  return states[n] - states[n - 1] - delta * sum;
}

int delayed_index(int n, const Pipe& pipe, int tau_ic) {
  const int idx = n - pipe.delay_steps;
  if (idx < -tau_ic)
    throw HistoryError("delayed_index: period " + std::to_string(idx) + " of pipe '" +
                       pipe.label + "' precedes the initial-condition history (-" +
                       std::to_string(tau_ic) + ")");
  return idx;
}

}  // namespace sewerflow
