#include "sewerflow/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sewerflow/model.hpp"

namespace sewerflow {

KineticLaw KineticLaw::contois(double mu, double k_c, std::size_t substrate,
                               std::size_t biomass) {
  KineticLaw law;
  law.kind = KineticKind::Contois;
  law.mu = mu;
  law.k = k_c;
  law.substrate_index = substrate;
  law.biomass_index = biomass;
  return law;
}

KineticLaw KineticLaw::monod(double mu, double k_m, double x_bar, std::size_t substrate,
                             std::size_t biomass) {
  KineticLaw law;
  law.kind = KineticKind::MonodFixedBiomass;
  law.mu = mu;
  law.k = k_m;
  law.x_bar = x_bar;
  law.substrate_index = substrate;
  law.biomass_index = biomass;
  return law;
}

KineticLaw KineticLaw::decay(double rate, std::size_t biomass) {
  KineticLaw law;
  law.kind = KineticKind::LinearDecay;
  law.mu = rate;
  law.substrate_index = biomass;
  law.biomass_index = biomass;
  return law;
}

void KineticLaw::validate() const {
  switch (kind) {
    case KineticKind::Contois:
    case KineticKind::MonodFixedBiomass:
      if (!(mu > 0.0)) throw DomainError("kinetic law: mu must be positive");
      if (!(k > 0.0)) throw DomainError("kinetic law: half-saturation must be positive");
      if (kind == KineticKind::MonodFixedBiomass && !(x_bar >= 0.0))
        throw DomainError("kinetic law: fixed biomass must be nonnegative");
      break;
    case KineticKind::LinearDecay:
      if (!(mu >= 0.0)) throw DomainError("kinetic law: decay rate must be nonnegative");
      break;
  }
}

double ConeRow::margin(double s, double x, double t) const {
  const std::array<double, 3> z{s, x, t};
  double norm2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = b[i];
    for (std::size_t j = 0; j < 3; ++j) v += a[i][j] * z[j];
    norm2 += v * v;
  }
  double rhs = d;
  for (std::size_t j = 0; j < 3; ++j) rhs += c[j] * z[j];
  return rhs - std::sqrt(norm2);
}

double rate_eval(const KineticLaw& law, double s, double x) {
  if (s < 0.0 || x < 0.0 || std::isnan(s) || std::isnan(x))
    throw DomainError("rate_eval: concentrations must be nonnegative");
  switch (law.kind) {
    case KineticKind::Contois: {
      const double den = law.k * x + s;
      if (den <= 0.0) return 0.0;
      return law.mu * s * x / den;
    }
    case KineticKind::MonodFixedBiomass:
      return law.mu * s * law.x_bar / (law.k + s);
    case KineticKind::LinearDecay:
      return law.mu * x;
  }
  return 0.0;
}

std::vector<double> rate_vector(const PlantBiology& biology, std::span<const double> xi) {
  if (xi.size() != biology.species_count())
    throw std::invalid_argument("rate_vector: expected " +
                                std::to_string(biology.species_count()) +
                                " concentrations, got " + std::to_string(xi.size()));
  std::vector<double> rates(biology.reaction_count());
  for (std::size_t j = 0; j < rates.size(); ++j) {
    const KineticLaw& law = biology.laws[j];
    rates[j] = rate_eval(law, xi[law.substrate_index], xi[law.biomass_index]);
  }
  return rates;
}

std::vector<ConeRow> soc_rows(const KineticLaw& law) {
  ConeRow row;
  const double mu = law.mu;
  const double k = law.k;
  switch (law.kind) {
    case KineticKind::Contois:
      // ||(mu S, k T, mu k X)|| <= mu k X + mu S - k T
      row.a = {{mu, 0.0, 0.0}, {0.0, 0.0, k}, {0.0, mu * k, 0.0}};
      row.b = {0.0, 0.0, 0.0};
      row.c = {mu, mu * k, -k};
      row.d = 0.0;
      return {row};
    case KineticKind::MonodFixedBiomass: {
      // ||(mu S Xb, k T, mu k Xb)|| <= mu k Xb + mu S Xb - k T
      const double xb = law.x_bar;
      row.a = {{mu * xb, 0.0, 0.0}, {0.0, 0.0, k}, {0.0, 0.0, 0.0}};
      row.b = {0.0, 0.0, mu * k * xb};
      row.c = {mu * xb, 0.0, -k};
      row.d = mu * k * xb;
      return {row};
    }
    case KineticKind::LinearDecay:
      return {};
  }
  return {};
}

LinearUnderestimator underestimator_row(const KineticLaw& law, double s_min, double s_max,
                                        double x_ref) {
  if (!(s_min >= 0.0) || !(s_max > s_min))
    throw DomainError("underestimator_row: need 0 <= s_min < s_max");
  const double lo = rate_eval(law, s_min, x_ref);
  const double hi = rate_eval(law, s_max, x_ref);
  LinearUnderestimator row;
  row.slope = (hi - lo) / (s_max - s_min);
  row.intercept = lo - row.slope * s_min;
  return row;
}

double exactness_gap(const KineticLaw& law, double s, double x, double t) {
  const double phi = rate_eval(law, std::max(s, 0.0), std::max(x, 0.0));
  return (phi - t) / std::max(phi, kExactnessEps);
}

}  // namespace sewerflow
