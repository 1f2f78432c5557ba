#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sewerflow {

class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

enum class KineticKind {
  Contois,            // mu S X / (k X + S)
  MonodFixedBiomass,  // mu S x_bar / (k + S), live X ignored
  LinearDecay,        // mu X, first-order biomass death
};

/// Growth (or decay) law of a single reaction. Rates are per minute.
struct KineticLaw {
  KineticKind kind = KineticKind::Contois;
  double mu = 0.0;
  double k = 0.0;       // k_C (dimensionless) or k_M [kg/m3]
  double x_bar = 0.0;   // Monod only
  std::size_t substrate_index = 0;
  std::size_t biomass_index = 0;

  static KineticLaw contois(double mu, double k_c, std::size_t substrate,
                            std::size_t biomass);
  static KineticLaw monod(double mu, double k_m, double x_bar,
                          std::size_t substrate, std::size_t biomass);
  static KineticLaw decay(double rate, std::size_t biomass);

  /// Throws DomainError on nonpositive rates or constants.
  void validate() const;

  bool operator==(const KineticLaw&) const = default;
};

/// Symbolic coordinates of the cone rows: (S, X, T).
inline constexpr std::size_t kSymS = 0;
inline constexpr std::size_t kSymX = 1;
inline constexpr std::size_t kSymT = 2;

/// ||A z + b|| <= c.z + d over z = (S, X, T).
struct ConeRow {
  std::vector<std::array<double, 3>> a;
  std::vector<double> b;
  std::array<double, 3> c{};
  double d = 0.0;

  /// (c.z + d) - ||A z + b||; nonnegative iff the point is in the cone.
  double margin(double s, double x, double t) const;
};

/// T >= slope * S + intercept.
struct LinearUnderestimator {
  double slope = 0.0;
  double intercept = 0.0;
};

double rate_eval(const KineticLaw& law, double s, double x);

struct PlantBiology;
std::vector<double> rate_vector(const PlantBiology& biology,
                                std::span<const double> xi);

/// Cone rows whose feasible set over (S, X, T) >= 0 is the hypograph T <= phi.
/// Decay laws are linear and have no cone; an empty list is returned.
std::vector<ConeRow> soc_rows(const KineticLaw& law);

LinearUnderestimator underestimator_row(const KineticLaw& law, double s_min,
                                        double s_max, double x_ref);

inline constexpr double kExactnessEps = 1e-12;

double exactness_gap(const KineticLaw& law, double s, double x, double t);

}  // namespace sewerflow
