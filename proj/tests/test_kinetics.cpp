#include <gtest/gtest.h>

#include <cmath>

#include "sewerflow/discretize.hpp"
#include "sewerflow/kinetics.hpp"
#include "sewerflow/model.hpp"

using namespace sewerflow;

namespace {

// Largest T with a nonnegative cone margin, by bisection.
double cone_max_rate(const ConeRow& row, double s, double x) {
  double lo = 0.0, hi = 1.0;
  while (row.margin(s, x, hi) >= 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (row.margin(s, x, mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST(Kinetics, RateEvalHandValues) {
  const KineticLaw c = KineticLaw::contois(2.0, 0.5, 0, 1);
  // 2 * 0.3 * 0.4 / (0.5 * 0.4 + 0.3) = 0.24 / 0.5
  EXPECT_DOUBLE_EQ(rate_eval(c, 0.3, 0.4), 0.48);
  EXPECT_DOUBLE_EQ(rate_eval(c, 0.0, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(rate_eval(c, 0.0, 0.0), 0.0);
  const KineticLaw m = KineticLaw::monod(1.5, 0.2, 3.0, 0, 1);
  // 1.5 * 0.2 * 3 / (0.2 + 0.2)
  EXPECT_DOUBLE_EQ(rate_eval(m, 0.2, 99.0), 2.25);
  const KineticLaw d = KineticLaw::decay(0.1, 1);
  EXPECT_DOUBLE_EQ(rate_eval(d, 5.0, 2.0), 0.2);
  EXPECT_THROW(rate_eval(c, -1e-3, 0.4), DomainError);
}

TEST(Kinetics, ValidateRejectsNonpositiveParameters) {
  EXPECT_THROW(KineticLaw::contois(0.0, 0.5, 0, 1).validate(), DomainError);
  EXPECT_THROW(KineticLaw::contois(1.0, -0.5, 0, 1).validate(), DomainError);
  EXPECT_THROW(KineticLaw::monod(1.0, 0.5, -1.0, 0, 1).validate(), DomainError);
  EXPECT_NO_THROW(KineticLaw::decay(0.0, 1).validate());
}

TEST(Kinetics, ConeMaximumMatchesRate) {
  const KineticLaw laws[] = {KineticLaw::contois(3.99 / 1440.0, 13.67e-3, 0, 1),
                             KineticLaw::monod(0.84 / 1440.0, 6.59e-3, 2.0, 0, 1)};
  for (const KineticLaw& law : laws) {
    const std::vector<ConeRow> rows = soc_rows(law);
    ASSERT_EQ(rows.size(), 1u);
    for (double s : {1e-4, 0.01, 0.3}) {
      for (double x : {1e-3, 0.5, 3.0}) {
        const double phi = rate_eval(law, s, x);
        EXPECT_NEAR(cone_max_rate(rows[0], s, x), phi, 1e-9 * phi);
      }
    }
  }
  EXPECT_TRUE(soc_rows(KineticLaw::decay(0.1, 1)).empty());
}

TEST(Kinetics, UnderestimatorIsChordBelowMonod) {
  const KineticLaw m = KineticLaw::monod(1.0, 0.1, 2.0, 0, 1);
  const LinearUnderestimator u = underestimator_row(m, 0.0, 1.0, 2.0);
  EXPECT_NEAR(u.intercept, 0.0, 1e-15);
  EXPECT_NEAR(u.slope, 2.0 / 1.1, 1e-12);
  for (int i = 0; i <= 20; ++i) {
    const double s = i / 20.0;
    EXPECT_LE(u.slope * s + u.intercept, rate_eval(m, s, 2.0) + 1e-12);
  }
  EXPECT_THROW(underestimator_row(m, 1.0, 1.0, 2.0), DomainError);
}

TEST(Kinetics, ExactnessGap) {
  const KineticLaw c = KineticLaw::contois(2.0, 0.5, 0, 1);
  EXPECT_DOUBLE_EQ(exactness_gap(c, 0.3, 0.4, 0.48), 0.0);
  EXPECT_NEAR(exactness_gap(c, 0.3, 0.4, 0.24), 0.5, 1e-15);
  EXPECT_LT(exactness_gap(c, 0.3, 0.4, 0.6), 0.0);
}

TEST(Kinetics, CaseStudyBiologyShape) {
  for (int k = 0; k < 3; ++k) {
    const PlantBiology bio = case_study_biology(k);
    ASSERT_EQ(bio.species_count(), 5u);
    ASSERT_EQ(bio.reaction_count(), 5u);
    EXPECT_TRUE(bio.violations().empty());
    // reaction 1: consumes BOD, produces X
    EXPECT_LT(bio.kappa[0][0], 0.0);
    EXPECT_GT(bio.kappa[4][0], 0.0);
    // reaction 2: consumes NH4, produces NO2 and X
    EXPECT_LT(bio.kappa[1][1], 0.0);
    EXPECT_GT(bio.kappa[2][1], 0.0);
    EXPECT_GT(bio.kappa[4][1], 0.0);
    // reaction 3: NO2 -> NO3; reaction 4 consumes NO3 only
    EXPECT_LT(bio.kappa[2][2], 0.0);
    EXPECT_GT(bio.kappa[3][2], 0.0);
    EXPECT_LT(bio.kappa[3][3], 0.0);
    for (std::size_t s = 0; s < 5; ++s)
      if (s != 3) {
        EXPECT_EQ(bio.kappa[s][3], 0.0);
      }
    EXPECT_EQ(bio.laws[4].kind, KineticKind::LinearDecay);
    EXPECT_EQ(bio.kappa[4][4], -1.0);
    EXPECT_DOUBLE_EQ(bio.effluent_biomass_factor, 0.1);
  }
  EXPECT_DOUBLE_EQ(case_study_biology(0).laws[0].mu, 3.99 / 1440.0);
  EXPECT_DOUBLE_EQ(case_study_biology(1).laws[1].k, 14.98e-3);
  EXPECT_THROW(case_study_biology(3), std::out_of_range);
}

TEST(Discretize, CoefficientsSumToOne) {
  for (int order = 1; order <= 4; ++order) {
    const AMScheme s = am_coefficients(order);
    double sum = 0.0;
    for (double a : s.alpha) sum += a;
    EXPECT_NEAR(sum, 1.0, 1e-15) << order;
  }
  EXPECT_EQ(am_coefficients(1).backsteps(), 1);
  EXPECT_EQ(am_coefficients(3).backsteps(), 2);
  EXPECT_EQ(am_coefficients(4).backsteps(), 3);
  EXPECT_THROW(am_coefficients(0), std::invalid_argument);
  EXPECT_THROW(am_coefficients(5), std::invalid_argument);
}

// A scheme of order p integrates polynomials of degree < p exactly.
TEST(Discretize, StencilExactOnPolynomials) {
  const double h = 0.1;
  for (int order : {1, 3, 4}) {
    const AMScheme s = am_coefficients(order);
    const int deg = order == 1 ? 2 : order;
    std::vector<double> y, dy;
    for (int n = 0; n < 8; ++n) {
      const double t = n * h;
      y.push_back(std::pow(t, deg));
      dy.push_back(deg * std::pow(t, deg - 1));
    }
    for (std::size_t n = 3; n < y.size(); ++n)
      EXPECT_NEAR(stencil_residual(s, y, dy, h, n), 0.0, 1e-14) << order;
  }
  const AMScheme s3 = am_coefficients(3);
  std::vector<double> y{0, 1, 2}, dy{0, 0, 0};
  EXPECT_THROW(stencil_residual(s3, y, dy, 1.0, 1), HistoryError);
}

TEST(Discretize, DelayedIndex) {
  Pipe p;
  p.label = "p";
  p.delay_steps = 2;
  EXPECT_EQ(delayed_index(5, p, 3), 3);
  EXPECT_EQ(delayed_index(-1, p, 3), -3);
  EXPECT_THROW(delayed_index(-2, p, 3), HistoryError);
}

TEST(Model, NetworkRules) {
  std::vector<Tank> tanks(4);
  tanks[0] = {"V", TankKind::Virtual, 10.0};
  tanks[1] = {"D", TankKind::DiversionNode};
  tanks[2] = {"P", TankKind::Plant};
  tanks[2].v_bar = 5.0;
  tanks[2].q_out_max = 1.0;
  tanks[3] = {"R", TankKind::Real, 10.0};
  std::vector<Pipe> pipes(4);
  pipes[0] = {"g", 0, 1, 5.0, 0.0, 0, PipeControl::PumpOrGate};
  pipes[1] = {"b1", 1, 2, 5.0, 0.0, 0, PipeControl::DiversionBranch};
  pipes[2] = {"b2", 1, 3, 5.0, 0.0, 0, PipeControl::DiversionBranch};
  pipes[3] = {"u", 3, 0, 5.0, 0.0, 1, PipeControl::Uncontrolled};
  NetworkModel good(tanks, pipes);
  // the uncontrolled pipe needs beta upstream
  ASSERT_EQ(validate_network(good).size(), 1u);
  tanks[3].beta = 0.1;
  EXPECT_TRUE(validate_network(NetworkModel(tanks, pipes)).empty());
  EXPECT_EQ(NetworkModel(tanks, pipes).max_delay(), 1);

  // zero-delay loop
  pipes[3].delay_steps = 0;
  EXPECT_FALSE(validate_network(NetworkModel(tanks, pipes)).empty());
  pipes[3].delay_steps = 1;

  // plant with an outgoing pipe
  pipes.push_back({"bad", 2, 0, 1.0, 0.0, 1, PipeControl::PumpOrGate});
  EXPECT_FALSE(validate_network(NetworkModel(tanks, pipes)).empty());
  pipes.pop_back();

  // plain pipe out of a diversion node
  pipes[2].control = PipeControl::PumpOrGate;
  EXPECT_FALSE(validate_network(NetworkModel(tanks, pipes)).empty());

  tanks[1].id = "V";
  EXPECT_THROW(NetworkModel(tanks, pipes), std::invalid_argument);
}

TEST(Model, TimingAndHistory) {
  Timing t{3.0, 15.0, 160, 200, 3};
  EXPECT_EQ(t.steps_per_period(), 5);
  EXPECT_EQ(t.total_steps(), 1000);
  Timing bad{4.0, 15.0, 10, 1, 3};
  EXPECT_THROW(bad.steps_per_period(), std::invalid_argument);
}
