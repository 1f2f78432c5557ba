#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sewerflow/conic.hpp"

using namespace sewerflow;

// min (x-3)^2 + (y+1)^2  s.t. x + y <= 1, hand solution x = 2.5, y = -1.5.
TEST(Clarabel, ProjectionOntoHalfplane) {
  ConicProgram p;
  const auto x = p.add_variable();
  const auto y = p.add_variable();
  p.add_inequality({{{x, 1.0}, {y, 1.0}}, 1.0});
  p.add_square(1.0, LinearExpr{{{x, 1.0}}, -3.0});
  p.add_square(1.0, LinearExpr{{{y, 1.0}}, 1.0});
  ClarabelAdapter solver;
  const Solution s = solver.solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.x[x], 2.5, 1e-6);
  EXPECT_NEAR(s.x[y], -1.5, 1e-6);
  EXPECT_NEAR(s.objective, 0.5, 1e-6);
}

// max t s.t. ||(a, b)|| <= 2, a = 1, t <= b: optimum t = sqrt(3).
TEST(Clarabel, SecondOrderCone) {
  ConicProgram p;
  const auto a = p.add_variable();
  const auto b = p.add_variable();
  const auto t = p.add_variable(-10.0, 10.0);
  p.fix(a, 1.0);
  p.add_inequality({{{t, 1.0}, {b, -1.0}}, 0.0});
  ConeBlock c;
  c.head.constant = 2.0;
  c.tail = {LinearExpr{{{a, 1.0}}, 0.0}, LinearExpr{{{b, 1.0}}, 0.0}};
  p.add_cone(c);
  p.add_linear_cost(t, -1.0);
  const Solution s = ClarabelAdapter{}.solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.x[t], std::sqrt(3.0), 1e-6);
  EXPECT_LT(p.max_violation(s.x), 1e-6);
}

// Same program with mixed magnitudes, solved with and without scales.
TEST(Clarabel, ScalesDoNotChangeTheSolution) {
  auto build = [](bool scaled) {
    ConicProgram p;
    const auto v = p.add_variable(0.0, 1e5);    // volume
    const auto q = p.add_variable(0.0, 2e3);    // flow
    const auto c = p.add_variable(0.0, kInf);   // concentration
    p.add_equality({{{v, 1.0}, {q, 3.0}}, 9e4});
    p.add_inequality({{{c, 1.0}, {q, -1e-5}}, 0.0});
    p.add_square(1e-4, LinearExpr{{{q, 1.0}}, -1500.0});
    p.add_linear_cost(v, 1e-3);
    p.add_linear_cost(c, -10.0);
    if (scaled) {
      p.set_scale(v, 1e5);
      p.set_scale(q, 2e3);
      p.set_scale(c, 1e-2);
    }
    return p;
  };
  const Solution a = ClarabelAdapter{}.solve(build(false));
  const Solution b = ClarabelAdapter{}.solve(build(true));
  ASSERT_TRUE(usable(a.status));
  ASSERT_TRUE(usable(b.status));
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_NEAR(a.x[j], b.x[j], 1e-6 * std::max(1.0, std::abs(a.x[j])));
  EXPECT_NEAR(a.objective, b.objective, 1e-6 * std::abs(a.objective));
  EXPECT_THROW(build(false).set_scale(0, 0.0), std::invalid_argument);
}

TEST(Clarabel, ReportsInfeasible) {
  ConicProgram p;
  const auto x = p.add_variable(0.0, 1.0);
  p.add_equality({{{x, 1.0}}, 2.0});
  EXPECT_EQ(ClarabelAdapter{}.solve(p).status, SolveStatus::Infeasible);
}

TEST(ConicProgram, ConstraintCount) {
  ConicProgram p;
  const auto x = p.add_variable(0.0, 1.0);  // 2
  const auto y = p.add_variable(-kInf, 4.0);  // 1
  const auto z = p.add_variable();
  p.fix(z, 3.0);  // 1
  p.add_equality({{{x, 1.0}, {y, 1.0}}, 1.0});
  p.add_cone({LinearExpr{{{x, 1.0}}, 0.0}, {LinearExpr{{{y, 1.0}}, 0.0}}});
  EXPECT_EQ(p.constraint_count(), 6u);
  EXPECT_EQ(p.count_rows(RowTag::Kinetics), 1u);
}

TEST(ConicProgram, CheckRejectsDanglingVariable) {
  ConicProgram p;
  p.add_variable();
  p.add_equality({{{5, 1.0}}, 0.0});
  EXPECT_THROW(p.check(), std::logic_error);
}

TEST(ConicProgram, CbfDumpIsDeterministic) {
  auto build = [] {
    ConicProgram p;
    const auto x = p.add_variable(0.0, 2.0);
    p.add_square(2.0, LinearExpr{{{x, 1.0}}, -1.0});
    p.add_linear_cost(x, 0.5);
    std::ostringstream os;
    p.write_cbf(os);
    return os.str();
  };
  const std::string a = build();
  EXPECT_EQ(a, build());
  EXPECT_NE(a.find("QR 3"), std::string::npos);
  EXPECT_EQ(a.rfind("VER\n3", 0), 0u);
}

TEST(ClarabelOptions, EnvOverride) {
  setenv("SEWERFLOW_SOLVER_TOL", "1e-6", 1);
  EXPECT_DOUBLE_EQ(ClarabelOptions::from_env().tol, 1e-6);
  unsetenv("SEWERFLOW_SOLVER_TOL");
  EXPECT_DOUBLE_EQ(ClarabelOptions::from_env().tol, 1e-8);
}
