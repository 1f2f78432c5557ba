#include <gtest/gtest.h>

#include <cmath>

#include "sewerflow/discretize.hpp"
#include "sewerflow/socp.hpp"
#include "support.hpp"

using namespace sewerflow;
using testing_support::Builder;

namespace {

// Virtual tank pumped into one plant.
Builder drain_builder(double v0, double inflow) {
  Builder b;
  b.timing = {1.0, 1.0, 4, 10, 1};
  const auto v = b.tank("V", TankKind::Virtual, 100.0, v0);
  const auto p = b.plant("P", 1000.0, 10.0);
  b.pipe(v, p, PipeControl::PumpOrGate, 2.0);
  b.inflow("V", {inflow}, {0.0});
  return b;
}

// Same network with a substrate and a biomass species and one Contois reaction.
Builder bio_builder() {
  Builder b = drain_builder(20.0, 1.0);
  b.species = {"S", "X"};
  b.inflows[0].conc = {0.3, 0.0};
  b.c0[1] = {0.1, 0.5};
  b.c0[0] = {0.3, 0.0};
  PlantBiology bio;
  bio.species = b.species;
  bio.laws = {KineticLaw::contois(0.02, 0.5, 0, 1)};
  bio.kappa = {{-1.0}, {0.6}};
  bio.biomass_index = 1;
  b.biology = {bio};
  return b;
}

struct Fixture {
  Scenario sc;
  Trajectory traj;
  Observation obs;
  PlantEstimate est;
};

Fixture prepare(const Scenario& sc) {
  Fixture s{sc, run(sc, {sc.initial.pipe_setpoint}, 2), {}, {}};
  s.traj.period_setpoints.assign(3, sc.initial.pipe_setpoint);
  s.obs = observe(sc, s.traj, 0);
  Simulator truth(sc);
  s.est = estimate_plant_concentrations(sc, truth, s.traj, s.obs, {}, sc.tau_ic(),
                                        sc.timing.horizon_steps + 1);
  return s;
}

Solution solve(const ConicProgram& prog) {
  ClarabelOptions o;
  o.tol = 1e-9;
  return ClarabelAdapter(o).solve(prog);
}

}  // namespace

TEST(Socp, FProgramHandCounts) {
  Builder b = drain_builder(20.0, 1.0);
  const Fixture s = prepare(b.build());
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  // tau = 3, H = 4: history rows hold Q, Q_out, V; window rows add CSO and QF.
  EXPECT_EQ(tp.layout.tau_ic, 3);
  EXPECT_EQ(tp.program.variable_count(), 3u * 3u + 5u * 5u);
  EXPECT_EQ(tp.program.count_rows(RowTag::InitialCondition), 9u);
  EXPECT_EQ(tp.program.count_rows(RowTag::PlantBalance), 5u);
  EXPECT_EQ(tp.program.count_rows(RowTag::VolumeDynamics), 5u);
  EXPECT_EQ(tp.program.count_rows(RowTag::Hold), 0u);
  // 19 equalities + per window row: Q 2, Q_out 2, CSO 1, V 2, QF 1 bounds
  EXPECT_EQ(tp.program.constraint_count(), 19u + 5u * 8u);
}

TEST(Socp, FcProgramAddsConcentrationMachinery) {
  const Fixture s = prepare(bio_builder().build());
  const TrajProgram f = build_traj_f(s.sc, s.obs);
  const TrajProgram fc = build_traj_fc(s.sc, s.obs, s.est);
  // xi history 2 x 3, window xi 2 + T 1 per row, one outflow-sum variable
  EXPECT_EQ(fc.program.variable_count(), f.program.variable_count() + 6u + 5u * 3u + 1u);
  EXPECT_EQ(fc.program.count_rows(RowTag::PlantDynamics), 10u);
  EXPECT_EQ(fc.program.count_rows(RowTag::Kinetics), 5u);
  EXPECT_EQ(fc.program.count_rows(RowTag::InitialCondition), 9u + 6u);
  EXPECT_EQ(fc.program.count_rows(RowTag::Hinge), 0u);
}

TEST(Socp, HoldRowsPerControlPeriod) {
  Builder b = drain_builder(20.0, 1.0);
  b.timing = {1.0, 5.0, 9, 4, 1};
  const Fixture s = prepare(b.build());
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  // steps 1..10; blocks start at steps 5 and 10
  EXPECT_EQ(tp.layout.first_free, 4);
  EXPECT_EQ(tp.program.count_rows(RowTag::Hold), 8u);
}

// A held 2 m3/min command against 1 m3 of storage: the tank runs dry and
// the rest of the command goes undelivered, as in the simulator.
TEST(Socp, HeldCommandOnEmptyTankIsShortfall) {
  Builder b = drain_builder(1.0, 0.0);
  b.timing = {1.0, 5.0, 9, 4, 1};
  b.setpoint[0] = 2.0;
  Scenario sc = b.build();
  sc.weights.flooding = 10.0;
  const Fixture s = prepare(sc);
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  ASSERT_NE(tp.layout.shortfall[0], VariableLayout::kNone);
  const Solution sol = solve(tp.program);
  ASSERT_TRUE(usable(sol.status)) << to_string(sol.status);
  const double held = sol.x[tp.layout.q[tp.layout.row(0)][0]];
  EXPECT_NEAR(held + sol.x[tp.layout.shortfall[0]], 2.0, 1e-6);
  EXPECT_LT(held, 2.0);
  for (int l = 0; l < tp.layout.first_free; ++l)
    EXPECT_GE(sol.x[tp.layout.volume[tp.layout.row(l)][0]], -1e-7);
}

// A volume-limited pump keeps its 20 m3/min command through the period
// but delivers at most beta V; the difference is the cap gap.
TEST(Socp, VolumeLimitedPumpHoldsItsCommand) {
  Builder b;
  b.timing = {1.0, 5.0, 9, 4, 1};
  const auto r = b.tank("R", TankKind::Real, 500.0, 100.0);
  b.tanks[r].beta = 0.1;
  const auto p = b.plant("P", 1000.0, 50.0);
  b.pipe(r, p, PipeControl::VolumeLimited, 40.0, 0, 20.0);
  Scenario sc = b.build();
  sc.weights.flooding = 10.0;
  const Fixture s = prepare(sc);
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  const Solution sol = solve(tp.program);
  ASSERT_TRUE(usable(sol.status)) << to_string(sol.status);
  const VariableLayout& L = tp.layout;
  for (int l = 0; l < L.first_free; ++l) {
    const std::size_t row = L.row(l);
    const double q = sol.x[L.q[row][0]];
    EXPECT_NEAR(q + sol.x[L.cap_gap[row][0]], 20.0, 1e-6) << l;
    EXPECT_LE(q, 0.1 * sol.x[L.volume[row][0]] + 1e-6) << l;
  }
  EXPECT_GT(sol.x[L.cap_gap[L.row(0)][0]], 5.0);
}

TEST(Socp, ZeroScenarioHasZeroOptimum) {
  Builder b = drain_builder(0.0, 0.0);
  b.setpoint[0] = 0.0;
  Scenario sc = b.build();
  sc.weights.total_volume = 1.0;
  sc.weights.flooding = 10.0;
  sc.weights.slope = 1.0;
  const Fixture s = prepare(sc);
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  const Solution sol = solve(tp.program);
  ASSERT_TRUE(usable(sol.status));
  EXPECT_NEAR(sol.objective, 0.0, 1e-7);
  for (double x : sol.x) EXPECT_NEAR(x, 0.0, 1e-6);
}

// Minimizing stored volume with a 2 m3/min pump drains at full rate; the
// trapezoid stencil gives V(l) = V(l-1) - (Q(l) + Q(l-1)) / 2 with Q(-1) = 0.
TEST(Socp, DrainAtMaximumRate) {
  Builder b = drain_builder(20.0, 0.0);
  Scenario sc = b.build();
  sc.weights.total_volume = 1.0;
  sc.weights.flooding = 10.0;
  const Fixture s = prepare(sc);
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  const Solution sol = solve(tp.program);
  ASSERT_TRUE(usable(sol.status));
  const double expected_v[] = {19.0, 17.0, 15.0, 13.0, 11.0};
  for (int l = 0; l <= 4; ++l) {
    const std::size_t r = tp.layout.row(l);
    EXPECT_NEAR(sol.x[tp.layout.q[r][0]], 2.0, 1e-6);
    EXPECT_NEAR(sol.x[tp.layout.volume[r][0]], expected_v[l], 1e-6);
  }
  EXPECT_NEAR(sol.objective, 75.0, 1e-5);
  EXPECT_LT(tp.program.max_violation(sol.x), 1e-6);

  const ExtractedControls c = extract_controls(sol, tp.layout, s.sc);
  EXPECT_NEAR(c.setpoints[0], 2.0, 1e-6);
  ASSERT_EQ(c.nominal.size(), 5u);
}

TEST(Socp, ExtractRejectsFailedSolve) {
  const Fixture s = prepare(drain_builder(20.0, 0.0).build());
  const TrajProgram tp = build_traj_f(s.sc, s.obs);
  Solution bad;
  bad.status = SolveStatus::Infeasible;
  EXPECT_THROW(extract_controls(bad, tp.layout, s.sc), std::runtime_error);
}

// With every concentration-dependent weight at zero the FC program only adds
// feasible machinery; its optimum equals the F program's.
TEST(Socp, FcWithoutConcentrationWeightsMatchesF) {
  Scenario sc = bio_builder().build();
  sc.weights.pollutant_release.assign(2, 0.0);
  sc.weights.total_volume = 1.0;
  sc.weights.flooding = 10.0;
  sc.weights.slope = 0.5;
  sc.weights.curvature = 0.1;
  const Fixture s = prepare(sc);
  const Solution f = solve(build_traj_f(s.sc, s.obs).program);
  const Solution fc = solve(build_traj_fc(s.sc, s.obs, s.est).program);
  ASSERT_TRUE(usable(f.status));
  ASSERT_TRUE(usable(fc.status));
  EXPECT_NEAR(fc.objective, f.objective, 1e-6 * std::max(1.0, std::abs(f.objective)));
}

TEST(Socp, FcSolutionSatisfiesStencilsAndIsExact) {
  Scenario sc = bio_builder().build();
  sc.weights.total_volume = 0.01;
  sc.weights.flooding = 10.0;
  sc.weights.microbial_growth = {1.0};
  const Fixture s = prepare(sc);
  const TrajProgram tp = build_traj_fc(s.sc, s.obs, s.est);
  const Solution sol = solve(tp.program);
  ASSERT_TRUE(usable(sol.status));
  const VariableLayout& L = tp.layout;
  const double tol = 1e-9;
  EXPECT_LT(tp.program.max_violation(sol.x), 1e-6);

  const AMScheme am = am_coefficients(sc.timing.am_order);
  std::vector<double> v, dv, xi, dxi;
  for (int l = -L.tau_ic; l <= L.horizon; ++l) {
    const std::size_t r = L.row(l);
    const double q = sol.x[L.q[r][0]];
    const double qf = l >= 0 ? sol.x[L.flood[r][0]] : 0.0;
    v.push_back(sol.x[L.volume[r][0]]);
    dv.push_back(1.0 - q - qf);
    const double x_s = sol.x[L.xi[r][0][0]];
    const double t = l >= 0 ? sol.x[L.rate[r][0][0]] : tp.t_ic[r][0];
    xi.push_back(x_s);
    dxi.push_back(-t + sol.x[L.q_out[r][0]] / 1000.0 * (s.est.inlet[r][0][0] - s.est.conc[r][0][0]));
  }
  for (std::size_t n = static_cast<std::size_t>(L.tau_ic); n < v.size(); ++n) {
    EXPECT_LT(std::abs(stencil_residual(am, v, dv, 1.0, n)), 10 * tol * 100.0);
    EXPECT_LT(std::abs(stencil_residual(am, xi, dxi, 1.0, n)), 10 * tol);
  }

  const ExactnessAudit a = audit_exactness(sol, L, s.sc);
  ASSERT_EQ(a.count, 5u);
  EXPECT_GE(static_cast<double>(a.below_1e4) / a.count, 0.95);
  EXPECT_LE(a.worst_excess, 10 * tol);
}
