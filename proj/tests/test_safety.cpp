#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "socf/safety.hpp"

using namespace socf;

namespace {

VehicleSpec small() { return VehicleSpec::of_class(VehicleClass::small); }
VehicleSpec midsize() { return VehicleSpec::of_class(VehicleClass::midsize); }
VehicleSpec large() { return VehicleSpec::of_class(VehicleClass::large); }

// Equal small vehicles at 10 m/s, no staleness; `spacing` is the PV front
// at t_K = t1 minus the FV front at t1 - delta.
DecisionInput equal_small(double spacing) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(small());
  in.fv_x = 0.0;
  in.fv_v = 10.0;
  in.pv_x = spacing;
  in.pv_v = 10.0;
  return in;
}

}  // namespace

TEST(ApproachDistance, SymmetricVehiclesCancel) {
  DecisionInput in = equal_small(30.0);
  for (double t = 0.0; t < 10.0; t += 0.37) EXPECT_NEAR(conservative_approach_distance(in, 0.0, t), 0.0, 1e-12);
}

TEST(ApproachDistance, InteriorMaximumSmallBehindLarge) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(large());
  in.fv_v = 10.0;
  in.pv_v = 8.0;
  const double t_l = 2.0 / 0.9;
  EXPECT_NEAR(conservative_approach_distance(in, 0.0, t_l), 4.0 / 1.8, 1e-12);
  EXPECT_NEAR(max_approach_distance(in, 0.0), 4.0 / 1.8, 1e-12);
  EXPECT_NEAR(oracle::dense_hard_brake(in, 0.0).max_f, 4.0 / 1.8, 1e-6);
}

TEST(ApproachDistance, PreBrakeCredit) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(small());
  in.pv_v = 10.0;
  in.staleness = 0.2;
  EXPECT_NEAR(pv_brake_credit(in), 1.97, 1e-12);
  EXPECT_NEAR(conservative_approach_distance(in, 0.0, 0.0), 0.0, 1e-12);
  oracle::Body pv{0.0, 10.0};
  pv.run(-1.5, 0.2);
  EXPECT_NEAR(pv.x, 1.97, 1e-9);
}

TEST(DomainBasic, Examples) {
  DecisionInput in;
  in.fv = small();
  in.fv_v = 21.95;
  Interval d = domain_basic(in);
  EXPECT_NEAR(d.lo, -1.5, 1e-12);
  EXPECT_NEAR(d.hi, 0.5, 1e-9);
  in.fv_v = 0.0;
  d = domain_basic(in);
  EXPECT_EQ(d.lo, 0.0);
  EXPECT_EQ(d.hi, 1.0);
  in.fv = large();
  in.fv_v = 10.0;
  d = domain_basic(in);
  EXPECT_EQ(d.lo, -0.6);
  EXPECT_EQ(d.hi, 0.6);
}

TEST(DomainStartPoint, Examples) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(small());
  in.pv_x = 100.0;
  in.fv_x = 80.0;
  in.fv_v = 10.0;
  EXPECT_NEAR(domain_start_point(in), 154.5454545454545, 1e-9);
  // Substituting the bound back into the spacing requirement at t1 leaves
  // exactly the elastic buffer.
  const double a = domain_start_point(in);
  const double x1 = 80.0 + 10.0 * 0.1 + 0.5 * a * 0.01;
  const double v1 = 10.0 + a * 0.1;
  EXPECT_NEAR(100.0 - 4.5 - x1, 5.0 * 0.1 * v1 + 1.0, 1e-9);
  in.pv_x = 91.5;
  EXPECT_NEAR(domain_start_point(in), 0.0, 1e-12);
  in.pv_x = 1e12;
  EXPECT_GT(domain_start_point(in), 1e10);
}

TEST(DomainEndPoint, AtTheEnvelopeBoundary) {
  const DecisionInput in = equal_small(11.5);
  const EndPointDomain e = domain_end_point(in);
  EXPECT_NEAR(e.alpha1, 216.5, 1e-9);
  EXPECT_NEAR(e.alpha2, 0.0, 1e-9);
  EXPECT_NEAR(e.interval.hi, 0.0, 1e-9);
  EXPECT_GE(oracle::dense_hard_brake(in, 0.0).min_gap, 1.0 - 1e-6);
}

TEST(DomainEndPoint, WiderSpacing) {
  // 11.20, not the 5.74 quoted alongside this case; the residual of the
  // end-point requirement at the upper end is zero.
  const DecisionInput in = equal_small(20.0);
  const EndPointDomain e = domain_end_point(in);
  EXPECT_NEAR(e.interval.hi, (-216.5 + std::sqrt(216.5 * 216.5 + 4.0 * 300.0 * 8.5)) / 2.0, 1e-9);
  EXPECT_NEAR(e.interval.hi, 11.20, 0.005);
  EXPECT_NEAR(oracle::allowance(in, e.interval.hi) - oracle::dense_hard_brake(in, e.interval.hi).max_f, 0.0, 1e-6);
}

TEST(DomainEndPoint, FarPvIsInactive) {
  const EndPointDomain e = domain_end_point(equal_small(1e9));
  EXPECT_LT(e.interval.lo, -1e3);
  EXPECT_GT(e.interval.hi, 1e3);
}

TEST(DomainMidway, EqualBrakingHasNoInteriorPoint) {
  const MidwayDomain m = domain_midway(equal_small(20.0));
  EXPECT_TRUE(m.existence.empty());
  EXPECT_TRUE(m.constraint.empty());
}

TEST(DomainMidway, ExistenceRegion) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(large());
  in.fv_v = 10.0;
  in.pv_v = 8.0;
  const MidwayDomain m = domain_midway(in);
  EXPECT_NEAR(m.existence.lo, -20.0, 1e-9);
  EXPECT_NEAR(m.existence.hi, 100.0, 1e-9);
  // dF/dt at t1 is positive inside, and the FV stops first.
  for (double a : {-19.0, 0.0, 50.0, 99.0}) {
    const double v1 = 10.0 + 0.1 * a;
    EXPECT_GT(v1 - 8.0, 0.0);
    EXPECT_LT(v1 / 1.5, 8.0 / 0.6);
  }
}

TEST(DomainMidway, QuadraticCoefficients) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(large());
  in.fv_x = 0.0;
  in.fv_v = 12.0;
  in.pv_v = 8.0;
  in.pv_x = 40.0;
  const MidwayDomain m = domain_midway(in);
  EXPECT_NEAR(m.beta1, 89.9, 1e-9);
  EXPECT_NEAR(m.beta2, -1424.0, 1e-9);
  EXPECT_NEAR(m.quadratic.hi, 13.74, 0.005);
  const double a = m.quadratic.hi;
  EXPECT_NEAR(oracle::allowance(in, a) - oracle::dense_hard_brake(in, a).max_f, 0.0, 1e-6);
}

TEST(DomainMonotone, BoundsGrowWithPvPosition) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(large());
  in.fv_v = 12.0;
  in.pv_v = 8.0;
  double prev_s = -kInf, prev_e = -kInf, prev_m = -kInf;
  for (double x = 20.0; x < 200.0; x += 5.0) {
    in.pv_x = x;
    const FeasibleSet fs = feasible_set(in);
    EXPECT_GE(fs.lambda_t1, prev_s);
    if (!fs.lambda_ts.empty()) {
      EXPECT_GE(fs.lambda_ts.hi, prev_e - 1e-9);
      prev_e = fs.lambda_ts.hi;
    }
    if (!fs.midway.quadratic.empty()) {
      EXPECT_GE(fs.midway.quadratic.hi, prev_m - 1e-9);
      prev_m = fs.midway.quadratic.hi;
    }
    prev_s = fs.lambda_t1;
  }
}

TEST(DecideAccel, UnconstrainedMaximum) {
  DecisionInput in = equal_small(1e4);
  EXPECT_EQ(decide_accel(in).accel, 1.0);
}

TEST(DecideAccel, NeverNegativeAtStandstill) {
  DecisionInput in;
  in.fv = small();
  in.pv = PvStatic::of(small());
  in.fv_v = 0.0;
  in.pv_v = 5.0;
  in.pv_x = 5.5;
  const Decision d = decide_accel(in);
  EXPECT_GE(d.accel, 0.0);
}

TEST(DecideAccel, ZeroAtTheEnvelope) {
  const Decision d = decide_accel(equal_small(11.5));
  EXPECT_NEAR(d.accel, 0.0, 1e-9);
  EXPECT_FALSE(d.infeasible);
}

TEST(DecideAccel, InfeasibleFallsBackToHardBrake) {
  DecisionInput in = equal_small(2.0);
  const Decision d = decide_accel(in);
  EXPECT_TRUE(d.infeasible);
  EXPECT_EQ(d.accel, -1.5);
}

TEST(DecideAccel, ModesAgreeOutsideTheMidwayRegion) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const DecisionInput in = oracle::random_input(rng);
    const Decision p = decide_accel(in, {}, DecisionMode::paper);
    const Decision e = decide_accel(in, {}, DecisionMode::exact_max);
    if (!p.midway_applied) {
      EXPECT_EQ(p.accel, e.accel);
    }
    if (!p.infeasible && !e.infeasible) {
      EXPECT_GE(e.accel, p.accel - 1e-9);
    }
  }
}

TEST(SafetyOracle, AcceptedAccelerationsKeepTheStopGap) {
  std::mt19937_64 rng(2024);
  int accepted = 0;
  for (int i = 0; i < 20000 && accepted < 300; ++i) {
    const DecisionInput in = oracle::random_input(rng);
    const Decision d = decide_accel(in);
    if (d.infeasible) continue;
    ++accepted;
    const oracle::DenseCheck c = oracle::dense_hard_brake(in, d.accel);
    EXPECT_GE(c.min_margin, in.fv.stop_gap - 1e-6) << "case " << i;
  }
  EXPECT_EQ(accepted, 300);
}

TEST(SafetyOracle, ClosedFormMaximumMatchesDenseGrid) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const DecisionInput in = oracle::random_input(rng);
    const Interval b = domain_basic(in);
    const double a = b.lo + (b.hi - b.lo) * std::uniform_real_distribution<double>(0, 1)(rng);
    EXPECT_NEAR(max_approach_distance(in, a), oracle::dense_hard_brake(in, a).max_f, 1e-6);
  }
}

TEST(MinFeasibleGap, ZeroStalenessAtHighSpeed) {
  VehicleSpec fv = small();
  fv.gamma = 0.0;
  fv.speed_max = 40.0;
  const double v = 120.0 / 3.6;
  const double gap = min_feasible_gap(fv, PvStatic::of(small()), v, v, 0.0);
  EXPECT_NEAR((gap + 4.5) / v, 0.165, 1e-4);
}

TEST(MinFeasibleGap, StandstillNeedsTheStopGap) {
  for (auto pv : {small(), midsize(), large()})
    for (auto fv : {small(), midsize(), large()})
      EXPECT_NEAR(min_feasible_gap(fv, PvStatic::of(pv), 0.0, 0.0, 0.0), fv.stop_gap, 1e-4);
}

TEST(MinFeasibleGap, StartPointJumpAtEqualSpeeds) {
  const double add = additional_gap(small(), PvStatic::of(midsize()), 10.0, 10.0, 0.0,
                                    {true, false, false});
  EXPECT_GT(add, 0.1);
  const double full = oracle::scan_min_gap(small(), PvStatic::of(midsize()), 10.0, 10.0, 0.0, {});
  const double dropped =
      oracle::scan_min_gap(small(), PvStatic::of(midsize()), 10.0, 10.0, 0.0, {true, false, false});
  EXPECT_NEAR(add, full - dropped, 0.011);
}

TEST(MinFeasibleGap, DroppingNeverIncreasesTheGap) {
  for (double vp = 0.0; vp <= 22.0; vp += 2.75)
    for (double vf = 0.0; vf <= 22.0; vf += 2.75)
      for (Ablation ab : {Ablation{true, false, false}, Ablation{false, true, false},
                          Ablation{false, false, true}})
        EXPECT_GE(additional_gap(small(), PvStatic::of(large()), vf, vp, 0.1, ab), -1e-6);
}
