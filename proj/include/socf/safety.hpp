#pragma once

// Conservative hard-brake safety envelope and the acceleration decision rule.
//
// A follower (FV) decides at t0 the acceleration it executes over
// (t1 - delta, t1]. Its knowledge of the predecessor (PV) is the PV state at
// t_K <= t1; the PV is assumed to brake hard from t_K. The decision must keep
// the approach distance F(t) of the two imagined hard brakes below the
// available spacing for every t in [t1, t_s]. F peaks either at t1, at t_s or
// at an interior point t_L, which yields three acceleration domains:
//   start-point  (t = t1)  -> an upper bound
//   end-point    (t = t_s) -> a quadratic interval
//   midway-point (t = t_L) -> a quadratic interval, active only when t_L exists.

#include <algorithm>
#include <cmath>

#include "socf/kinematics.hpp"

namespace socf {

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  static Interval all() { return {-kInf, kInf}; }
  static Interval none() { return {kInf, -kInf}; }

  bool empty() const { return !(lo <= hi); }
  bool contains(double a, double tol = kEps) const {
    return !empty() && a >= lo - tol && a <= hi + tol;
  }
  Interval intersect(const Interval& o) const {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  bool operator==(const Interval&) const = default;
};

// Static PV parameters known to the follower (broadcast or configured).
struct PvStatic {
  double length = 4.5;
  double accel_min = -1.5;
  double mech_delay = 0.07;

  static PvStatic of(const VehicleSpec& s) { return {s.length, s.accel_min, s.mech_delay}; }
  bool operator==(const PvStatic&) const = default;
};

struct DecisionInput {
  VehicleSpec fv;
  PvStatic pv;
  double fv_x = 0.0;       // FV position at t1 - delta
  double fv_v = 0.0;       // FV speed at t1 - delta
  double pv_x = 0.0;       // PV position at t_K
  double pv_v = 0.0;       // PV speed at t_K
  double staleness = 0.0;  // t1 - t_K
  double delta = 0.1;

  // Time the PV can spend braking between t_K and t1.
  double theta() const { return std::min(staleness, pv_v / -pv.accel_min); }
  // Conservative PV speed at t1 (hard brake since t_K).
  double pv_speed_t1() const { return std::max(0.0, pv_v + pv.accel_min * theta()); }
  // Conservative PV position at t1.
  double pv_position_t1() const {
    const double th = theta();
    return pv_x + pv_v * th + 0.5 * pv.accel_min * th * th;
  }
  // Spacing left at t1 when the FV holds speed, after length, stop gap and
  // the speed-proportional elastic buffer.
  double room() const {
    return pv_position_t1() - fv_x - (fv.gamma + 1.0) * fv_v * delta - pv.length -
           fv.stop_gap;
  }
};

struct Ablation {
  bool drop_start = false;
  bool drop_end = false;
  bool drop_mid = false;

  bool any() const { return drop_start || drop_end || drop_mid; }
  bool operator==(const Ablation&) const = default;
};

enum class DecisionMode { paper, exact_max };

inline double elastic_gap(double gamma, double delta, double fv_speed_t1, double stop_gap) {
  return gamma * delta * fv_speed_t1 + stop_gap;
}

// Distance the PV is credited between t_K and t1 under a hard brake.
inline double pv_brake_credit(const DecisionInput& in) {
  return hard_brake(in.pv_v, in.pv.accel_min, in.staleness).distance;
}

// F(t1 + t_rel): FV hard-brake distance from t1 minus the PV hard-brake
// distance over the same span, the PV having started braking at t_K.
inline double conservative_approach_distance(const DecisionInput& in, double fv_accel,
                                             double t_rel) {
  const double v1 = std::max(0.0, in.fv_v + fv_accel * in.delta);
  const double y_fv = hard_brake(v1, in.fv.accel_min, t_rel).distance;
  const double y_pv_total = hard_brake(in.pv_v, in.pv.accel_min, in.staleness + t_rel).distance;
  return y_fv - (y_pv_total - pv_brake_credit(in));
}

// Maximum of F over t >= t1 from its three candidate instants: the start of
// the brake, the point where both speeds match while both still move, and
// the moment both have stopped.
inline double max_approach_distance(const DecisionInput& in, double fv_accel) {
  const double v1 = std::max(0.0, in.fv_v + fv_accel * in.delta);
  const double vp1 = in.pv_speed_t1();
  const double b_fv = in.fv.accel_min;
  const double b_pv = in.pv.accel_min;
  const double t_fv = v1 / -b_fv;
  const double t_pv = vp1 / -b_pv;
  double best = std::max(0.0, conservative_approach_distance(in, fv_accel, std::max(t_fv, t_pv)));
  if (std::abs(b_fv - b_pv) > 1e-12) {
    const double t_l = (vp1 - v1) / (b_fv - b_pv);
    if (t_l > 0.0 && t_l < std::min(t_fv, t_pv))
      best = std::max(best, conservative_approach_distance(in, fv_accel, t_l));
  }
  return best;
}

// Acceleration and speed bounds over the decision interval.
inline Interval domain_basic(const DecisionInput& in) {
  const double d = in.delta;
  return {std::max(in.fv.accel_min, -in.fv_v / d),
          std::min(in.fv.accel_max, (in.fv.speed_max - in.fv_v) / d)};
}

// Upper bound from the spacing requirement at the moment a brake would start.
inline double domain_start_point(const DecisionInput& in) {
  const double d = in.delta;
  return 2.0 / ((2.0 * in.fv.gamma + 1.0) * d * d) * in.room();
}

struct EndPointDomain {
  Interval interval = Interval::none();
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// Spacing requirement once both imagined brakes have come to rest.
inline EndPointDomain domain_end_point(const DecisionInput& in) {
  const double d = in.delta;
  const double b_fv = in.fv.accel_min;
  const double b_pv = in.pv.accel_min;
  const double v0 = in.fv_v;
  const double vp1 = in.pv_v + b_pv * in.theta();
  EndPointDomain out;
  out.alpha1 = 2.0 * v0 / d - (2.0 * in.fv.gamma + 1.0) * b_fv;
  out.alpha2 = v0 * v0 / (d * d) - b_fv / (b_pv * d * d) * vp1 * vp1 +
               2.0 * b_fv / (d * d) * in.room();
  const double disc = out.alpha1 * out.alpha1 - 4.0 * out.alpha2;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    out.interval = {(-out.alpha1 - r) / 2.0, (-out.alpha1 + r) / 2.0};
  }
  return out;
}

struct MidwayDomain {
  Interval existence = Interval::none();  // open: t_L exists strictly inside
  Interval quadratic = Interval::none();  // spacing requirement at t_L
  Interval constraint = Interval::none(); // existence intersected with quadratic
  double beta1 = 0.0;
  double beta2 = 0.0;

  // Open interval: on its ends t_L coincides with t1 or t_s, which the
  // start- and end-point constraints already cover.
  bool applies(double a) const { return existence.lo < a && a < existence.hi; }
};

// Spacing requirement at the interior maximum of F, which exists only when
// the FV is faster at t1 yet stops first.
inline MidwayDomain domain_midway(const DecisionInput& in) {
  MidwayDomain out;
  const double d = in.delta;
  const double b_fv = in.fv.accel_min;
  const double b_pv = in.pv.accel_min;
  const double v0 = in.fv_v;
  const double vp1 = in.pv_v + b_pv * in.theta();
  if (std::abs(b_fv - b_pv) <= 1e-12) return out;
  const double lo = (vp1 - v0) / d;
  const double hi = ((b_fv / b_pv) * vp1 - v0) / d;
  if (lo < hi) out.existence = {lo, hi};

  out.beta1 = 2.0 / d * (v0 - vp1) + (2.0 * in.fv.gamma + 1.0) * (b_pv - b_fv);
  out.beta2 = (vp1 - v0) * (vp1 - v0) / (d * d) - 2.0 * (b_pv - b_fv) / (d * d) * in.room();
  const double disc = out.beta1 * out.beta1 - 4.0 * out.beta2;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    out.quadratic = {(-out.beta1 - r) / 2.0, (-out.beta1 + r) / 2.0};
  }
  if (!out.existence.empty()) out.constraint = out.existence.intersect(out.quadratic);
  return out;
}

struct FeasibleSet {
  Interval lambda0;
  double lambda_t1 = kInf;  // upper bound
  Interval lambda_ts;
  Interval lambda_tilde;    // open
  Interval lambda_tL;
  double alpha1 = 0.0, alpha2 = 0.0, beta1 = 0.0, beta2 = 0.0;
  MidwayDomain midway;
};

inline FeasibleSet feasible_set(const DecisionInput& in) {
  FeasibleSet fs;
  fs.lambda0 = domain_basic(in);
  fs.lambda_t1 = domain_start_point(in);
  const EndPointDomain end = domain_end_point(in);
  fs.lambda_ts = end.interval;
  fs.alpha1 = end.alpha1;
  fs.alpha2 = end.alpha2;
  fs.midway = domain_midway(in);
  fs.lambda_tilde = fs.midway.existence;
  fs.lambda_tL = fs.midway.constraint;
  fs.beta1 = fs.midway.beta1;
  fs.beta2 = fs.midway.beta2;
  return fs;
}

// Lambda0 intersected with the start- and end-point domains that are kept.
inline Interval base_domain(const FeasibleSet& fs, const Ablation& ab) {
  Interval base = fs.lambda0;
  if (!ab.drop_start) base = base.intersect({-kInf, fs.lambda_t1});
  if (!ab.drop_end) base = base.intersect(fs.lambda_ts);
  return base;
}

// Pointwise membership of `a` in the (possibly ablated) feasible set.
inline bool is_feasible(const FeasibleSet& fs, double a, const Ablation& ab = {},
                        double tol = kEps) {
  if (!base_domain(fs, ab).contains(a, tol)) return false;
  if (ab.drop_mid || !fs.midway.applies(a)) return true;
  return fs.midway.quadratic.contains(a, tol);
}

inline bool is_feasible(const DecisionInput& in, double a, const Ablation& ab = {},
                        double tol = kEps) {
  return is_feasible(feasible_set(in), a, ab, tol);
}

struct Decision {
  double accel = 0.0;
  bool infeasible = false;     // hard-brake fallback fired
  bool midway_applied = false; // a_a fell inside the t_L existence region
  double a_a = 0.0;
};

// Hardest brake. Not clipped to -v/delta: stopping exactly at t1 would brake
// softer than the envelope assumes. The trajectory holds the speed at zero.
inline double fallback_accel(const DecisionInput& in) { return in.fv.accel_min; }

// Largest acceleration in the feasible set. `paper` mode follows the
// two-stage rule (a_a, then a_b when t_L exists at a_a); `exact_max`
// returns the true maximum of the piecewise set.
inline Decision decide_accel(const DecisionInput& in, const Ablation& ab = {},
                             DecisionMode mode = DecisionMode::paper) {
  const FeasibleSet fs = feasible_set(in);
  const Interval base = base_domain(fs, ab);
  Decision out;
  if (base.empty()) {
    out.accel = fallback_accel(in);
    out.infeasible = true;
    return out;
  }
  out.a_a = base.hi;
  if (ab.drop_mid || !fs.midway.applies(out.a_a)) {
    out.accel = out.a_a;
    return out;
  }
  out.midway_applied = true;

  if (mode == DecisionMode::paper) {
    Interval tilde_closed = fs.midway.existence;
    tilde_closed.lo -= kEps;
    tilde_closed.hi += kEps;
    const Interval both = base.intersect(tilde_closed).intersect(fs.midway.quadratic);
    if (both.empty()) {
      out.accel = fallback_accel(in);
      out.infeasible = true;
    } else {
      out.accel = both.hi;
    }
    return out;
  }

  double best = -kInf;
  const double candidates[] = {base.hi, std::min(base.hi, fs.midway.quadratic.hi),
                               fs.midway.existence.lo - 2.0 * kEps};
  for (double c : candidates) {
    if (c > best && c <= base.hi && is_feasible(fs, c, ab)) best = c;
  }
  if (best == -kInf) {
    out.accel = fallback_accel(in);
    out.infeasible = true;
  } else {
    out.accel = best;
  }
  return out;
}

// Steady-following geometry used by the gap maps and headway analyses: the
// FV sits at the origin at t1 - delta with speed v_fv, the PV moves at
// constant speed v_pv with bumper gap `gap` at that instant, and the FV's
// knowledge of the PV is `staleness` old at t1.
inline DecisionInput steady_input(const VehicleSpec& fv, const PvStatic& pv, double v_fv,
                                  double v_pv, double staleness, double gap, double delta) {
  DecisionInput in;
  in.fv = fv;
  in.fv.speed_max = std::max(fv.speed_max, v_fv);
  in.pv = pv;
  in.fv_x = 0.0;
  in.fv_v = v_fv;
  in.pv_v = v_pv;
  in.pv_x = gap + pv.length + v_pv * (delta - staleness);
  in.staleness = staleness;
  in.delta = delta;
  return in;
}

// Smallest bumper gap at which the FV may hold its speed (a = 0 feasible).
// Feasibility is monotone in the gap; solved by bisection to 1e-4 m.
inline double min_feasible_gap(const VehicleSpec& fv, const PvStatic& pv, double v_fv,
                               double v_pv, double staleness, const Ablation& ab = {},
                               double delta = 0.1) {
  auto ok = [&](double g) {
    return is_feasible(steady_input(fv, pv, v_fv, v_pv, staleness, g, delta), 0.0, ab);
  };
  if (ok(0.0)) return 0.0;
  double hi = 10.0 * (v_fv * v_fv / (-2.0 * fv.accel_min) + v_fv * (staleness + delta) +
                      pv.length + fv.stop_gap);
  hi = std::max(hi, 1.0);
  for (int i = 0; !ok(hi); ++i) {
    if (i == 60) throw ContractViolation("min_feasible_gap: no feasible gap found");
    hi *= 2.0;
  }
  double lo = 0.0;
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Extra gap a full constraint set demands over an ablated one.
inline double additional_gap(const VehicleSpec& fv, const PvStatic& pv, double v_fv,
                             double v_pv, double staleness, const Ablation& dropped,
                             double delta = 0.1) {
  return min_feasible_gap(fv, pv, v_fv, v_pv, staleness, {}, delta) -
         min_feasible_gap(fv, pv, v_fv, v_pv, staleness, dropped, delta);
}

}  // namespace socf
