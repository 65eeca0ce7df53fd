#pragma once

// Scripted platoon leader. It decides on the same discrete grid as the
// followers, but its accelerations come from a profile instead of the
// car-following rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <variant>
#include <vector>

#include "socf/agent.hpp"
#include "socf/kinematics.hpp"
#include "socf/trajectory.hpp"

namespace socf {

// accel <= 0 means "use the leader's accel_max".
struct ConstantAccel {
  double accel = 0.2;
  double v_cap = kInf;
  bool operator==(const ConstantAccel&) const = default;
};

struct AccelCruiseBrake {
  double accel = 0.0;
  double v_max = 8.33;
  double brake_at = 60.0;
  bool operator==(const AccelCruiseBrake&) const = default;
};

// Reach `cruise`, run `periods` sine periods of acceleration starting at
// `fluct_start`, hold cruise again, then brake hard at `brake_at`.
struct Fluctuating {
  double accel = 0.0;
  double cruise = 9.0;
  double fluct_start = 180.0;
  double period = 20.0;
  double amplitude = 0.3;
  int periods = 3;
  double brake_at = 300.0;
  bool operator==(const Fluctuating&) const = default;
};

// Explicit piecewise-constant schedule: (from time, accel) steps.
struct Schedule {
  std::vector<std::pair<double, double>> steps;
  bool operator==(const Schedule&) const = default;
};

using LeaderProfile = std::variant<ConstantAccel, AccelCruiseBrake, Fluctuating, Schedule>;

namespace detail {

inline double toward(double v, double target, double up, double down, double delta) {
  return std::clamp((target - v) / delta, down, up);
}

}  // namespace detail

// Acceleration the profile commands for the execution interval starting at
// `t` with the leader in state `s`.
inline double profile_accel(const LeaderProfile& profile, const VehicleSpec& spec, double t,
                            const VehicleState& s, double delta) {
  const double tol = 1e-9;
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantAccel>) {
          const double a = p.accel > 0.0 ? p.accel : spec.accel_max;
          if (!std::isfinite(p.v_cap)) return a;
          return detail::toward(s.v, p.v_cap, a, 0.0, delta);
        } else if constexpr (std::is_same_v<P, AccelCruiseBrake>) {
          if (t >= p.brake_at - tol) return spec.accel_min;
          const double a = p.accel > 0.0 ? p.accel : spec.accel_max;
          return detail::toward(s.v, p.v_max, a, spec.accel_min, delta);
        } else if constexpr (std::is_same_v<P, Fluctuating>) {
          if (t >= p.brake_at - tol) return spec.accel_min;
          const double a = p.accel > 0.0 ? p.accel : spec.accel_max;
          const double end = p.fluct_start + p.periods * p.period;
          if (t >= p.fluct_start - tol && t < end - tol) {
            const double mid = t + 0.5 * delta - p.fluct_start;
            return p.amplitude * std::sin(2.0 * std::numbers::pi * mid / p.period);
          }
          return detail::toward(s.v, p.cruise, a, spec.accel_min, delta);
        } else {
          double a = 0.0;
          for (const auto& [from, acc] : p.steps) {
            if (t >= from - tol) a = acc;
          }
          return std::clamp(a, spec.accel_min, spec.accel_max);
        }
      },
      profile);
}

class Leader {
 public:
  Leader(const VehicleSpec& spec, double initial_speed, LeaderProfile profile, double delta,
         double plan_history = 0.0)
      : spec_(spec), profile_(std::move(profile)), delta_(delta), history_(plan_history) {
    // Execution windows are [k delta, (k+1) delta) from t = 0, so decisions
    // sit at k delta - eps. Normalize to an offset in [0, delta).
    double off = std::fmod(-spec.mech_delay, delta);
    if (off < 0.0) off += delta;
    if (off < 1e-9 || off > delta - 1e-9) off = 0.0;
    offset_ = off;
    traj_ = Trajectory(0.0, 0.0, initial_speed, spec.speed_max);
    first_index_ = std::llround((-offset_ - spec.mech_delay) / delta);
    // Decisions taken before t = 0 are committed up front.
    std::int64_t k = first_index_;
    for (; time_of(k) < 0.0; ++k) commit(k);
    next_index_ = k;
  }

  const VehicleSpec& spec() const { return spec_; }
  double offset() const { return offset_; }
  double time_of(std::int64_t k) const { return offset_ + k * delta_; }
  std::int64_t next_index() const { return next_index_; }
  const Trajectory& trajectory() const { return traj_; }
  const LeaderProfile& profile() const { return profile_; }

  double decision_tick(std::int64_t k) { return commit(k); }

  StatusMessage broadcast(std::int64_t k) const {
    return make_status_message(spec_, traj_, k, time_of(k), last_accel_, delta_, history_);
  }

 private:
  double commit(std::int64_t k) {
    const double t_exec = std::max(0.0, time_of(k) + spec_.mech_delay);
    const double t_end = time_of(k) + spec_.mech_delay + delta_;
    const VehicleState s = traj_.state_at(t_exec);
    const double a = profile_accel(profile_, spec_, t_exec, s, delta_);
    traj_.append_until(a, t_end);
    last_accel_ = a;
    return a;
  }

  VehicleSpec spec_;
  LeaderProfile profile_;
  double delta_ = 0.1;
  double history_ = 0.0;
  double offset_ = 0.0;
  Trajectory traj_;
  std::int64_t first_index_ = 0;
  std::int64_t next_index_ = 0;
  double last_accel_ = 0.0;
};

}  // namespace socf
