#pragma once

// Point-mass longitudinal kinematics: vehicle parameters, states, exact
// piecewise-constant-acceleration propagation and hard-brake evaluation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace socf {

inline constexpr double kEps = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class VehicleClass { small, midsize, large };

inline std::string_view to_string(VehicleClass c) {
  switch (c) {
    case VehicleClass::small: return "small";
    case VehicleClass::midsize: return "midsize";
    case VehicleClass::large: return "large";
  }
  return "small";
}

inline VehicleClass vehicle_class_from_string(std::string_view s) {
  if (s == "small") return VehicleClass::small;
  if (s == "midsize" || s == "mid") return VehicleClass::midsize;
  if (s == "large") return VehicleClass::large;
  throw ContractViolation("unknown vehicle class '" + std::string(s) + "'");
}

struct VehicleSpec {
  int id = 0;
  VehicleClass vclass = VehicleClass::small;
  double length = 4.5;       // m
  double stop_gap = 1.0;     // m
  double accel_max = 1.0;    // m/s^2
  double accel_min = -1.5;   // m/s^2, negative
  double mech_delay = 0.07;  // s
  double speed_max = 22.0;   // m/s
  double gamma = 5.0;        // elastic gap coefficient

  // Per-class defaults (length, accel bounds, mechanical delay).
  static VehicleSpec of_class(VehicleClass c, int id = 0) {
    VehicleSpec s;
    s.id = id;
    s.vclass = c;
    switch (c) {
      case VehicleClass::small:
        s.length = 4.5; s.accel_max = 1.0; s.accel_min = -1.5; s.mech_delay = 0.07;
        break;
      case VehicleClass::midsize:
        s.length = 7.5; s.accel_max = 0.9; s.accel_min = -0.9; s.mech_delay = 0.15;
        break;
      case VehicleClass::large:
        s.length = 15.0; s.accel_max = 0.6; s.accel_min = -0.6; s.mech_delay = 0.5;
        break;
    }
    return s;
  }

  // Throws ContractViolation naming the first offending field.
  void validate() const {
    if (!(accel_min < 0.0)) throw ContractViolation("accel_min must be negative");
    if (!(accel_max > 0.0)) throw ContractViolation("accel_max must be positive");
    if (!(mech_delay >= 0.0)) throw ContractViolation("mech_delay must be >= 0");
    if (!(length > 0.0)) throw ContractViolation("length must be positive");
    if (!(stop_gap >= 0.0)) throw ContractViolation("stop_gap must be >= 0");
    if (!(speed_max > 0.0)) throw ContractViolation("speed_max must be positive");
    if (!(gamma >= 0.0)) throw ContractViolation("gamma must be >= 0");
  }

  bool operator==(const VehicleSpec&) const = default;
};

struct VehicleState {
  double t = 0.0;  // s
  double x = 0.0;  // m, front bumper
  double v = 0.0;  // m/s
  double a = 0.0;  // m/s^2, currently executed

  bool operator==(const VehicleState&) const = default;
};

struct BrakeOutcome {
  double distance = 0.0;   // m
  double speed = 0.0;      // m/s at the horizon
  double stop_time = 0.0;  // s, relative
};

// Distance and speed after braking at accel_min for `horizon` seconds,
// holding zero speed once stopped.
inline BrakeOutcome hard_brake(double v0, double accel_min, double horizon) {
  const double stop_time = v0 / -accel_min;
  const double dt = std::min(horizon, stop_time);
  BrakeOutcome out;
  out.stop_time = stop_time;
  if (dt >= stop_time) {
    out.distance = v0 * v0 / (-2.0 * accel_min);
    out.speed = 0.0;
  } else {
    out.distance = v0 * dt + 0.5 * accel_min * dt * dt;
    out.speed = std::max(0.0, v0 + accel_min * dt);
  }
  return out;
}

// Exact propagation under constant `accel` for `dt`, speed held inside
// [0, speed_max]. Motion splits at a crossing and continues at the bound.
inline VehicleState advance_state(const VehicleState& s, double accel, double dt,
                                  double speed_max = kInf) {
  if (dt < 0.0) throw ContractViolation("advance_state: negative dt");
  VehicleState out = s;
  out.t = s.t + dt;
  out.a = accel;
  double tc = dt;
  double v_bound = 0.0;
  bool clamps = false;
  if (accel < 0.0 && s.v + accel * dt < 0.0) {
    tc = s.v / -accel;
    v_bound = 0.0;
    clamps = true;
  } else if (accel > 0.0 && s.v + accel * dt > speed_max) {
    tc = std::max(0.0, (speed_max - s.v) / accel);
    v_bound = speed_max;
    clamps = true;
  }
  if (!clamps) {
    out.x = s.x + s.v * dt + 0.5 * accel * dt * dt;
    out.v = s.v + accel * dt;
    return out;
  }
  const double x_c = s.x + s.v * tc + 0.5 * accel * tc * tc;
  out.x = x_c + v_bound * (dt - tc);
  out.v = v_bound;
  return out;
}

}  // namespace socf
