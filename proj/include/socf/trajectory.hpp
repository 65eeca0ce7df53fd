#pragma once

// A vehicle's realized (or committed) motion as contiguous constant-
// acceleration pieces. Pieces are split where speed reaches 0 or the cap,
// so every piece is a single exact quadratic in time.

#include <algorithm>
#include <span>
#include <vector>

#include "socf/kinematics.hpp"

namespace socf {

struct Piece {
  double t_begin = 0.0;
  double t_end = 0.0;
  double x0 = 0.0;     // position at t_begin
  double v0 = 0.0;     // speed at t_begin
  double accel = 0.0;  // acceleration realized on this piece
  double commanded = 0.0;  // acceleration that was decided for this interval

  double x_at(double t) const {
    const double dt = t - t_begin;
    return x0 + v0 * dt + 0.5 * accel * dt * dt;
  }
  double v_at(double t) const { return v0 + accel * (t - t_begin); }

  bool operator==(const Piece&) const = default;
};

class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, double x0, double v0, double speed_max = kInf)
      : start_{t0, x0, v0, 0.0}, speed_max_(speed_max) {}

  const VehicleState& start() const { return start_; }
  double speed_max() const { return speed_max_; }
  double end_time() const { return pieces_.empty() ? start_.t : pieces_.back().t_end; }
  std::span<const Piece> pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }

  VehicleState end_state() const {
    if (pieces_.empty()) return start_;
    const Piece& p = pieces_.back();
    return {p.t_end, p.x_at(p.t_end), clamp_v(p.v_at(p.t_end)), p.accel};
  }

  // Appends `accel` over (end_time, end_time + dt], splitting at speed bounds.
  void append(double accel, double dt) {
    if (dt < 0.0) throw ContractViolation("Trajectory::append: negative dt");
    VehicleState s = end_state();
    const double t_stop = s.t + dt;
    while (s.t < t_stop) {
      double a = accel;
      double t_end = t_stop;
      double v_next = 0.0;
      const double rest = t_stop - s.t;
      if ((a < 0.0 && s.v <= 0.0) || (a > 0.0 && s.v >= speed_max_)) {
        a = 0.0;
        v_next = s.v;
      } else if (a < 0.0 && s.v + a * rest < 0.0) {
        t_end = std::min(t_stop, s.t + s.v / -a);
        v_next = 0.0;
      } else if (a > 0.0 && s.v + a * rest > speed_max_) {
        t_end = std::min(t_stop, s.t + (speed_max_ - s.v) / a);
        v_next = speed_max_;
      } else {
        v_next = clamp_v(s.v + a * rest);
      }
      if (t_end > s.t) {
        Piece p{s.t, t_end, s.x, s.v, a, accel};
        pieces_.push_back(p);
        s.x = p.x_at(t_end);
      }
      s.v = v_next;
      s.t = t_end;
    }
  }

  // Appends `accel` up to absolute time t_end (no-op if already there).
  void append_until(double accel, double t_end) {
    const double dt = t_end - end_time();
    if (dt > 0.0) append(accel, dt);
  }

  // Index of the piece covering t, using (t_begin, t_end] semantics.
  std::size_t piece_index(double t) const {
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t,
                               [](const Piece& p, double tt) { return p.t_end < tt; });
    if (it == pieces_.end()) return pieces_.size() - 1;
    return static_cast<std::size_t>(it - pieces_.begin());
  }

  // State at t. Outside the covered span the motion continues at constant
  // speed from the nearest end.
  VehicleState state_at(double t) const {
    if (pieces_.empty() || t <= pieces_.front().t_begin) {
      return {t, start_.x + start_.v * (t - start_.t), start_.v, 0.0};
    }
    if (t > pieces_.back().t_end) {
      VehicleState e = end_state();
      return {t, e.x + e.v * (t - e.t), e.v, 0.0};
    }
    const Piece& p = pieces_[piece_index(t)];
    return {t, p.x_at(t), clamp_v(p.v_at(t)), p.accel};
  }

  // Pieces overlapping [t_from, t_to], trimmed to that window.
  std::vector<Piece> slice(double t_from, double t_to) const {
    std::vector<Piece> out;
    for (const Piece& p : pieces_) {
      if (p.t_end <= t_from || p.t_begin >= t_to) continue;
      Piece q = p;
      if (q.t_begin < t_from) {
        q.x0 = p.x_at(t_from);
        q.v0 = p.v_at(t_from);
        q.t_begin = t_from;
      }
      q.t_end = std::min(q.t_end, t_to);
      out.push_back(q);
    }
    return out;
  }

  bool operator==(const Trajectory&) const = default;

 private:
  double clamp_v(double v) const { return std::clamp(v, 0.0, speed_max_); }

  VehicleState start_{};
  double speed_max_ = kInf;
  std::vector<Piece> pieces_;
};

// Evaluates a trimmed piece list (e.g. a message plan) at t.
inline VehicleState evaluate_pieces(std::span<const Piece> pieces, double t) {
  if (pieces.empty()) return {t, 0.0, 0.0, 0.0};
  if (t <= pieces.front().t_begin) {
    const Piece& p = pieces.front();
    return {t, p.x0, p.v0, p.commanded};
  }
  for (const Piece& p : pieces) {
    if (t <= p.t_end) return {t, p.x_at(t), std::max(0.0, p.v_at(t)), p.commanded};
  }
  const Piece& p = pieces.back();
  return {t, p.x_at(p.t_end), std::max(0.0, p.v_at(p.t_end)), p.commanded};
}

}  // namespace socf
