#pragma once

// Follower controller. Every delta it picks the predecessor message to use,
// applies the loss-mitigation modules, decides an acceleration and commits it
// for execution after its mechanical delay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include "socf/comm.hpp"
#include "socf/safety.hpp"
#include "socf/trajectory.hpp"

namespace socf {

struct LossModules {
  bool neighbor_info = true;     // 1: rebuild a lost message from its neighbors
  bool newer_neighbor = true;    //    ...from a newer message when one covers it
  bool reuse_last = true;        // 2: keep the last decision when spacing allows
  bool kappa_extension = true;   // 3: extend kappa under heavy loss
  bool increment_limit = true;   // 4: cap the per-cycle acceleration increase
  double reuse_margin = 0.2;

  bool operator==(const LossModules&) const = default;
};

// How a stale PV state is projected to t1. `conservative` assumes a hard
// brake from t_K; `dead_reckoning` assumes constant speed over the stale
// span and exists only as a negative control.
enum class StalenessPolicy { conservative, dead_reckoning };

struct AgentOptions {
  Ablation ablation;
  DecisionMode mode = DecisionMode::paper;
  LossModules modules;
  StalenessPolicy staleness = StalenessPolicy::conservative;

  bool operator==(const AgentOptions&) const = default;
};

enum class InfoSource { cold_start, target, neighbor, reuse_last, fallback };

inline const char* to_string(InfoSource s) {
  switch (s) {
    case InfoSource::cold_start: return "cold_start";
    case InfoSource::target: return "target";
    case InfoSource::neighbor: return "neighbor";
    case InfoSource::reuse_last: return "reuse_last";
    case InfoSource::fallback: return "fallback";
  }
  return "target";
}

struct DecisionLog {
  std::int64_t index = 0;
  double t0 = 0.0;
  double accel = 0.0;
  InfoSource source = InfoSource::target;
  double staleness = 0.0;
  double kappa = 0.0;
  bool heavy_loss = false;
  bool infeasible = false;
  std::optional<DecisionInput> input;  // absent when no constraint was evaluated
};

// Message carrying the sender's motion over [t0 - history, t0 + eps + delta].
inline StatusMessage make_status_message(const VehicleSpec& spec, const Trajectory& traj,
                                         std::int64_t index, double t0, double decided_accel,
                                         double delta, double history = 0.0) {
  StatusMessage m;
  m.sender = spec.id;
  m.index = index;
  m.sent_at = t0;
  m.decided_accel = decided_accel;
  m.predicted_at = t0 + spec.mech_delay + delta;
  const VehicleState s = traj.state_at(m.predicted_at);
  m.predicted_x = s.x;
  m.predicted_v = s.v;
  m.mech_delay = spec.mech_delay;
  m.length = spec.length;
  m.accel_min = spec.accel_min;
  m.plan = traj.slice(t0 - history, m.predicted_at);
  return m;
}

class Agent {
 public:
  // `pv_initial` is the predecessor's configured static data and starting
  // front position, used until its first message arrives.
  Agent(const VehicleSpec& spec, double offset, Trajectory traj, LinkState link,
        PvStatic pv_initial, double pv_initial_x, AgentOptions opts = {})
      : spec_(spec),
        offset_(offset),
        traj_(std::move(traj)),
        link_(std::move(link)),
        pv_cfg_(pv_initial),
        pv_initial_x_(pv_initial_x),
        opts_(opts) {
    // Committed acceleration is zero until the first decision executes.
    traj_.append_until(0.0, offset_ + spec_.mech_delay);
  }

  const VehicleSpec& spec() const { return spec_; }
  double offset() const { return offset_; }
  double delta() const { return link_.config().delta; }
  double time_of(std::int64_t j) const { return offset_ + j * delta(); }
  const Trajectory& trajectory() const { return traj_; }
  const LinkState& link() const { return link_; }
  LinkState& link() { return link_; }
  double last_accel() const { return last_accel_; }
  const AgentOptions& options() const { return opts_; }

  DecisionLog decision_tick(std::int64_t j) {
    const double d = delta();
    const double t0 = time_of(j);
    const double t1 = t0 + spec_.mech_delay + d;
    link_.prune(t0);

    DecisionLog log;
    log.index = j;
    log.t0 = t0;
    const bool heavy = (opts_.modules.kappa_extension || opts_.modules.increment_limit) &&
                       link_.heavy_loss(t0);
    log.heavy_loss = heavy;

    const VehicleState own = traj_.state_at(t1 - d);
    DecisionInput in;
    in.fv = spec_;
    in.fv_x = own.x;
    in.fv_v = own.v;
    in.delta = d;

    double accel = 0.0;
    const auto kappa = link_.select_kappa(t0, heavy && opts_.modules.kappa_extension);
    if (!kappa) {
      fill_cold_start(in);
      log.source = InfoSource::cold_start;
      const Decision dec = decide_accel(in, opts_.ablation, opts_.mode);
      accel = dec.accel;
      log.infeasible = dec.infeasible;
      log.input = in;
    } else {
      log.kappa = kappa->seconds;
      const std::int64_t target = link_.target_sender_index(j, kappa->cycles);
      const LinkState::Received* rec = link_.delivered(target, t0);
      log.source = InfoSource::target;
      std::optional<StatusMessage> rebuilt;
      if (!rec && opts_.modules.neighbor_info) {
        log.source = InfoSource::neighbor;
        if (opts_.modules.newer_neighbor) rebuilt = rebuild_from_newer(target, t0);
        if (!rebuilt) rec = link_.older_neighbor(target, t0);
      }
      if (rec || rebuilt) {
        fill_from_message(in, rebuilt ? *rebuilt : rec->msg, t1);
        const Decision dec = decide_accel(in, opts_.ablation, opts_.mode);
        accel = dec.accel;
        log.infeasible = dec.infeasible;
        log.input = in;
      } else {
        // Needed information is missing with nothing older to lean on: use
        // the newest thing known and keep the last decision if it still fits.
        if (const LinkState::Received* any = link_.latest(t0)) {
          fill_from_message(in, any->msg, t1);
        } else {
          fill_cold_start(in);
        }
        log.input = in;
        if (opts_.modules.reuse_last && reuse_allowed(in)) {
          accel = last_accel_;
          log.source = InfoSource::reuse_last;
        } else {
          accel = fallback_accel(in);
          log.source = InfoSource::fallback;
          log.infeasible = true;
        }
      }
    }

    if (heavy && opts_.modules.increment_limit) {
      const double cap = last_accel_ + 0.1 * d * spec_.accel_max;
      accel = std::max(spec_.accel_min, std::min(accel, cap));
    }
    if (!std::isfinite(accel)) {
      throw std::runtime_error("non-finite acceleration decided by vehicle " +
                               std::to_string(spec_.id));
    }
    log.staleness = in.staleness;
    log.accel = accel;
    traj_.append_until(accel, t1);
    last_accel_ = accel;
    return log;
  }

  StatusMessage broadcast(std::int64_t j) const {
    return make_status_message(spec_, traj_, j, time_of(j), last_accel_, delta(),
                               link_.config().plan_history);
  }

 private:
  // The PV's state at the lost message's t~1 read off a newer message that
  // carries that instant. Same information age as the lost message.
  std::optional<StatusMessage> rebuild_from_newer(std::int64_t k, double now) const {
    const double t_pred = link_.sender_time(k) + pv_cfg_.mech_delay + delta();
    const LinkState::Received* r = link_.newer_covering(k, t_pred, now);
    if (!r) return std::nullopt;
    StatusMessage m = r->msg;
    const VehicleState s = evaluate_pieces(m.plan, t_pred);
    m.index = k;
    m.sent_at = link_.sender_time(k);
    m.predicted_at = t_pred;
    m.predicted_x = s.x;
    m.predicted_v = s.v;
    m.decided_accel = s.a;
    std::erase_if(m.plan, [&](const Piece& p) { return p.t_begin >= t_pred; });
    if (!m.plan.empty()) m.plan.back().t_end = std::min(m.plan.back().t_end, t_pred);
    return m;
  }

  void fill_cold_start(DecisionInput& in) const {
    in.pv = pv_cfg_;
    in.pv_x = pv_initial_x_;
    in.pv_v = 0.0;
    in.staleness = 0.0;
  }

  void fill_from_message(DecisionInput& in, const StatusMessage& m, double t1) const {
    in.pv = {m.length, m.accel_min, m.mech_delay};
    if (m.predicted_at >= t1) {
      const VehicleState s = m.state_at(t1);
      in.pv_x = s.x;
      in.pv_v = s.v;
      in.staleness = 0.0;
      return;
    }
    const double stale = t1 - m.predicted_at;
    if (opts_.staleness == StalenessPolicy::dead_reckoning) {
      in.pv_x = m.predicted_x + m.predicted_v * stale;
      in.pv_v = m.predicted_v;
      in.staleness = 0.0;
      return;
    }
    in.pv_x = m.predicted_x;
    in.pv_v = m.predicted_v;
    in.staleness = stale;
  }

  bool reuse_allowed(const DecisionInput& in) const {
    const FeasibleSet fs = feasible_set(in);
    if (!is_feasible(fs, last_accel_, opts_.ablation)) return false;
    const double bound = fs.lambda_t1;
    return last_accel_ <= bound - opts_.modules.reuse_margin * std::abs(bound);
  }

  VehicleSpec spec_;
  double offset_ = 0.0;
  Trajectory traj_;
  LinkState link_;
  PvStatic pv_cfg_;
  double pv_initial_x_ = 0.0;
  AgentOptions opts_;
  double last_accel_ = 0.0;
};

}  // namespace socf
