#pragma once

// Discrete communication between a predecessor (sender) and its follower:
// transmission delay, Bernoulli loss, the grid-quantized communication delay
// kappa, and the follower-side message buffer.

#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "socf/kinematics.hpp"
#include "socf/trajectory.hpp"

namespace socf {

struct CommConfig {
  double delta = 0.1;           // communication / decision cycle, s
  double tau_min = 0.04;        // s
  double tau_max = 0.08;        // s
  double loss_rate = 0.0;       // Bernoulli loss probability
  double decision_delay = 0.0;  // s
  int mu = 0;                   // deliberate extra cycles on top of the window max
  double kappa_window = 10.0;   // s
  double heavy_loss_threshold = 0.10;
  double heavy_loss_extension = 1.0;  // s added to kappa under heavy loss
  double buffer_retention = 30.0;     // s
  double plan_history = 1.5;          // s of past motion carried in each message

  void validate() const {
    if (!(delta > 0.0)) throw ContractViolation("comm.delta must be positive");
    if (!(tau_min >= 0.0)) throw ContractViolation("comm.tau_min must be >= 0");
    if (!(tau_max >= tau_min)) throw ContractViolation("comm.tau_max must be >= tau_min");
    if (!(loss_rate >= 0.0 && loss_rate <= 1.0))
      throw ContractViolation("comm.loss_rate must be in [0, 1]");
    if (!(decision_delay >= 0.0)) throw ContractViolation("comm.decision_delay must be >= 0");
    if (mu < 0) throw ContractViolation("comm.mu must be >= 0");
    if (!(kappa_window > 0.0)) throw ContractViolation("comm.kappa_window must be positive");
    if (!(buffer_retention > 0.0))
      throw ContractViolation("comm.buffer_retention must be positive");
    if (!(plan_history >= 0.0)) throw ContractViolation("comm.plan_history must be >= 0");
  }
  bool operator==(const CommConfig&) const = default;
};

struct StatusMessage {
  int sender = 0;
  std::int64_t index = 0;     // position on the sender's decision grid
  double sent_at = 0.0;       // t~0
  double decided_accel = 0.0;
  double predicted_at = 0.0;  // t~1 = t~0 + eps + delta
  double predicted_x = 0.0;
  double predicted_v = 0.0;
  double mech_delay = 0.0;
  double length = 0.0;
  double accel_min = -1.0;
  std::vector<Piece> plan;    // sender's motion over [t~0 - history, t~1]

  VehicleState state_at(double t) const {
    if (t >= predicted_at) return {predicted_at, predicted_x, predicted_v, decided_accel};
    return evaluate_pieces(plan, t);
  }
};

struct Delivery {
  bool lost = false;
  double tau = kInf;
  double arrival = kInf;
};

// One deterministic random stream per link, derived from (seed, link).
class ChannelStream {
 public:
  ChannelStream() : ChannelStream(0, 0) {}
  ChannelStream(std::uint64_t seed, std::uint64_t link, std::uint64_t salt = 0x5eed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(link), static_cast<std::uint32_t>(link >> 32),
                      static_cast<std::uint32_t>(salt)};
    engine_.seed(seq);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Loss draw first, then the delay draw, so a fixed stream gives the same
// pair of draws per message regardless of the outcome.
inline Delivery transmit(const StatusMessage& msg, const CommConfig& cfg, ChannelStream& rng) {
  const double u_loss = rng.uniform();
  const double u_tau = rng.uniform();
  Delivery d;
  if (u_loss < cfg.loss_rate) {
    d.lost = true;
    return d;
  }
  d.tau = cfg.tau_min + (cfg.tau_max - cfg.tau_min) * u_tau;
  d.arrival = msg.sent_at + d.tau;
  return d;
}

// Cycles of waiting after the phase offset: the smallest nu >= 0 with
// tau + d <= phi + nu * delta.
inline int kappa_floor_cycles(double phi, double tau, double d, double delta) {
  const double r = (tau + d - phi) / delta;
  int nu = static_cast<int>(std::ceil(r - 1e-9));
  return std::max(nu, 0);
}

inline double kappa_floor(double phi, double tau, double d, double delta) {
  return phi + kappa_floor_cycles(phi, tau, d, delta) * delta;
}

struct TraceRow {
  int link = 0;
  double sent_at = 0.0;
  double tau = 0.0;
  bool lost = false;
  double arrival = kInf;
  double kappa_floor = kInf;
};

struct KappaChoice {
  int cycles = 0;        // kappa = phi + cycles * delta
  double seconds = 0.0;
};

// Follower-side view of one link. Times on the sender grid are
// sender_offset + k * delta, on the receiver grid receiver_offset + j * delta.
class LinkState {
 public:
  LinkState() = default;
  LinkState(int link, double sender_offset, double receiver_offset, const CommConfig& cfg)
      : link_(link), sender_offset_(sender_offset), receiver_offset_(receiver_offset), cfg_(cfg) {
    wrap_ = receiver_offset >= sender_offset ? 0 : 1;
    phi_ = receiver_offset - sender_offset + wrap_ * cfg.delta;
  }

  struct Received {
    StatusMessage msg;
    double arrival = 0.0;
    int kappa_cycles = 0;
  };

  int link() const { return link_; }
  double phi() const { return phi_; }
  const CommConfig& config() const { return cfg_; }
  const std::map<std::int64_t, Received>& buffer() const { return buffer_; }

  double receiver_time(std::int64_t j) const { return receiver_offset_ + j * cfg_.delta; }
  double sender_time(std::int64_t k) const { return sender_offset_ + k * cfg_.delta; }

  // Receiver index that uses a message `cycles` after sender index k.
  std::int64_t receiver_index(std::int64_t k, int cycles) const { return k + cycles + wrap_; }
  std::int64_t target_sender_index(std::int64_t j, int cycles) const { return j - cycles - wrap_; }

  // Cycles counted on the grids, so it agrees with kappa_floor() without
  // floating drift.
  int grid_kappa_cycles(std::int64_t k, double arrival) const {
    const double ready = arrival + cfg_.decision_delay;
    int nu = static_cast<int>(std::ceil((ready - receiver_offset_) / cfg_.delta - 1e-9)) -
             static_cast<int>(k) - wrap_;
    nu = std::max(nu, 0);
    while (receiver_time(receiver_index(k, nu)) < ready - 1e-12) ++nu;
    while (nu > 0 && receiver_time(receiver_index(k, nu - 1)) >= ready - 1e-12) --nu;
    return nu;
  }

  // Records the outcome of one transmission; returns the trace row.
  TraceRow record(const StatusMessage& msg, const Delivery& d) {
    TraceRow row{link_, msg.sent_at, d.tau, d.lost, d.arrival, kInf};
    if (!d.lost) {
      if (!std::isfinite(d.arrival)) throw ContractViolation("delivered message needs an arrival time");
      const int nu = grid_kappa_cycles(msg.index, d.arrival);
      row.kappa_floor = phi_ + nu * cfg_.delta;
      buffer_[msg.index] = Received{msg, d.arrival, nu};
      if (!first_arrival_ || d.arrival < *first_arrival_) first_arrival_ = d.arrival;
    }
    return row;
  }

  void prune(double now) {
    const double cutoff = now - cfg_.buffer_retention;
    while (!buffer_.empty() && buffer_.begin()->second.msg.sent_at < cutoff) {
      buffer_.erase(buffer_.begin());
    }
  }

  bool has_arrivals(double now) const {
    return first_arrival_.has_value() && *first_arrival_ <= now;
  }

  // Largest kappa floor observed over the trailing window, optionally
  // extended under heavy loss. Empty before the first arrival.
  std::optional<KappaChoice> select_kappa(double now, bool heavy_loss) const {
    std::optional<int> best;
    for (auto it = buffer_.rbegin(); it != buffer_.rend(); ++it) {
      const Received& r = it->second;
      if (r.msg.sent_at < now - cfg_.kappa_window - 1.0) break;
      if (r.arrival > now || r.arrival <= now - cfg_.kappa_window) continue;
      if (!best || r.kappa_cycles > *best) best = r.kappa_cycles;
    }
    if (!best) return std::nullopt;
    KappaChoice c;
    c.cycles = *best + cfg_.mu;
    if (heavy_loss) c.cycles += static_cast<int>(std::lround(cfg_.heavy_loss_extension / cfg_.delta));
    c.seconds = phi_ + c.cycles * cfg_.delta;
    return c;
  }

  // Delivered message for sender index k, if it has arrived by `now`.
  const Received* delivered(std::int64_t k, double now) const {
    auto it = buffer_.find(k);
    if (it == buffer_.end() || it->second.arrival > now) return nullptr;
    return &it->second;
  }

  // Most recent message older than sender index k that has arrived by `now`.
  const Received* older_neighbor(std::int64_t k, double now) const {
    auto it = buffer_.lower_bound(k);
    while (it != buffer_.begin()) {
      --it;
      if (it->second.arrival <= now) return &it->second;
    }
    return nullptr;
  }

  // Nearest message newer than sender index k, arrived by `now`, whose
  // carried motion reaches back to time t.
  const Received* newer_covering(std::int64_t k, double t, double now) const {
    for (auto it = buffer_.upper_bound(k); it != buffer_.end(); ++it) {
      if (it->second.arrival > now) continue;
      const auto& plan = it->second.msg.plan;
      if (plan.empty() || plan.front().t_begin > t + 1e-12) break;
      return &it->second;
    }
    return nullptr;
  }

  // Most recent message of any age that has arrived by `now`.
  const Received* latest(double now) const {
    for (auto it = buffer_.rbegin(); it != buffer_.rend(); ++it) {
      if (it->second.arrival <= now) return &it->second;
    }
    return nullptr;
  }

  // Loss-rate estimate over the trailing window; the configured rate until a
  // full window of expected messages has elapsed.
  double estimated_loss(double now) const {
    const double grace = cfg_.tau_max + cfg_.decision_delay;
    const double newest = now - grace;
    const double oldest = newest - cfg_.kappa_window;
    if (oldest < 0.0) return cfg_.loss_rate;
    const auto k_hi = static_cast<std::int64_t>(std::floor((newest - sender_offset_) / cfg_.delta));
    const auto k_lo = static_cast<std::int64_t>(std::floor((oldest - sender_offset_) / cfg_.delta)) + 1;
    if (k_hi < k_lo) return cfg_.loss_rate;
    std::int64_t received = 0;
    for (auto it = buffer_.lower_bound(k_lo); it != buffer_.end() && it->first <= k_hi; ++it) {
      if (it->second.arrival <= now) ++received;
    }
    const double expected = static_cast<double>(k_hi - k_lo + 1);
    return 1.0 - static_cast<double>(received) / expected;
  }

  bool heavy_loss(double now) const {
    return estimated_loss(now) > cfg_.heavy_loss_threshold;
  }

 private:
  int link_ = 0;
  double sender_offset_ = 0.0;
  double receiver_offset_ = 0.0;
  CommConfig cfg_{};
  int wrap_ = 0;
  double phi_ = 0.0;
  std::map<std::int64_t, Received> buffer_;
  std::optional<double> first_arrival_;
};

}  // namespace socf
