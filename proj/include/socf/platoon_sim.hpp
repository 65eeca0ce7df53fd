#pragma once

// Event-driven platoon simulation. Each vehicle decides on its own grid;
// the leader broadcasts scripted decisions, followers run the agent.
// Between decisions every motion is an exact quadratic, so collisions are
// found analytically per gap segment.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "socf/agent.hpp"
#include "socf/comm.hpp"
#include "socf/leader.hpp"

namespace socf {

struct VehicleEntry {
  VehicleSpec spec;
  double gap = 0.0;    // bumper-to-bumper gap to the predecessor at t=0
  double speed = 0.0;  // initial speed
  bool operator==(const VehicleEntry&) const = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<VehicleEntry> vehicles;
  LeaderProfile leader = ConstantAccel{};
  CommConfig comm;
  double duration = 60.0;
  std::uint64_t seed = 1;
  AgentOptions agent;
  bool pass_through = false;
  std::optional<double> gamma;  // overrides every vehicle's gamma when set
  bool trace = false;           // keep the channel trace

  void validate() const {
    if (vehicles.empty()) throw ContractViolation("vehicles: at least one vehicle required");
    if (!(duration > 0.0)) throw ContractViolation("run.duration must be positive");
    if (gamma && !(*gamma >= 0.0)) throw ContractViolation("run.gamma must be >= 0");
    comm.validate();
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      const auto& v = vehicles[i];
      const std::string where = "vehicles[" + std::to_string(i) + "].";
      try {
        v.spec.validate();
      } catch (const ContractViolation& e) {
        throw ContractViolation(where + e.what());
      }
      if (!(v.gap >= 0.0)) throw ContractViolation(where + "gap must be >= 0");
      if (!(v.speed >= 0.0 && v.speed <= v.spec.speed_max))
        throw ContractViolation(where + "speed must be in [0, speed_max]");
    }
    if (!(agent.modules.reuse_margin >= 0.0))
      throw ContractViolation("run.reuse_margin must be >= 0");
  }
  bool operator==(const ScenarioConfig&) const = default;
};

struct CollisionEvent {
  int follower = 0;        // index in the platoon; the pair is (follower-1, follower)
  double time = 0.0;       // first instant the gap is negative
  double depth = 0.0;      // deepest penetration over the run (positive)
  double depth_time = 0.0;
};

struct GapExtremum {
  double min_gap = kInf;
  double time = 0.0;
};

struct RunRecord {
  ScenarioConfig config;
  std::vector<VehicleSpec> specs;      // after the gamma override
  std::vector<double> offsets;         // decision grid offsets
  std::vector<double> phis;            // per follower, phi of its link (0 for the leader)
  std::vector<Trajectory> trajectories;
  std::vector<std::vector<DecisionLog>> decisions;  // empty for the leader
  std::vector<CollisionEvent> collisions;
  std::vector<GapExtremum> min_gaps;   // per follower; index 0 unused
  std::vector<TraceRow> trace;
  double end_time = 0.0;               // collision instant when halted
  bool halted = false;

  std::size_t size() const { return trajectories.size(); }
  VehicleState state(std::size_t n, double t) const { return trajectories[n].state_at(t); }
  double gap(std::size_t n, double t) const {
    return state(n - 1, t).x - specs[n - 1].length - state(n, t).x;
  }
};

namespace detail {

struct GapScan {
  GapExtremum min;
  std::optional<double> first_below;
};

// Scans gap(t) = x_P(t) - l_P - x_F(t) over [t_from, t_to] one common
// quadratic segment at a time.
inline GapScan scan_gap(const Trajectory& pv, const Trajectory& fv, double length,
                        double t_from, double t_to, double threshold) {
  GapScan out;
  std::vector<double> knots{t_from, t_to};
  for (const Piece& p : pv.pieces())
    if (p.t_begin > t_from && p.t_begin < t_to) knots.push_back(p.t_begin);
  for (const Piece& p : fv.pieces())
    if (p.t_begin > t_from && p.t_begin < t_to) knots.push_back(p.t_begin);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  auto gap_at = [&](double t) { return pv.state_at(t).x - length - fv.state_at(t).x; };
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i];
    const double b = knots[i + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const VehicleState sp = pv.state_at(mid);
    const VehicleState sf = fv.state_at(mid);
    // Quadratic in s = t - mid: g0 + g1 s + 0.5 g2 s^2.
    const double g0 = sp.x - length - sf.x;
    const double g1 = sp.v - sf.v;
    const double g2 = sp.a - sf.a;
    auto g = [&](double t) {
      const double s = t - mid;
      return g0 + g1 * s + 0.5 * g2 * s * s;
    };
    double seg_min_t = g(a) <= g(b) ? a : b;
    if (g2 > 0.0) {
      const double tv = mid - g1 / g2;
      if (tv > a && tv < b && g(tv) < g(seg_min_t)) seg_min_t = tv;
    }
    const double seg_min = std::min(g(seg_min_t), gap_at(seg_min_t));
    if (seg_min < out.min.min_gap) out.min = {seg_min, seg_min_t};
    if (!out.first_below && seg_min < threshold) {
      if (g(a) < threshold) {
        out.first_below = a;
      } else {
        double lo = a, hi = seg_min_t;
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
          const double m = 0.5 * (lo + hi);
          (g(m) < threshold ? hi : lo) = m;
        }
        out.first_below = hi;
      }
    }
  }
  return out;
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

}  // namespace detail

// Bumper gap below this counts as a collision.
inline constexpr double kCollisionTolerance = 1e-9;

inline RunRecord run(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t n_veh = cfg.vehicles.size();
  const double delta = cfg.comm.delta;

  RunRecord rec;
  rec.config = cfg;
  for (std::size_t i = 0; i < n_veh; ++i) {
    VehicleSpec s = cfg.vehicles[i].spec;
    s.id = static_cast<int>(i);
    if (cfg.gamma) s.gamma = *cfg.gamma;
    rec.specs.push_back(s);
  }

  std::vector<double> x0(n_veh, 0.0);
  for (std::size_t i = 1; i < n_veh; ++i)
    x0[i] = x0[i - 1] - rec.specs[i - 1].length - cfg.vehicles[i].gap;

  Leader leader(rec.specs[0], cfg.vehicles[0].speed, cfg.leader, delta, cfg.comm.plan_history);
  rec.offsets.push_back(leader.offset());
  rec.phis.push_back(0.0);

  ChannelStream offset_stream(cfg.seed, ~std::uint64_t{0}, 0x0ff5);
  std::vector<ChannelStream> streams(n_veh);
  std::vector<Agent> agents;
  agents.reserve(n_veh);
  for (std::size_t i = 1; i < n_veh; ++i) {
    const double off = offset_stream.uniform() * delta;
    rec.offsets.push_back(off);
    streams[i] = ChannelStream(cfg.seed, i);
    LinkState link(static_cast<int>(i), rec.offsets[i - 1], off, cfg.comm);
    rec.phis.push_back(link.phi());
    Trajectory traj(0.0, x0[i], cfg.vehicles[i].speed, rec.specs[i].speed_max);
    agents.emplace_back(rec.specs[i], off, std::move(traj), std::move(link),
                        PvStatic::of(rec.specs[i - 1]), x0[i - 1], cfg.agent);
  }
  rec.decisions.resize(n_veh);

  // (time, vehicle, index); ties go to the vehicle closer to the front so a
  // message sent at t is recorded before anyone deciding at t looks for it.
  using Event = std::tuple<double, std::size_t, std::int64_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  queue.emplace(leader.time_of(leader.next_index()), 0, leader.next_index());
  for (std::size_t i = 1; i < n_veh; ++i) queue.emplace(agents[i - 1].time_of(0), i, 0);

  while (!queue.empty()) {
    const auto [t, veh, k] = queue.top();
    queue.pop();
    StatusMessage msg;
    if (veh == 0) {
      leader.decision_tick(k);
      msg = leader.broadcast(k);
    } else {
      Agent& ag = agents[veh - 1];
      rec.decisions[veh].push_back(ag.decision_tick(k));
      msg = ag.broadcast(k);
    }
    if (veh + 1 < n_veh) {
      const Delivery d = transmit(msg, cfg.comm, streams[veh + 1]);
      const TraceRow row = agents[veh].link().record(msg, d);
      if (cfg.trace) rec.trace.push_back(row);
    }
    const double t_next = t + delta;
    if (t_next <= cfg.duration) {
      const double exact = veh == 0 ? leader.time_of(k + 1) : agents[veh - 1].time_of(k + 1);
      queue.emplace(exact, veh, k + 1);
    }
  }

  rec.trajectories.push_back(leader.trajectory());
  for (const Agent& ag : agents) rec.trajectories.push_back(ag.trajectory());

  rec.end_time = cfg.duration;
  rec.min_gaps.resize(n_veh);
  std::optional<double> first_hit;
  for (std::size_t i = 1; i < n_veh; ++i) {
    const detail::GapScan scan =
        detail::scan_gap(rec.trajectories[i - 1], rec.trajectories[i], rec.specs[i - 1].length,
                         0.0, cfg.duration, -kCollisionTolerance);
    rec.min_gaps[i] = scan.min;
    if (scan.first_below) {
      rec.collisions.push_back({static_cast<int>(i), *scan.first_below, -scan.min.min_gap,
                                scan.min.time});
      if (!first_hit || *scan.first_below < *first_hit) first_hit = scan.first_below;
    }
  }
  if (first_hit && !cfg.pass_through) {
    rec.halted = true;
    rec.end_time = *first_hit;
    for (auto& log : rec.decisions) {
      std::erase_if(log, [&](const DecisionLog& d) { return d.t0 > rec.end_time; });
    }
    std::erase_if(rec.trace, [&](const TraceRow& r) { return r.sent_at > rec.end_time; });
  }
  return rec;
}

struct SampleRow {
  double t = 0.0;
  int veh = 0;
  VehicleState s;
  double gap = std::nan("");
  double headway = std::nan("");
};

// delta-grid rows plus each vehicle's own piece boundaries, ordered by
// (t, vehicle).
inline std::vector<SampleRow> sample_rows(const RunRecord& rec) {
  const double delta = rec.config.comm.delta;
  std::vector<std::pair<double, int>> keys;
  const auto n_grid = static_cast<std::int64_t>(std::floor(rec.end_time / delta + 1e-9));
  for (std::size_t n = 0; n < rec.size(); ++n) {
    for (std::int64_t k = 0; k <= n_grid; ++k) keys.emplace_back(k * delta, static_cast<int>(n));
    for (const Piece& p : rec.trajectories[n].pieces()) {
      if (p.t_begin > 0.0 && p.t_begin <= rec.end_time)
        keys.emplace_back(p.t_begin, static_cast<int>(n));
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<SampleRow> rows;
  rows.reserve(keys.size());
  for (const auto& [t, n] : keys) {
    SampleRow r;
    r.t = t;
    r.veh = n;
    r.s = rec.state(n, t);
    if (n > 0) {
      const VehicleState p = rec.state(n - 1, t);
      r.gap = p.x - rec.specs[n - 1].length - r.s.x;
      if (r.s.v > 0.0) r.headway = (p.x - r.s.x) / r.s.v;
    }
    rows.push_back(r);
  }
  return rows;
}

inline void write_csv(const RunRecord& rec, std::ostream& os) {
  std::string out = "t,veh_id,x,v,a,gap,headway\n";
  for (const SampleRow& r : sample_rows(rec)) {
    detail::append_double(out, r.t);
    out += ',';
    out += std::to_string(r.veh);
    for (double v : {r.s.x, r.s.v, r.s.a}) {
      out += ',';
      detail::append_double(out, v);
    }
    for (double v : {r.gap, r.headway}) {
      out += ',';
      if (std::isfinite(v)) detail::append_double(out, v);
    }
    out += '\n';
  }
  os << out;
}

inline void write_trace_csv(const RunRecord& rec, std::ostream& os) {
  std::string out = "link,sent_at,tau,lost,arrival,kappa_floor\n";
  for (const TraceRow& r : rec.trace) {
    out += std::to_string(r.link);
    out += ',';
    detail::append_double(out, r.sent_at);
    out += ',';
    if (!r.lost) detail::append_double(out, r.tau);
    out += r.lost ? ",1," : ",0,";
    if (!r.lost) detail::append_double(out, r.arrival);
    out += ',';
    if (!r.lost) detail::append_double(out, r.kappa_floor);
    out += '\n';
  }
  os << out;
}

}  // namespace socf
