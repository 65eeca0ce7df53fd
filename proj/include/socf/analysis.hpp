#pragma once

// Batch experiments: headway vs staleness and speed, additional-gap maps,
// the RSS baseline, ablation pairs and packet-loss sweeps. Cells and runs are
// independent and are evaluated concurrently; results are always gathered
// by index so the output does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "socf/metrics.hpp"
#include "socf/platoon_sim.hpp"
#include "socf/safety.hpp"

namespace socf {

inline double kmh(double v) { return v / 3.6; }

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<T> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
  };
  std::vector<std::future<void>> pool;
  for (unsigned w = 1; w < workers; ++w) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  return out;
}

// ---------------------------------------------------------------------------
// Steady following with injected staleness.

struct PairConvergence {
  bool converged = false;
  double gap = 0.0;           // bumper gap
  double time_headway = 0.0;  // front-to-front spacing / speed
  double time = 0.0;          // simulated seconds until convergence
};

// Follows a PV cruising at `speed` with the FV knowledge always `staleness`
// old, stepping the decision rule until speed and gap settle.
inline PairConvergence converge_pair(VehicleSpec fv, const PvStatic& pv, double speed,
                                     double staleness, double delta = 0.1,
                                     double max_time = 2000.0) {
  // Headroom above the cruise speed so the FV can close the initial gap.
  fv.speed_max = std::max(fv.speed_max, 1.2 * speed + 1.0);
  const double start_gap =
      2.0 * min_feasible_gap(fv, pv, speed, speed, staleness, {}, delta) + 5.0;
  double gap = start_gap;
  double v = speed;
  int calm = 0;
  PairConvergence out;
  const auto steps = static_cast<std::int64_t>(max_time / delta);
  for (std::int64_t k = 0; k < steps; ++k) {
    const DecisionInput in = steady_input(fv, pv, v, speed, staleness, gap, delta);
    const double a = decide_accel(in).accel;
    const double moved = v * delta + 0.5 * a * delta * delta;
    const double next_gap = gap + speed * delta - moved;
    const double next_v = std::max(0.0, v + a * delta);
    const bool still = std::abs(next_v - speed) < 1e-7 && std::abs(next_gap - gap) < 1e-7;
    calm = still ? calm + 1 : 0;
    gap = next_gap;
    v = next_v;
    if (calm >= 50) {
      out.converged = speed > 0.0;
      out.time = (k + 1) * delta;
      break;
    }
  }
  out.gap = gap;
  if (v > 0.0) out.time_headway = (gap + pv.length) / v;
  return out;
}

struct SweepSpec {
  VehicleClass pv = VehicleClass::small;
  VehicleClass fv = VehicleClass::small;
  std::vector<double> speeds;  // m/s, ascending
  std::vector<double> delays;  // staleness, s, ascending
  double gamma = 0.0;
  double delta = 0.1;

  void validate() const {
    if (speeds.empty()) throw ContractViolation("sweep.speeds must be non-empty");
    if (delays.empty()) throw ContractViolation("sweep.delays must be non-empty");
    if (!std::is_sorted(speeds.begin(), speeds.end()))
      throw ContractViolation("sweep.speeds must be sorted");
    if (!std::is_sorted(delays.begin(), delays.end()))
      throw ContractViolation("sweep.delays must be sorted");
    if (speeds.front() <= 0.0) throw ContractViolation("sweep.speeds must be positive");
    if (delays.front() < 0.0) throw ContractViolation("sweep.delays must be >= 0");
    if (!(gamma >= 0.0)) throw ContractViolation("sweep.gamma must be >= 0");
  }

  // 11 staleness values x 8 speeds, small behind small.
  static SweepSpec default_grid() {
    SweepSpec s;
    for (int i = 0; i <= 10; ++i) s.delays.push_back(0.1 * i);
    for (int i = 1; i <= 8; ++i) s.speeds.push_back(kmh(15.0 * i));
    return s;
  }
};

struct HeadwayCell {
  double delay = 0.0;
  double speed = 0.0;
  PairConvergence result;
};

struct HeadwaySurface {
  SweepSpec spec;
  std::vector<HeadwayCell> cells;  // row-major, delay outer

  const HeadwayCell& at(std::size_t di, std::size_t si) const {
    return cells[di * spec.speeds.size() + si];
  }
};

inline HeadwaySurface headway_delay_surface(const SweepSpec& spec, unsigned workers = 0) {
  spec.validate();
  VehicleSpec fv = VehicleSpec::of_class(spec.fv);
  fv.gamma = spec.gamma;
  const PvStatic pv = PvStatic::of(VehicleSpec::of_class(spec.pv));
  const std::size_t ns = spec.speeds.size();
  HeadwaySurface out;
  out.spec = spec;
  out.cells = parallel_map<HeadwayCell>(
      spec.delays.size() * ns,
      [&](std::size_t i) {
        HeadwayCell c;
        c.delay = spec.delays[i / ns];
        c.speed = spec.speeds[i % ns];
        c.result = converge_pair(fv, pv, c.speed, c.delay, spec.delta);
        return c;
      },
      workers);
  return out;
}

struct MonotonicityReport {
  int delay_violations = 0;  // headway drops as staleness grows
  int speed_violations = 0;  // headway grows with speed
  int unconverged = 0;
};

// Headway must not fall with staleness and must not rise with speed.
inline MonotonicityReport check_monotone(const HeadwaySurface& s, double tol = 1e-6) {
  MonotonicityReport r;
  const std::size_t nd = s.spec.delays.size(), ns = s.spec.speeds.size();
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t v = 0; v < ns; ++v) {
      const double h = s.at(d, v).result.time_headway;
      if (!s.at(d, v).result.converged) ++r.unconverged;
      if (d + 1 < nd && s.at(d + 1, v).result.time_headway < h - tol) ++r.delay_violations;
      if (v + 1 < ns && s.at(d, v + 1).result.time_headway > h + tol) ++r.speed_violations;
    }
  }
  return r;
}

// The 0.1 s anchor under the readings of "delay" and gamma the text leaves
// open: staleness alone, staleness plus the PV's mechanical delay, staleness
// plus one cycle; gamma 0 and the default 5.
struct CalibrationRow {
  std::string label;
  double gamma = 0.0;
  double staleness = 0.0;
  double speed = 0.0;
  double time_headway = 0.0;
};

inline std::vector<CalibrationRow> headway_calibration(double delay = 0.1,
                                                       double speed = kmh(120.0),
                                                       double delta = 0.1) {
  const VehicleSpec small = VehicleSpec::of_class(VehicleClass::small);
  const PvStatic pv = PvStatic::of(small);
  struct Variant {
    const char* label;
    double stale;
  };
  const Variant variants[] = {{"staleness", delay},
                              {"staleness+mech_delay", delay + small.mech_delay},
                              {"staleness+cycle", delay + delta}};
  std::vector<CalibrationRow> rows;
  for (double gamma : {0.0, 5.0}) {
    for (const Variant& v : variants) {
      VehicleSpec fv = small;
      fv.gamma = gamma;
      fv.speed_max = std::max(fv.speed_max, speed);
      const double gap = min_feasible_gap(fv, pv, speed, speed, v.stale, {}, delta);
      rows.push_back({v.label, gamma, v.stale, speed, (gap + pv.length) / speed});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// RSS baseline.

struct RssParams {
  double rho = 0.1;      // response time
  double a_resp = 1.0;   // FV acceleration during the response time
  double b_min = 1.5;    // FV braking, absolute
  double b_max = 1.5;    // PV braking, absolute

  void validate() const {
    if (!(rho >= 0.0 && a_resp >= 0.0 && b_min > 0.0 && b_max > 0.0))
      throw ContractViolation("rss: rho, a_resp >= 0 and b_min, b_max > 0 required");
  }
};

// RSS assumes the follower brakes no harder than the weaker of the two.
inline RssParams rss_params_for(const VehicleSpec& fv, const VehicleSpec& pv, double rho = 0.1) {
  return {rho, fv.accel_max, std::min(-fv.accel_min, -pv.accel_min), -pv.accel_min};
}

inline double rss_min_distance(double v_fv, double v_pv, const RssParams& p) {
  const double v_resp = v_fv + p.rho * p.a_resp;
  const double d = v_fv * p.rho + 0.5 * p.a_resp * p.rho * p.rho +
                   v_resp * v_resp / (2.0 * p.b_min) - v_pv * v_pv / (2.0 * p.b_max);
  return std::max(0.0, d);
}

// Front-to-front headway with the same stop gap convention as the model.
inline double rss_headway(const VehicleSpec& fv, const VehicleSpec& pv, double speed,
                          const RssParams& p) {
  return (rss_min_distance(speed, speed, p) + pv.length + fv.stop_gap) / speed;
}

inline double model_headway(VehicleSpec fv, const VehicleSpec& pv, double speed,
                            double staleness, double gamma, double delta = 0.1) {
  fv.gamma = gamma;
  fv.speed_max = std::max(fv.speed_max, speed);
  const double gap = min_feasible_gap(fv, PvStatic::of(pv), speed, speed, staleness, {}, delta);
  return (gap + pv.length) / speed;
}

struct PairClasses {
  VehicleClass pv;
  VehicleClass fv;
  std::string label() const {
    return std::string(to_string(fv)) + "<-" + std::string(to_string(pv));
  }
};

inline std::vector<PairClasses> paper_rss_pairs() {
  return {{VehicleClass::midsize, VehicleClass::small},
          {VehicleClass::large, VehicleClass::small},
          {VehicleClass::large, VehicleClass::midsize}};
}

struct RssRow {
  std::string pair;
  double speed = 0.0;
  double model = 0.0;  // time headway, s
  double rss = 0.0;
  double improvement = 0.0;  // 1 - model / rss
};

struct RssCompareOptions {
  double staleness = 0.1;  // fixed delay in both models
  double gamma = 0.0;
  double delta = 0.1;
};

inline std::vector<RssRow> rss_compare(const std::vector<PairClasses>& pairs,
                                       const std::vector<double>& speeds,
                                       const RssCompareOptions& opt = {}) {
  std::vector<RssRow> rows;
  for (const PairClasses& pc : pairs) {
    const VehicleSpec pv = VehicleSpec::of_class(pc.pv);
    const VehicleSpec fv = VehicleSpec::of_class(pc.fv);
    const RssParams p = rss_params_for(fv, pv, opt.staleness);
    for (double v : speeds) {
      RssRow r;
      r.pair = pc.label();
      r.speed = v;
      r.model = model_headway(fv, pv, v, opt.staleness, opt.gamma, opt.delta);
      r.rss = rss_headway(fv, pv, v, p);
      r.improvement = 1.0 - r.model / r.rss;
      rows.push_back(r);
    }
  }
  return rows;
}

inline double mean_improvement(const std::vector<RssRow>& rows, double speed) {
  double sum = 0.0;
  int n = 0;
  for (const RssRow& r : rows) {
    if (std::abs(r.speed - speed) < 1e-9) {
      sum += r.improvement;
      ++n;
    }
  }
  return n ? sum / n : std::nan("");
}

// ---------------------------------------------------------------------------
// Additional-gap maps.

struct GapMap {
  std::vector<double> v_pv;  // rows
  std::vector<double> v_fv;  // columns
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * v_fv.size() + c]; }
};

inline GapMap additional_gap_map(const VehicleSpec& fv, const VehicleSpec& pv,
                                 const Ablation& dropped, const std::vector<double>& v_pv,
                                 const std::vector<double>& v_fv, double staleness = 0.1,
                                 double delta = 0.1, unsigned workers = 0) {
  if (v_pv.empty() || v_fv.empty()) throw ContractViolation("gap map: empty speed grid");
  GapMap m{v_pv, v_fv, {}};
  const PvStatic ps = PvStatic::of(pv);
  m.values = parallel_map<double>(
      v_pv.size() * v_fv.size(),
      [&](std::size_t i) {
        const double vp = v_pv[i / v_fv.size()];
        const double vf = v_fv[i % v_fv.size()];
        return additional_gap(fv, ps, vf, vp, staleness, dropped, delta);
      },
      workers);
  return m;
}

inline std::vector<double> speed_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
  return g;
}

// ---------------------------------------------------------------------------
// Whole-scenario experiments.

inline ScenarioConfig with_ablation(ScenarioConfig cfg, const Ablation& ab) {
  cfg.agent.ablation = ab;
  return cfg;
}

inline Ablation ablation_from_string(const std::string& s) {
  if (s == "start") return {true, false, false};
  if (s == "end") return {false, true, false};
  if (s == "mid" || s == "midway") return {false, false, true};
  if (s == "none") return {};
  throw ContractViolation("unknown constraint '" + s + "' (expected start, end or mid)");
}

struct RunSummary {
  std::uint64_t seed = 0;
  double loss_rate = 0.0;
  std::size_t collisions = 0;
  double min_gap = kInf;
  std::vector<double> max_abs_jerk;  // per vehicle, leader included
  DecisionCounts counts;             // summed over followers
};

inline RunSummary summarize(const RunRecord& rec) {
  RunSummary s;
  s.seed = rec.config.seed;
  s.loss_rate = rec.config.comm.loss_rate;
  s.collisions = rec.collisions.size();
  for (std::size_t n = 0; n < rec.size(); ++n) {
    s.max_abs_jerk.push_back(jerk_stats(rec, n).max_abs);
    if (n == 0) continue;
    s.min_gap = std::min(s.min_gap, rec.min_gaps[n].min_gap);
    const DecisionCounts c = decision_counts(rec, n);
    s.counts.total += c.total;
    s.counts.infeasible += c.infeasible;
    s.counts.cold_start += c.cold_start;
    s.counts.neighbor += c.neighbor;
    s.counts.reuse_last += c.reuse_last;
    s.counts.fallback += c.fallback;
    s.counts.heavy_loss += c.heavy_loss;
  }
  return s;
}

// Number of adjacent followers whose value exceeds the one ahead by more
// than `rel_tol` (relative). Index 0 (the leader) is skipped.
inline int non_increasing_violations(const std::vector<double>& per_vehicle,
                                     double rel_tol = 0.10) {
  int bad = 0;
  for (std::size_t i = 2; i < per_vehicle.size(); ++i) {
    if (per_vehicle[i] > per_vehicle[i - 1] * (1.0 + rel_tol) + 1e-12) ++bad;
  }
  return bad;
}

struct LossSweepSpec {
  ScenarioConfig base;
  std::vector<double> rates{0.0, 0.01, 0.10, 0.25, 0.50};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

inline std::vector<RunSummary> loss_sweep(const LossSweepSpec& spec, unsigned workers = 0) {
  const std::size_t ns = spec.seeds.size();
  return parallel_map<RunSummary>(
      spec.rates.size() * ns,
      [&](std::size_t i) {
        ScenarioConfig cfg = spec.base;
        cfg.comm.loss_rate = spec.rates[i / ns];
        cfg.seed = spec.seeds[i % ns];
        cfg.trace = false;
        return summarize(run(cfg));
      },
      workers);
}

}  // namespace socf
