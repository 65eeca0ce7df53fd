#pragma once

// Post-run metrics on delta-resolution samples: jerk, stable headway,
// peak-to-peak acceleration along the string.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "socf/platoon_sim.hpp"

namespace socf {

struct GridSeries {
  std::vector<double> t;
  std::vector<VehicleState> s;
};

inline GridSeries grid_series(const RunRecord& rec, std::size_t n, double t_from = 0.0,
                              double t_to = kInf) {
  const double delta = rec.config.comm.delta;
  GridSeries out;
  const double end = std::min(t_to, rec.end_time);
  const auto k0 = static_cast<std::int64_t>(std::ceil(t_from / delta - 1e-9));
  const auto k1 = static_cast<std::int64_t>(std::floor(end / delta + 1e-9));
  for (std::int64_t k = k0; k <= k1; ++k) {
    const double t = k * delta;
    out.t.push_back(t);
    out.s.push_back(rec.state(n, t));
  }
  return out;
}

struct JerkStats {
  double max = 0.0;
  double min = 0.0;
  double max_abs = 0.0;
};

// Jerk as the per-cycle change of the executed acceleration.
inline JerkStats jerk_stats(const RunRecord& rec, std::size_t n, double t_from = 0.0,
                            double t_to = kInf) {
  const double delta = rec.config.comm.delta;
  const GridSeries g = grid_series(rec, n, t_from, t_to);
  JerkStats j;
  for (std::size_t i = 1; i < g.s.size(); ++i) {
    const double jk = (g.s[i].a - g.s[i - 1].a) / delta;
    j.max = std::max(j.max, jk);
    j.min = std::min(j.min, jk);
  }
  j.max_abs = std::max(j.max, -j.min);
  return j;
}

struct StableHeadway {
  bool converged = false;
  double window_start = 0.0;
  double time_headway = 0.0;  // front-to-front spacing / follower speed
  double time_gap = 0.0;      // bumper gap / follower speed
  double space_headway = 0.0; // front-to-front spacing
  double gap = 0.0;
};

struct StabilityCriterion {
  double speed_tol = 0.01;  // m/s
  double gap_tol = 0.01;    // m
  double window = 5.0;      // s
  double min_speed = 0.5;   // m/s, standstill is not car following
};

// First window of length `window` inside [t_from, t_to] where the pair holds
// matched speed and a constant gap; values are averaged over that window.
inline StableHeadway stable_headway(const RunRecord& rec, std::size_t n, double t_from,
                                    double t_to, const StabilityCriterion& c = {}) {
  const GridSeries pv = grid_series(rec, n - 1, t_from, t_to);
  const GridSeries fv = grid_series(rec, n, t_from, t_to);
  const double delta = rec.config.comm.delta;
  const auto w = static_cast<std::size_t>(std::llround(c.window / delta));
  const double len = rec.specs[n - 1].length;
  StableHeadway out;
  const std::size_t m = std::min(pv.s.size(), fv.s.size());
  if (m <= w) return out;

  std::size_t run_start = 0;
  double gmin = kInf, gmax = -kInf;
  for (std::size_t i = 0; i < m; ++i) {
    const double gap = pv.s[i].x - len - fv.s[i].x;
    const bool ok = std::abs(pv.s[i].v - fv.s[i].v) < c.speed_tol && fv.s[i].v >= c.min_speed;
    if (!ok) {
      run_start = i + 1;
      gmin = kInf;
      gmax = -kInf;
      continue;
    }
    gmin = std::min(gmin, gap);
    gmax = std::max(gmax, gap);
    while (gmax - gmin >= c.gap_tol && run_start < i) {
      // Shrink from the left until the gap band fits again.
      ++run_start;
      gmin = kInf;
      gmax = -kInf;
      for (std::size_t j = run_start; j <= i; ++j) {
        const double gj = pv.s[j].x - len - fv.s[j].x;
        gmin = std::min(gmin, gj);
        gmax = std::max(gmax, gj);
      }
    }
    if (i - run_start >= w) {
      double th = 0.0, tg = 0.0, sh = 0.0, gp = 0.0;
      const std::size_t cnt = i - run_start + 1;
      for (std::size_t j = run_start; j <= i; ++j) {
        const double spacing = pv.s[j].x - fv.s[j].x;
        th += spacing / fv.s[j].v;
        tg += (spacing - len) / fv.s[j].v;
        sh += spacing;
        gp += spacing - len;
      }
      out.converged = true;
      out.window_start = pv.t[run_start];
      out.time_headway = th / cnt;
      out.time_gap = tg / cnt;
      out.space_headway = sh / cnt;
      out.gap = gp / cnt;
      return out;
    }
  }
  return out;
}

inline double peak_to_peak_accel(const RunRecord& rec, std::size_t n, double t_from,
                                 double t_to) {
  const GridSeries g = grid_series(rec, n, t_from, t_to);
  if (g.s.empty()) return 0.0;
  double lo = kInf, hi = -kInf;
  for (const VehicleState& s : g.s) {
    lo = std::min(lo, s.a);
    hi = std::max(hi, s.a);
  }
  return hi - lo;
}

struct DecisionCounts {
  std::int64_t total = 0;
  std::int64_t infeasible = 0;
  std::int64_t cold_start = 0;
  std::int64_t neighbor = 0;
  std::int64_t reuse_last = 0;
  std::int64_t fallback = 0;
  std::int64_t heavy_loss = 0;
};

inline DecisionCounts decision_counts(const RunRecord& rec, std::size_t n) {
  DecisionCounts c;
  for (const DecisionLog& d : rec.decisions[n]) {
    ++c.total;
    c.infeasible += d.infeasible;
    c.heavy_loss += d.heavy_loss;
    switch (d.source) {
      case InfoSource::cold_start: ++c.cold_start; break;
      case InfoSource::neighbor: ++c.neighbor; break;
      case InfoSource::reuse_last: ++c.reuse_last; break;
      case InfoSource::fallback: ++c.fallback; break;
      case InfoSource::target: break;
    }
  }
  return c;
}

// Fluctuation window of the leader profile, if it has one.
inline std::optional<std::pair<double, double>> fluctuation_window(const LeaderProfile& p) {
  if (const auto* f = std::get_if<Fluctuating>(&p)) {
    return std::pair{f->fluct_start, f->fluct_start + f->periods * f->period};
  }
  return std::nullopt;
}

}  // namespace socf
