#pragma once

// JSON summary and one-line digest of a finished run.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "socf/analysis.hpp"
#include "socf/metrics.hpp"
#include "socf/scenario_io.hpp"

namespace socf {

// Interval in which pairs are expected to settle before the leader changes
// its behaviour.
inline std::pair<double, double> settling_window(const ScenarioConfig& c, double end) {
  return std::visit(
      [&](const auto& p) -> std::pair<double, double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Fluctuating>) return {0.0, std::min(end, p.fluct_start)};
        else if constexpr (std::is_same_v<P, AccelCruiseBrake>) return {0.0, std::min(end, p.brake_at)};
        else return {0.0, end};
      },
      c.leader);
}

inline nlohmann::ordered_json summary_json(const RunRecord& rec) {
  using J = nlohmann::ordered_json;
  J j;
  j["scenario"] = to_json(rec.config);
  j["seed"] = rec.config.seed;
  j["end_time"] = rec.end_time;
  j["halted"] = rec.halted;

  J coll = J::array();
  for (const CollisionEvent& c : rec.collisions) {
    coll.push_back({{"pair", {c.follower - 1, c.follower}},
                    {"time", c.time},
                    {"depth", c.depth},
                    {"depth_time", c.depth_time}});
  }
  j["collisions"] = coll;

  const auto [s0, s1] = settling_window(rec.config, rec.end_time);
  const auto fluct = fluctuation_window(rec.config.leader);
  J vehicles = J::array();
  for (std::size_t n = 0; n < rec.size(); ++n) {
    const JerkStats js = jerk_stats(rec, n);
    J v{{"id", n},
        {"class", std::string(to_string(rec.specs[n].vclass))},
        {"offset", rec.offsets[n]},
        {"jerk_max", js.max},
        {"jerk_min", js.min},
        {"jerk_max_abs", js.max_abs}};
    if (fluct) v["peak_to_peak_accel"] = peak_to_peak_accel(rec, n, fluct->first, fluct->second);
    if (n > 0) {
      v["phi"] = rec.phis[n];
      v["min_gap"] = rec.min_gaps[n].min_gap;
      v["min_gap_time"] = rec.min_gaps[n].time;
      const StableHeadway sh = stable_headway(rec, n, s0, s1);
      if (sh.converged) {
        v["stable"] = {{"status", "converged"},
                       {"window_start", sh.window_start},
                       {"time_headway", sh.time_headway},
                       {"time_gap", sh.time_gap},
                       {"space_headway", sh.space_headway},
                       {"gap", sh.gap}};
      } else {
        v["stable"] = {{"status", "not converged"}};
      }
      const DecisionCounts c = decision_counts(rec, n);
      v["decisions"] = {{"total", c.total},           {"infeasible", c.infeasible},
                        {"cold_start", c.cold_start}, {"neighbor", c.neighbor},
                        {"reuse_last", c.reuse_last}, {"fallback", c.fallback},
                        {"heavy_loss", c.heavy_loss}};
    }
    vehicles.push_back(v);
  }
  j["vehicles"] = vehicles;

  const RunSummary s = summarize(rec);
  j["metrics"] = {{"min_gap", s.min_gap},
                  {"collisions", s.collisions},
                  {"infeasible", s.counts.infeasible},
                  {"fallback", s.counts.fallback}};
  return j;
}

inline std::string digest(const RunRecord& rec) {
  const RunSummary s = summarize(rec);
  double jmax = 0.0;
  for (std::size_t n = 1; n < s.max_abs_jerk.size(); ++n) jmax = std::max(jmax, s.max_abs_jerk[n]);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: vehicles=%zu seed=%llu end=%.2fs collisions=%zu min_gap=%.4fm "
                "max_jerk=%.3f infeasible=%lld",
                rec.config.name.c_str(), rec.size(),
                static_cast<unsigned long long>(rec.config.seed), rec.end_time, s.collisions,
                s.min_gap, jmax, static_cast<long long>(s.counts.infeasible));
  return buf;
}

}  // namespace socf
