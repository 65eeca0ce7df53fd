// Acceptance checks. One PASS/FAIL line per criterion item; exits non-zero
// when any item fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "socf/analysis.hpp"
#include "socf/report.hpp"
#include "socf/scenario_io.hpp"

using namespace socf;

namespace {

int failures = 0;

void verdict(bool ok, const char* id, const std::string& what) {
  std::printf("%s %-3s %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string preset(const std::string& name) {
  return std::string(SOCF_SOURCE_DIR) + "/scenarios/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Timed {
  RunRecord rec;
  double secs = 0.0;
};

Timed timed_run(const ScenarioConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run(c), 0.0};
  t.secs = seconds_since(t0);
  return t;
}

// ---------------------------------------------------------------------------

void ablations() {
  {
    const ScenarioConfig c = parse_scenario(preset("ablation_start.scn"));
    const Timed dropped = timed_run(with_ablation(c, ablation_from_string("start")));
    verdict(!dropped.rec.collisions.empty() && dropped.secs < 10.0, "1a",
            fmt("start-point dropped => collision: collisions=%zu min_gap=%.6f m (%.2f s)",
                dropped.rec.collisions.size(), dropped.rec.min_gaps[1].min_gap, dropped.secs));
    const Timed full = timed_run(c);
    double worst = -kInf;
    for (double t = 10.0; t <= full.rec.end_time; t += 0.01)
      worst = std::max(worst, full.rec.state(1, t).v - full.rec.state(0, t).v);
    verdict(full.rec.collisions.empty() && worst <= 1e-9 && full.secs < 10.0, "1b",
            fmt("start-point kept => no collision, v_F <= v_P after 10 s: collisions=%zu "
                "max(v_F - v_P)=%.4f m/s (%.2f s)",
                full.rec.collisions.size(), worst, full.secs));
  }
  {
    const ScenarioConfig c = parse_scenario(preset("ablation_end.scn"));
    const Timed dropped = timed_run(with_ablation(c, ablation_from_string("end")));
    const AccelCruiseBrake& p = std::get<AccelCruiseBrake>(c.leader);
    const bool during_brake =
        !dropped.rec.collisions.empty() && dropped.rec.collisions.front().time >= p.brake_at;
    verdict(during_brake && dropped.secs < 10.0, "1c",
            fmt("end-point dropped => collision during the hard brake: collisions=%zu first at "
                "t=%.2f s, brake at %.0f s (%.2f s)",
                dropped.rec.collisions.size(),
                dropped.rec.collisions.empty() ? -1.0 : dropped.rec.collisions.front().time,
                p.brake_at, dropped.secs));
    const Timed full = timed_run(c);
    verdict(full.rec.collisions.empty() && full.secs < 10.0, "1d",
            fmt("end-point kept => no collision: collisions=%zu min_gap=%.6f m (%.2f s)",
                full.rec.collisions.size(), full.rec.min_gaps[1].min_gap, full.secs));
  }
  {
    const ScenarioConfig c = parse_scenario(preset("ablation_mid.scn"));
    const Timed dropped = timed_run(with_ablation(c, ablation_from_string("mid")));
    const double final_gap = dropped.rec.gap(1, dropped.rec.end_time);
    const bool stopped = dropped.rec.state(1, dropped.rec.end_time).v < 1e-9 &&
                         dropped.rec.state(0, dropped.rec.end_time).v < 1e-9;
    verdict(dropped.rec.min_gaps[1].min_gap < 0.0 && stopped &&
                std::abs(final_gap - 1.0) <= 0.1 && dropped.secs < 10.0,
            "1e",
            fmt("midway dropped => min gap < 0, stopped gap 1.0 +- 0.1: min_gap=%.4f m "
                "final_gap=%.4f m stopped=%d (%.2f s)",
                dropped.rec.min_gaps[1].min_gap, final_gap, stopped, dropped.secs));
    const Timed full = timed_run(c);
    verdict(full.rec.min_gaps[1].min_gap >= 1.0 - 1e-6 && full.secs < 10.0, "1f",
            fmt("midway kept => min gap >= 1 m: min_gap=%.7f m (%.2f s)",
                full.rec.min_gaps[1].min_gap, full.secs));
  }
}

void efficiency() {
  VehicleSpec fv = VehicleSpec::of_class(VehicleClass::small);
  fv.gamma = 0.0;
  const PvStatic pv = PvStatic::of(fv);
  const double v = kmh(120);
  const PairConvergence zero = converge_pair(fv, pv, v, 0.0);
  verdict(zero.converged && std::abs(zero.time_headway - 0.165) <= 0.01, "2a",
          fmt("zero staleness, small<-small, 120 km/h: headway=%.4f s (0.165 +- 0.01)",
              zero.time_headway));

  const PairConvergence tenth = converge_pair(fv, pv, v, 0.1);
  std::string calib;
  for (const CalibrationRow& r : headway_calibration()) {
    calib += fmt(" %s/g%.0f=%.3f", r.label.c_str(), r.gamma, r.time_headway);
  }
  verdict(tenth.converged && std::abs(tenth.time_headway - 0.45) <= 0.15, "2b",
          fmt("0.1 s staleness, 120 km/h: headway=%.4f s (0.45 +- 0.15); variants:%s",
              tenth.time_headway, calib.c_str()));

  const auto t0 = std::chrono::steady_clock::now();
  const HeadwaySurface s = headway_delay_surface(SweepSpec::default_grid());
  const MonotonicityReport m = check_monotone(s);
  verdict(s.cells.size() == 88 && m.unconverged == 0 && m.delay_violations == 0 &&
              m.speed_violations == 0,
          "2c",
          fmt("11x8 surface monotone: cells=%zu unconverged=%d delay_violations=%d "
              "speed_violations=%d (%.2f s)",
              s.cells.size(), m.unconverged, m.delay_violations, m.speed_violations,
              seconds_since(t0)));
}

void rss() {
  std::vector<double> speeds;
  for (int k = 30; k <= 120; k += 10) speeds.push_back(kmh(k));
  const auto rows = rss_compare(paper_rss_pairs(), speeds);
  int dominated = 0;
  for (const RssRow& r : rows) dominated += r.model <= r.rss;
  verdict(dominated == static_cast<int>(rows.size()), "3a",
          fmt("model headway <= RSS headway, 3 pairs x 30..120 km/h: %d/%zu cells", dominated,
              rows.size()));
  const double want[] = {0.17, 0.29, 0.38};
  const int at[] = {40, 80, 120};
  bool ok = true;
  std::string got;
  for (int i = 0; i < 3; ++i) {
    const double m = mean_improvement(rows, kmh(at[i]));
    ok = ok && std::abs(m - want[i]) <= 0.10;
    got += fmt(" %d km/h=%.1f%% (%.0f%%)", at[i], 100.0 * m, 100.0 * want[i]);
  }
  verdict(ok, "3b", "mean improvement within 10 points:" + got);
}

void platoon() {
  const ScenarioConfig c = parse_scenario(preset("platoon10.scn"));
  const Timed t = timed_run(c);
  const RunRecord& rec = t.rec;
  verdict(rec.collisions.empty() && t.secs < 30.0, "4a",
          fmt("10-vehicle platoon without loss: collisions=%zu min_gap=%.4f m (%.2f s)",
              rec.collisions.size(), summarize(rec).min_gap, t.secs));

  const auto [s0, s1] = settling_window(c, rec.end_time);
  bool ok = true;
  std::string got;
  for (std::size_t n = 1; n < rec.size(); ++n) {
    const VehicleSpec& f = rec.specs[n];
    const VehicleSpec& p = rec.specs[n - 1];
    double want = 1.0, tol = 0.5;
    if (f.accel_min > p.accel_min) {  // follower brakes more weakly
      tol = 1.0;
      if (f.vclass == VehicleClass::midsize) want = 2.5;
      else if (p.vclass == VehicleClass::midsize) want = 3.5;
      else want = 5.5;
    }
    const StableHeadway h = stable_headway(rec, n, s0, s1);
    const bool fine = h.converged && std::abs(h.time_gap - want) <= tol;
    ok = ok && fine;
    got += fmt(" %s<-%s=%.2f(%.1f)", std::string(to_string(f.vclass)).c_str(),
               std::string(to_string(p.vclass)).c_str(),
               h.converged ? h.time_gap : std::nan(""), want);
  }
  verdict(ok, "4b", "stable time gap per pair, s:" + got);

  const auto win = fluctuation_window(c.leader);
  std::vector<double> p2p{0.0};
  std::string seq;
  for (std::size_t n = 1; n < rec.size(); ++n) {
    p2p.push_back(peak_to_peak_accel(rec, n, win->first, win->second));
    seq += fmt(" %.3f", p2p.back());
  }
  verdict(non_increasing_violations(p2p, 0.0) == 0, "4c",
          "follower peak-to-peak accel non-increasing during fluctuation, m/s^2:" + seq);
}

void loss() {
  LossSweepSpec spec;
  spec.base = parse_scenario(preset("platoon10.scn"));
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunSummary> runs = loss_sweep(spec);
  std::size_t collisions = 0;
  double min_gap = kInf;
  for (const RunSummary& r : runs) {
    collisions += r.collisions;
    min_gap = std::min(min_gap, r.min_gap);
  }
  verdict(collisions == 0 && runs.size() == 50, "5a",
          fmt("loss {0,1,10,25,50}%% x 10 seeds: runs=%zu collisions=%zu min_gap=%.4f m (%.1f s)",
              runs.size(), collisions, min_gap, seconds_since(t0)));

  int monotone = 0, total = 0;
  std::string worst;
  int worst_bad = -1;
  for (const RunSummary& r : runs) {
    if (r.loss_rate != 0.5) continue;
    ++total;
    const int bad = non_increasing_violations(r.max_abs_jerk, 0.10);
    monotone += bad == 0;
    if (bad > worst_bad) {
      worst_bad = bad;
      worst = fmt("seed %llu:", static_cast<unsigned long long>(r.seed));
      for (std::size_t n = 1; n < r.max_abs_jerk.size(); ++n)
        worst += fmt(" %.2f", r.max_abs_jerk[n]);
    }
  }
  verdict(monotone == total && total == 10, "5b",
          fmt("50%% loss, follower max|jerk| non-increasing within 10%%: %d/%d seeds; worst %s",
              monotone, total, worst.c_str()));
}

void oracle_suite() {
  std::mt19937_64 rng(20240601);
  int accepted = 0, drawn = 0;
  double worst = kInf, worst_margin = kInf;
  int bad = 0;
  while (accepted < 1000) {
    const DecisionInput in = oracle::random_input(rng);
    ++drawn;
    const Decision d = decide_accel(in);
    if (d.infeasible) continue;
    ++accepted;
    const oracle::DenseCheck c = oracle::dense_hard_brake(in, d.accel);
    worst = std::min(worst, c.min_gap - in.fv.stop_gap);
    worst_margin = std::min(worst_margin, c.min_margin - in.fv.stop_gap);
    bad += c.min_gap < in.fv.stop_gap - 1e-6;
  }
  verdict(bad == 0, "6a",
          fmt("accepted decisions pass the 1 ms hard-brake oracle: %d/%d drawn, failures=%d, "
              "min(gap - s)=%.2e m, min(gap - elastic - s)=%.2e m",
              accepted, drawn, bad, worst, worst_margin));

  double max_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const DecisionInput in = oracle::random_input(rng);
    const Interval b = domain_basic(in);
    const double a = b.lo + (b.hi - b.lo) * std::uniform_real_distribution<double>(0, 1)(rng);
    max_err = std::max(max_err, std::abs(max_approach_distance(in, a) -
                                         oracle::dense_hard_brake(in, a).max_f));
  }
  verdict(max_err <= 1e-6, "6b",
          fmt("closed-form max of the approach distance vs 1 ms grid, 10000 cases: "
              "max error=%.2e m",
              max_err));
}

void comm() {
  const double k1 = kappa_floor(0.05, 0.069, 0.0, 0.1);
  const double k2 = kappa_floor(0.05, 0.045, 0.0, 0.1);
  const double k3 = kappa_floor(0.05, 0.053, 0.0, 0.1);
  verdict(std::abs(k1 - 0.15) < 1e-12 && std::abs(k2 - 0.05) < 1e-12 &&
              std::abs(k3 - 0.15) < 1e-12,
          "7a", fmt("kappa floor rows (phi=0.05): tau 0.069->%.2f 0.045->%.2f 0.053->%.2f", k1, k2, k3));

  bool ok = true;
  std::string got;
  for (double p : {0.01, 0.10, 0.25, 0.50}) {
    CommConfig cfg;
    cfg.loss_rate = p;
    ChannelStream rng(42, 1);
    int lost = 0;
    for (int i = 0; i < 100000; ++i) {
      StatusMessage m;
      m.sent_at = 0.1 * i;
      lost += transmit(m, cfg, rng).lost;
    }
    const double rate = lost / 1e5;
    ok = ok && std::abs(rate - p) <= 0.01;
    got += fmt(" %.2f->%.4f", p, rate);
  }
  verdict(ok, "7b", "empirical loss over 1e5 messages:" + got);

  ScenarioConfig c = parse_scenario(preset("loss25.scn"));
  c.trace = true;
  std::string a[2];
  for (std::string& s : a) {
    const RunRecord rec = run(c);
    std::ostringstream os;
    write_csv(rec, os);
    write_trace_csv(rec, os);
    os << summary_json(rec).dump();
    s = os.str();
  }
  verdict(a[0] == a[1], "7c",
          fmt("repeated run byte-identical (csv + trace + summary, %zu bytes)", a[0].size()));
}

}  // namespace

int main() {
  ablations();
  efficiency();
  rss();
  platoon();
  loss();
  oracle_suite();
  comm();
  std::printf("%d item(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
