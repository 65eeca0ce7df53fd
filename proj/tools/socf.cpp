// Command-line front end: runs scenarios and batch experiments, writes CSV
// and JSON artifacts into the output directory.
//
// exit codes: 0 ok, 2 collision (pass_through off), 3 invalid input.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "socf/analysis.hpp"
#include "socf/report.hpp"
#include "socf/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace socf;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCollision = 2;
constexpr int kExitInvalid = 3;

struct Common {
  std::string out_dir;
  std::string format = "all";

  bool csv() const { return format == "all" || format == "csv"; }
  bool json_out() const { return format == "all" || format == "json"; }
};

fs::path prepare(const Common& c, const std::string& file) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / file;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string num(double v) { return io::format_double(v); }

int emit_run(const RunRecord& rec, const Common& c, const std::string& stem) {
  if (c.csv()) {
    std::ofstream os(prepare(c, stem + ".csv"), std::ios::binary);
    write_csv(rec, os);
    std::ofstream tr(prepare(c, stem + ".trace.csv"), std::ios::binary);
    write_trace_csv(rec, tr);
  }
  if (c.json_out()) write_json(prepare(c, stem + ".summary.json"), summary_json(rec));
  std::cout << digest(rec) << '\n';
  return rec.collisions.empty() || rec.config.pass_through ? kExitOk : kExitCollision;
}

VehicleClass cls(const std::string& s) { return vehicle_class_from_string(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-oriented car-following simulator"};
  app.require_subcommand(1);

  Common common;
  const char* env = std::getenv("SOCF_OUT_DIR");
  common.out_dir = env && *env ? env : "out";
  app.add_option("--out", common.out_dir, "output directory (default $SOCF_OUT_DIR or ./out)");
  app.add_option("--format", common.format, "artifacts to write")
      ->check(CLI::IsMember({"all", "csv", "json"}));

  // run
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario");
  std::string scenario;
  std::optional<std::uint64_t> seed;
  run_cmd->add_option("--scenario", scenario, "scenario file (.scn or .json)")->required();
  run_cmd->add_option("--seed", seed, "override the scenario seed");

  // ablation
  auto* abl_cmd = app.add_subcommand("ablation", "simulate with one constraint dropped");
  std::string drop;
  abl_cmd->add_option("--scenario", scenario, "scenario file")->required();
  abl_cmd->add_option("--drop", drop, "constraint to drop")
      ->required()
      ->check(CLI::IsMember({"start", "end", "mid"}));
  abl_cmd->add_option("--seed", seed, "override the scenario seed");

  // sweep-headway
  auto* sweep_cmd = app.add_subcommand("sweep-headway", "stable headway over staleness x speed");
  SweepSpec sweep = SweepSpec::default_grid();
  std::string sw_pv = "small", sw_fv = "small";
  std::vector<double> sw_delays, sw_speeds_kmh;
  sweep_cmd->add_option("--pv", sw_pv, "predecessor class");
  sweep_cmd->add_option("--fv", sw_fv, "follower class");
  sweep_cmd->add_option("--gamma", sweep.gamma, "elastic gap coefficient");
  sweep_cmd->add_option("--delays", sw_delays, "staleness values, s")->delimiter(',');
  sweep_cmd->add_option("--speeds-kmh", sw_speeds_kmh, "speeds, km/h")->delimiter(',');

  // gap-map
  auto* gap_cmd = app.add_subcommand("gap-map", "additional gap caused by one constraint");
  std::string gm_pv, gm_fv;
  double gm_vmax = 22.0, gm_step = 1.0, gm_stale = 0.1;
  gap_cmd->add_option("--drop", drop, "constraint")
      ->required()
      ->check(CLI::IsMember({"start", "end", "mid"}));
  gap_cmd->add_option("--pv", gm_pv, "predecessor class (default per constraint)");
  gap_cmd->add_option("--fv", gm_fv, "follower class (default per constraint)");
  gap_cmd->add_option("--vmax", gm_vmax, "largest speed on both axes, m/s");
  gap_cmd->add_option("--step", gm_step, "speed step, m/s")->check(CLI::PositiveNumber);
  gap_cmd->add_option("--staleness", gm_stale, "information age, s");

  // rss-compare
  auto* rss_cmd = app.add_subcommand("rss-compare", "time headway against the RSS distance");
  std::vector<double> rss_speeds{30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
  RssCompareOptions rss_opt;
  rss_cmd->add_option("--speeds-kmh", rss_speeds, "speeds, km/h")->delimiter(',');
  rss_cmd->add_option("--delay", rss_opt.staleness, "delay in both models, s");
  rss_cmd->add_option("--gamma", rss_opt.gamma, "elastic gap coefficient of the model");

  // loss-sweep
  auto* loss_cmd = app.add_subcommand("loss-sweep", "platoon runs over loss rates and seeds");
  LossSweepSpec ls;
  int n_seeds = 10;
  std::string loss_scenario = "scenarios/platoon10.scn";
  loss_cmd->add_option("--scenario", loss_scenario, "base scenario");
  loss_cmd->add_option("--rates", ls.rates, "loss rates")->delimiter(',');
  loss_cmd->add_option("--seeds", n_seeds, "seeds 1..N")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*run_cmd || *abl_cmd) {
      ScenarioConfig cfg = parse_scenario(scenario);
      if (seed) cfg.seed = *seed;
      std::string stem = cfg.name;
      if (*abl_cmd) {
        cfg = with_ablation(cfg, ablation_from_string(drop));
        stem += "_drop-" + drop;
      }
      cfg.trace = true;
      const RunRecord rec = run(cfg);
      return emit_run(rec, common, stem);
    }

    if (*sweep_cmd) {
      sweep.pv = cls(sw_pv);
      sweep.fv = cls(sw_fv);
      if (!sw_delays.empty()) sweep.delays = sw_delays;
      if (!sw_speeds_kmh.empty()) {
        sweep.speeds.clear();
        for (double k : sw_speeds_kmh) sweep.speeds.push_back(kmh(k));
      }
      const HeadwaySurface s = headway_delay_surface(sweep);
      const MonotonicityReport m = check_monotone(s);
      if (common.csv()) {
        std::string csv = "delay";
        for (double v : sweep.speeds) csv += "," + num(v);
        csv += '\n';
        for (std::size_t d = 0; d < sweep.delays.size(); ++d) {
          csv += num(sweep.delays[d]);
          for (std::size_t v = 0; v < sweep.speeds.size(); ++v) {
            const auto& r = s.at(d, v).result;
            csv += ',';
            if (r.converged) csv += num(r.time_headway);
          }
          csv += '\n';
        }
        write_text(prepare(common, "headway_surface.csv"), csv);
      }
      if (common.json_out()) {
        json j;
        j["pv"] = sw_pv;
        j["fv"] = sw_fv;
        j["gamma"] = sweep.gamma;
        json cells = json::array();
        for (const HeadwayCell& c : s.cells) {
          json cell{{"delay", c.delay}, {"speed", c.speed}};
          if (c.result.converged) {
            cell["time_headway"] = c.result.time_headway;
            cell["gap"] = c.result.gap;
          } else {
            cell["status"] = "not converged";
          }
          cells.push_back(cell);
        }
        j["cells"] = cells;
        j["monotonicity"] = {{"delay_violations", m.delay_violations},
                             {"speed_violations", m.speed_violations},
                             {"unconverged", m.unconverged}};
        json cal = json::array();
        for (const CalibrationRow& r : headway_calibration())
          cal.push_back({{"variant", r.label},
                         {"gamma", r.gamma},
                         {"staleness", r.staleness},
                         {"speed", r.speed},
                         {"time_headway", r.time_headway}});
        j["calibration_0.1s_120kmh"] = cal;
        write_json(prepare(common, "headway_surface.json"), j);
      }
      std::printf("headway surface: %zux%zu cells, unconverged=%d, monotonicity violations=%d\n",
                  sweep.delays.size(), sweep.speeds.size(), m.unconverged,
                  m.delay_violations + m.speed_violations);
      return kExitOk;
    }

    if (*gap_cmd) {
      static const std::map<std::string, std::pair<const char*, const char*>> defaults{
          {"start", {"midsize", "small"}}, {"end", {"midsize", "large"}}, {"mid", {"large", "small"}}};
      const auto& d = defaults.at(drop);
      const VehicleSpec pv = VehicleSpec::of_class(cls(gm_pv.empty() ? d.first : gm_pv));
      const VehicleSpec fv = VehicleSpec::of_class(cls(gm_fv.empty() ? d.second : gm_fv));
      const std::vector<double> grid = speed_grid(0.0, gm_vmax, gm_step);
      const GapMap m = additional_gap_map(fv, pv, ablation_from_string(drop), grid, grid, gm_stale);
      std::string csv = "v_pv\\v_fv";
      for (double v : m.v_fv) csv += "," + num(v);
      csv += '\n';
      double peak = 0.0;
      for (std::size_t r = 0; r < m.v_pv.size(); ++r) {
        csv += num(m.v_pv[r]);
        for (std::size_t c = 0; c < m.v_fv.size(); ++c) {
          csv += "," + num(m.at(r, c));
          peak = std::max(peak, m.at(r, c));
        }
        csv += '\n';
      }
      write_text(prepare(common, "gap_map_" + drop + ".csv"), csv);
      std::printf("gap map (%s dropped, %s behind %s): %zux%zu cells, max additional gap %.3f m\n",
                  drop.c_str(), std::string(to_string(fv.vclass)).c_str(),
                  std::string(to_string(pv.vclass)).c_str(), m.v_pv.size(), m.v_fv.size(), peak);
      return kExitOk;
    }

    if (*rss_cmd) {
      std::vector<double> speeds;
      for (double k : rss_speeds) speeds.push_back(kmh(k));
      const auto rows = rss_compare(paper_rss_pairs(), speeds, rss_opt);
      json j;
      j["delay"] = rss_opt.staleness;
      j["gamma"] = rss_opt.gamma;
      json arr = json::array();
      std::string csv = "pair,speed_kmh,model_headway,rss_headway,improvement\n";
      for (const RssRow& r : rows) {
        arr.push_back({{"pair", r.pair},
                       {"speed", r.speed},
                       {"model_headway", r.model},
                       {"rss_headway", r.rss},
                       {"improvement", r.improvement}});
        csv += r.pair + "," + num(r.speed * 3.6) + "," + num(r.model) + "," + num(r.rss) + "," +
               num(r.improvement) + "\n";
      }
      j["rows"] = arr;
      json mean = json::object();
      std::printf("mean improvement:");
      for (double k : rss_speeds) {
        const double m = mean_improvement(rows, kmh(k));
        mean[num(k)] = m;
        std::printf(" %g km/h %.1f%%", k, 100.0 * m);
      }
      std::printf("\n");
      j["mean_improvement_by_kmh"] = mean;
      if (common.json_out()) write_json(prepare(common, "rss_compare.json"), j);
      if (common.csv()) write_text(prepare(common, "rss_compare.csv"), csv);
      return kExitOk;
    }

    if (*loss_cmd) {
      scenario = loss_scenario;
      ls.base = parse_scenario(loss_scenario);
      ls.seeds.clear();
      for (int s = 1; s <= n_seeds; ++s) ls.seeds.push_back(static_cast<std::uint64_t>(s));
      const auto runs = loss_sweep(ls);
      json arr = json::array();
      std::string csv = "loss_rate,seed,collisions,min_gap,infeasible,fallback,jerk_violations";
      for (std::size_t n = 0; n < ls.base.vehicles.size(); ++n)
        csv += ",max_abs_jerk_" + std::to_string(n);
      csv += '\n';
      std::size_t total_collisions = 0;
      for (const RunSummary& r : runs) {
        total_collisions += r.collisions;
        const int viol = non_increasing_violations(r.max_abs_jerk);
        arr.push_back({{"loss_rate", r.loss_rate},
                       {"seed", r.seed},
                       {"collisions", r.collisions},
                       {"min_gap", r.min_gap},
                       {"infeasible", r.counts.infeasible},
                       {"fallback", r.counts.fallback},
                       {"reuse_last", r.counts.reuse_last},
                       {"neighbor", r.counts.neighbor},
                       {"max_abs_jerk", r.max_abs_jerk},
                       {"jerk_order_violations", viol}});
        csv += num(r.loss_rate) + "," + std::to_string(r.seed) + "," +
               std::to_string(r.collisions) + "," + num(r.min_gap) + "," +
               std::to_string(r.counts.infeasible) + "," + std::to_string(r.counts.fallback) +
               "," + std::to_string(viol);
        for (double jv : r.max_abs_jerk) csv += "," + num(jv);
        csv += '\n';
      }
      if (common.json_out())
        write_json(prepare(common, "loss_sweep.json"),
                   json{{"scenario", to_json(ls.base)}, {"runs", arr}});
      if (common.csv()) write_text(prepare(common, "loss_sweep.csv"), csv);
      std::printf("loss sweep: %zu runs, %zu collisions\n", runs.size(), total_collisions);
      return total_collisions == 0 || ls.base.pass_through ? kExitOk : kExitCollision;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << scenario << ":" << e.line() << ":" << e.column() << ": " << e.what()
              << '\n';
    return kExitInvalid;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}
