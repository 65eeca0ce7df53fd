#pragma once

// Scenario files. Two interchangeable encodings of ScenarioConfig:
//
//   sectioned text (.scn)             JSON
//   [run]      name = ...             {"run": {...},
//   [comm]     loss_rate = 0.1         "comm": {...},
//   [leader]   profile = fluctuating   "leader": {"profile": ..., ...},
//   [vehicles] vehicle = small gap=1   "vehicles": [{"class": "small", "gap": 1}, ...]}
//
// Unknown sections and keys are errors. Text parse errors carry line and
// column; semantic errors name the offending field.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "socf/platoon_sim.hpp"

namespace socf {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Raised for keys the schema does not know; the text parser re-anchors it
// at the key.
class UnknownKey : public ParseError {
 public:
  using ParseError::ParseError;
};

namespace io {

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline const char* profile_name(const LeaderProfile& p) {
  switch (p.index()) {
    case 0: return "constant_accel";
    case 1: return "accel_cruise_brake";
    case 2: return "fluctuating";
    default: return "schedule";
  }
}

inline const char* mode_name(DecisionMode m) {
  return m == DecisionMode::paper ? "paper" : "exact_max";
}

inline const char* staleness_name(StalenessPolicy s) {
  return s == StalenessPolicy::conservative ? "conservative" : "dead_reckoning";
}

inline std::string drop_list(const Ablation& a) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(a.drop_start, "start");
  add(a.drop_end, "end");
  add(a.drop_mid, "mid");
  return s.empty() ? "none" : s;
}

inline std::string schedule_text(const Schedule& s) {
  std::string out;
  for (const auto& [t, a] : s.steps) {
    if (!out.empty()) out += ", ";
    out += format_double(t) + ":" + format_double(a);
  }
  return out;
}

// A value with its source position, used to report errors at the value.
struct Value {
  std::string text;
  int line = 0;
  int column = 0;
};

[[noreturn]] inline void fail_at(const Value& v, const std::string& msg) {
  throw ParseError(msg, v.line, v.column);
}

[[noreturn]] inline void unknown_key(const Value& v, const std::string& name) {
  throw UnknownKey(name + ": unknown key", v.line, v.column);
}

inline double to_double(const Value& v, const std::string& key) {
  double out = 0.0;
  const char* b = v.text.data();
  const char* e = b + v.text.size();
  if (!v.text.empty() && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail_at(v, key + ": expected a number, got '" + v.text + "'");
  return out;
}

inline std::int64_t to_int(const Value& v, const std::string& key) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (ec != std::errc() || p != v.text.data() + v.text.size())
    fail_at(v, key + ": expected an integer, got '" + v.text + "'");
  return out;
}

inline std::uint64_t to_uint(const Value& v, const std::string& key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (ec != std::errc() || p != v.text.data() + v.text.size())
    fail_at(v, key + ": expected a non-negative integer, got '" + v.text + "'");
  return out;
}

inline bool to_bool(const Value& v, const std::string& key) {
  if (v.text == "true" || v.text == "1" || v.text == "yes") return true;
  if (v.text == "false" || v.text == "0" || v.text == "no") return false;
  fail_at(v, key + ": expected true or false, got '" + v.text + "'");
}

inline Ablation to_ablation(const Value& v) {
  Ablation a;
  std::string_view rest = v.text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item == "start") a.drop_start = true;
    else if (item == "end") a.drop_end = true;
    else if (item == "mid" || item == "midway") a.drop_mid = true;
    else if (item != "none" && !item.empty())
      fail_at(v, "run.drop: unknown constraint '" + std::string(item) + "'");
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return a;
}

inline Schedule to_schedule(const Value& v) {
  Schedule s;
  std::string_view rest = v.text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      fail_at(v, "leader.steps: expected 'time:accel' items, got '" + std::string(item) + "'");
    Value tv{std::string(trim(item.substr(0, colon))), v.line, v.column};
    Value av{std::string(trim(item.substr(colon + 1))), v.line, v.column};
    s.steps.emplace_back(to_double(tv, "leader.steps"), to_double(av, "leader.steps"));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return s;
}

// Applies key/value pairs to a vehicle entry; the class was already set.
inline void apply_vehicle_key(VehicleEntry& e, const std::string& key, const Value& v,
                              const std::string& where) {
  const std::string name = where + key;
  if (key == "gap") e.gap = to_double(v, name);
  else if (key == "speed") e.speed = to_double(v, name);
  else if (key == "speed_max") e.spec.speed_max = to_double(v, name);
  else if (key == "length") e.spec.length = to_double(v, name);
  else if (key == "stop_gap") e.spec.stop_gap = to_double(v, name);
  else if (key == "accel_max") e.spec.accel_max = to_double(v, name);
  else if (key == "accel_min") e.spec.accel_min = to_double(v, name);
  else if (key == "mech_delay") e.spec.mech_delay = to_double(v, name);
  else if (key == "gamma") e.spec.gamma = to_double(v, name);
  else unknown_key(v, name);
}

inline void apply_run_key(ScenarioConfig& c, const std::string& key, const Value& v) {
  const std::string name = "run." + key;
  LossModules& m = c.agent.modules;
  if (key == "name") c.name = v.text;
  else if (key == "duration") c.duration = to_double(v, name);
  else if (key == "seed") c.seed = to_uint(v, name);
  else if (key == "pass_through") c.pass_through = to_bool(v, name);
  else if (key == "gamma") c.gamma = to_double(v, name);
  else if (key == "trace") c.trace = to_bool(v, name);
  else if (key == "drop") c.agent.ablation = to_ablation(v);
  else if (key == "mode") {
    if (v.text == "paper") c.agent.mode = DecisionMode::paper;
    else if (v.text == "exact_max") c.agent.mode = DecisionMode::exact_max;
    else fail_at(v, name + ": expected paper or exact_max");
  } else if (key == "staleness_policy") {
    if (v.text == "conservative") c.agent.staleness = StalenessPolicy::conservative;
    else if (v.text == "dead_reckoning") c.agent.staleness = StalenessPolicy::dead_reckoning;
    else fail_at(v, name + ": expected conservative or dead_reckoning");
  } else if (key == "neighbor_info") m.neighbor_info = to_bool(v, name);
  else if (key == "newer_neighbor") m.newer_neighbor = to_bool(v, name);
  else if (key == "reuse_last") m.reuse_last = to_bool(v, name);
  else if (key == "kappa_extension") m.kappa_extension = to_bool(v, name);
  else if (key == "increment_limit") m.increment_limit = to_bool(v, name);
  else if (key == "reuse_margin") m.reuse_margin = to_double(v, name);
  else unknown_key(v, name);
}

inline void apply_comm_key(CommConfig& c, const std::string& key, const Value& v) {
  const std::string name = "comm." + key;
  if (key == "delta") c.delta = to_double(v, name);
  else if (key == "tau_min") c.tau_min = to_double(v, name);
  else if (key == "tau_max") c.tau_max = to_double(v, name);
  else if (key == "loss_rate") c.loss_rate = to_double(v, name);
  else if (key == "decision_delay") c.decision_delay = to_double(v, name);
  else if (key == "mu") c.mu = static_cast<int>(to_int(v, name));
  else if (key == "kappa_window") c.kappa_window = to_double(v, name);
  else if (key == "heavy_loss_threshold") c.heavy_loss_threshold = to_double(v, name);
  else if (key == "heavy_loss_extension") c.heavy_loss_extension = to_double(v, name);
  else if (key == "buffer_retention") c.buffer_retention = to_double(v, name);
  else if (key == "plan_history") c.plan_history = to_double(v, name);
  else unknown_key(v, name);
}

// Leader keys are collected first because their meaning depends on the profile.
inline LeaderProfile build_profile(const Value& profile, const std::map<std::string, Value>& kv) {
  auto num = [&](const char* key, double& field) {
    if (auto it = kv.find(key); it != kv.end()) field = to_double(it->second, std::string("leader.") + key);
  };
  auto check = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : kv) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail_at(v, "leader." + k + ": not a parameter of profile '" + profile.text + "'");
    }
  };
  if (profile.text == "constant_accel") {
    check({"accel", "v_cap"});
    ConstantAccel p;
    num("accel", p.accel);
    num("v_cap", p.v_cap);
    return p;
  }
  if (profile.text == "accel_cruise_brake") {
    check({"accel", "v_max", "brake_at"});
    AccelCruiseBrake p;
    num("accel", p.accel);
    num("v_max", p.v_max);
    num("brake_at", p.brake_at);
    return p;
  }
  if (profile.text == "fluctuating") {
    check({"accel", "cruise", "fluct_start", "period", "amplitude", "periods", "brake_at"});
    Fluctuating p;
    num("accel", p.accel);
    num("cruise", p.cruise);
    num("fluct_start", p.fluct_start);
    num("period", p.period);
    num("amplitude", p.amplitude);
    num("brake_at", p.brake_at);
    if (auto it = kv.find("periods"); it != kv.end())
      p.periods = static_cast<int>(to_int(it->second, "leader.periods"));
    return p;
  }
  if (profile.text == "schedule") {
    check({"steps"});
    Schedule p;
    if (auto it = kv.find("steps"); it != kv.end()) p = to_schedule(it->second);
    return p;
  }
  fail_at(profile, "leader.profile: unknown profile '" + profile.text +
                       "' (constant_accel, accel_cruise_brake, fluctuating, schedule)");
}

inline void validate_profile(const LeaderProfile& p) {
  std::visit(
      [](const auto& q) {
        using P = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<P, ConstantAccel>) {
          if (!(q.v_cap > 0.0)) throw ContractViolation("leader.v_cap must be positive");
        } else if constexpr (std::is_same_v<P, AccelCruiseBrake>) {
          if (!(q.v_max > 0.0)) throw ContractViolation("leader.v_max must be positive");
        } else if constexpr (std::is_same_v<P, Fluctuating>) {
          if (!(q.cruise > 0.0)) throw ContractViolation("leader.cruise must be positive");
          if (!(q.period > 0.0)) throw ContractViolation("leader.period must be positive");
          if (q.periods < 0) throw ContractViolation("leader.periods must be >= 0");
        } else {
          for (std::size_t i = 1; i < q.steps.size(); ++i)
            if (q.steps[i].first < q.steps[i - 1].first)
              throw ContractViolation("leader.steps must be sorted by time");
        }
      },
      p);
}

}  // namespace io

inline ScenarioConfig parse_scenario_text(std::string_view text) {
  using io::Value;
  ScenarioConfig cfg;
  std::string section;
  std::map<std::string, Value> leader_kv;
  std::optional<Value> profile;
  bool seen_vehicles = false;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const std::string_view body = io::trim(line);
    if (body.empty()) continue;
    const int indent = static_cast<int>(line.find_first_not_of(" \t")) + 1;

    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError("unterminated section header", line_no, indent);
      section = std::string(io::trim(body.substr(1, body.size() - 2)));
      if (section != "run" && section != "comm" && section != "leader" && section != "vehicles")
        throw ParseError("unknown section [" + section + "]", line_no, indent + 1);
      if (section == "vehicles") seen_vehicles = true;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value'", line_no, indent);
    const std::string key(io::trim(body.substr(0, eq)));
    const std::string_view after = body.substr(eq + 1);
    const auto vstart = after.find_first_not_of(" \t");
    const int value_col = indent + static_cast<int>(eq + 1 + (vstart == std::string_view::npos ? 0 : vstart));
    Value value{std::string(io::trim(after)), line_no, value_col};
    if (key.empty()) throw ParseError("missing key before '='", line_no, indent);
    if (section.empty()) throw ParseError("key outside of a section", line_no, indent);
    if (value.text.empty()) throw ParseError(key + ": missing value", line_no, value_col);

    if (section == "run" || section == "comm") {
      try {
        if (section == "run") io::apply_run_key(cfg, key, value);
        else io::apply_comm_key(cfg.comm, key, value);
      } catch (const UnknownKey& e) {
        throw ParseError(e.what(), line_no, indent);
      }
    } else if (section == "leader") {
      if (key == "profile") profile = value;
      else if (!leader_kv.emplace(key, value).second)
        io::fail_at(value, "leader." + key + ": duplicate key");
    } else {
      if (key != "vehicle")
        throw ParseError("vehicles." + key + ": unknown key (expected 'vehicle')", line_no, indent);
      // vehicle = <class> key=value ...
      const std::string where = "vehicles[" + std::to_string(cfg.vehicles.size()) + "].";
      std::size_t i = 0;
      const std::string& s = value.text;
      auto token_at = [&](std::size_t from) {
        std::size_t e = s.find_first_of(" \t", from);
        return e == std::string::npos ? s.size() : e;
      };
      std::size_t e = token_at(0);
      VehicleEntry entry;
      try {
        entry.spec = VehicleSpec::of_class(vehicle_class_from_string(s.substr(0, e)));
      } catch (const ContractViolation& ex) {
        throw ParseError(where + "class: " + ex.what(), line_no, value_col);
      }
      i = e;
      while (true) {
        i = s.find_first_not_of(" \t", i);
        if (i == std::string::npos) break;
        e = token_at(i);
        const std::string tok = s.substr(i, e - i);
        const auto teq = tok.find('=');
        const int col = value_col + static_cast<int>(i);
        if (teq == std::string::npos || teq == 0 || teq + 1 == tok.size())
          throw ParseError(where + ": expected key=value, got '" + tok + "'", line_no, col);
        Value tv{tok.substr(teq + 1), line_no, col + static_cast<int>(teq) + 1};
        const Value kpos{tok.substr(0, teq), line_no, col};
        try {
          io::apply_vehicle_key(entry, tok.substr(0, teq), tv, where);
        } catch (const UnknownKey& pe) {
          io::fail_at(kpos, pe.what());
        }
        i = e;
      }
      cfg.vehicles.push_back(entry);
    }
  }
  if (profile) {
    cfg.leader = io::build_profile(*profile, leader_kv);
  } else if (!leader_kv.empty()) {
    io::fail_at(leader_kv.begin()->second, "leader: 'profile' is required");
  }
  if (!seen_vehicles || cfg.vehicles.empty())
    throw ContractViolation("vehicles: at least one vehicle required");
  io::validate_profile(cfg.leader);
  cfg.validate();
  return cfg;
}

inline std::string to_scn(const ScenarioConfig& c) {
  using io::format_double;
  std::ostringstream os;
  const LossModules& m = c.agent.modules;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "[run]\n"
     << "name = " << c.name << '\n'
     << "duration = " << format_double(c.duration) << '\n'
     << "seed = " << c.seed << '\n'
     << "pass_through = " << b(c.pass_through) << '\n';
  if (c.gamma) os << "gamma = " << format_double(*c.gamma) << '\n';
  os << "trace = " << b(c.trace) << '\n'
     << "drop = " << io::drop_list(c.agent.ablation) << '\n'
     << "mode = " << io::mode_name(c.agent.mode) << '\n'
     << "staleness_policy = " << io::staleness_name(c.agent.staleness) << '\n'
     << "neighbor_info = " << b(m.neighbor_info) << '\n'
     << "newer_neighbor = " << b(m.newer_neighbor) << '\n'
     << "reuse_last = " << b(m.reuse_last) << '\n'
     << "kappa_extension = " << b(m.kappa_extension) << '\n'
     << "increment_limit = " << b(m.increment_limit) << '\n'
     << "reuse_margin = " << format_double(m.reuse_margin) << "\n\n";

  const CommConfig& k = c.comm;
  os << "[comm]\n"
     << "delta = " << format_double(k.delta) << '\n'
     << "tau_min = " << format_double(k.tau_min) << '\n'
     << "tau_max = " << format_double(k.tau_max) << '\n'
     << "loss_rate = " << format_double(k.loss_rate) << '\n'
     << "decision_delay = " << format_double(k.decision_delay) << '\n'
     << "mu = " << k.mu << '\n'
     << "kappa_window = " << format_double(k.kappa_window) << '\n'
     << "heavy_loss_threshold = " << format_double(k.heavy_loss_threshold) << '\n'
     << "heavy_loss_extension = " << format_double(k.heavy_loss_extension) << '\n'
     << "buffer_retention = " << format_double(k.buffer_retention) << '\n'
     << "plan_history = " << format_double(k.plan_history) << "\n\n";

  os << "[leader]\nprofile = " << io::profile_name(c.leader) << '\n';
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantAccel>) {
          os << "accel = " << format_double(p.accel) << '\n';
          if (std::isfinite(p.v_cap)) os << "v_cap = " << format_double(p.v_cap) << '\n';
        } else if constexpr (std::is_same_v<P, AccelCruiseBrake>) {
          os << "accel = " << format_double(p.accel) << '\n'
             << "v_max = " << format_double(p.v_max) << '\n'
             << "brake_at = " << format_double(p.brake_at) << '\n';
        } else if constexpr (std::is_same_v<P, Fluctuating>) {
          os << "accel = " << format_double(p.accel) << '\n'
             << "cruise = " << format_double(p.cruise) << '\n'
             << "fluct_start = " << format_double(p.fluct_start) << '\n'
             << "period = " << format_double(p.period) << '\n'
             << "amplitude = " << format_double(p.amplitude) << '\n'
             << "periods = " << p.periods << '\n'
             << "brake_at = " << format_double(p.brake_at) << '\n';
        } else {
          if (!p.steps.empty()) os << "steps = " << io::schedule_text(p) << '\n';
        }
      },
      c.leader);

  os << "\n[vehicles]\n";
  for (const VehicleEntry& e : c.vehicles) {
    const VehicleSpec& s = e.spec;
    os << "vehicle = " << to_string(s.vclass) << " gap=" << format_double(e.gap)
       << " speed=" << format_double(e.speed) << " speed_max=" << format_double(s.speed_max)
       << " length=" << format_double(s.length) << " stop_gap=" << format_double(s.stop_gap)
       << " accel_max=" << format_double(s.accel_max)
       << " accel_min=" << format_double(s.accel_min)
       << " mech_delay=" << format_double(s.mech_delay) << " gamma=" << format_double(s.gamma)
       << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON encoding. Values are written as JSON scalars; reading goes through the
// same key handlers as the text format so both accept the same keys.

inline nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  const LossModules& m = c.agent.modules;
  auto& run = j["run"];
  run["name"] = c.name;
  run["duration"] = c.duration;
  run["seed"] = c.seed;
  run["pass_through"] = c.pass_through;
  if (c.gamma) run["gamma"] = *c.gamma;
  run["trace"] = c.trace;
  run["drop"] = io::drop_list(c.agent.ablation);
  run["mode"] = io::mode_name(c.agent.mode);
  run["staleness_policy"] = io::staleness_name(c.agent.staleness);
  run["neighbor_info"] = m.neighbor_info;
  run["newer_neighbor"] = m.newer_neighbor;
  run["reuse_last"] = m.reuse_last;
  run["kappa_extension"] = m.kappa_extension;
  run["increment_limit"] = m.increment_limit;
  run["reuse_margin"] = m.reuse_margin;

  const CommConfig& k = c.comm;
  auto& comm = j["comm"];
  comm["delta"] = k.delta;
  comm["tau_min"] = k.tau_min;
  comm["tau_max"] = k.tau_max;
  comm["loss_rate"] = k.loss_rate;
  comm["decision_delay"] = k.decision_delay;
  comm["mu"] = k.mu;
  comm["kappa_window"] = k.kappa_window;
  comm["heavy_loss_threshold"] = k.heavy_loss_threshold;
  comm["heavy_loss_extension"] = k.heavy_loss_extension;
  comm["buffer_retention"] = k.buffer_retention;
  comm["plan_history"] = k.plan_history;

  auto& lead = j["leader"];
  lead["profile"] = io::profile_name(c.leader);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantAccel>) {
          lead["accel"] = p.accel;
          if (std::isfinite(p.v_cap)) lead["v_cap"] = p.v_cap;
        } else if constexpr (std::is_same_v<P, AccelCruiseBrake>) {
          lead["accel"] = p.accel;
          lead["v_max"] = p.v_max;
          lead["brake_at"] = p.brake_at;
        } else if constexpr (std::is_same_v<P, Fluctuating>) {
          lead["accel"] = p.accel;
          lead["cruise"] = p.cruise;
          lead["fluct_start"] = p.fluct_start;
          lead["period"] = p.period;
          lead["amplitude"] = p.amplitude;
          lead["periods"] = p.periods;
          lead["brake_at"] = p.brake_at;
        } else {
          if (!p.steps.empty()) lead["steps"] = io::schedule_text(p);
        }
      },
      c.leader);

  auto& veh = j["vehicles"];
  veh = nlohmann::ordered_json::array();
  for (const VehicleEntry& e : c.vehicles) {
    const VehicleSpec& s = e.spec;
    veh.push_back({{"class", std::string(to_string(s.vclass))},
                   {"gap", e.gap},
                   {"speed", e.speed},
                   {"speed_max", s.speed_max},
                   {"length", s.length},
                   {"stop_gap", s.stop_gap},
                   {"accel_max", s.accel_max},
                   {"accel_min", s.accel_min},
                   {"mech_delay", s.mech_delay},
                   {"gamma", s.gamma}});
  }
  return j;
}

namespace io {

// JSON scalar as the text the key handlers expect. Numbers keep full
// precision through to_chars.
inline Value json_value(const nlohmann::json& v, const std::string& name) {
  Value out;
  if (v.is_string()) out.text = v.get<std::string>();
  else if (v.is_boolean()) out.text = v.get<bool>() ? "true" : "false";
  else if (v.is_number_unsigned()) out.text = std::to_string(v.get<std::uint64_t>());
  else if (v.is_number_integer()) out.text = std::to_string(v.get<std::int64_t>());
  else if (v.is_number_float()) out.text = format_double(v.get<double>());
  else throw ContractViolation(name + ": expected a scalar value");
  return out;
}

inline std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// JSON has no positions after parsing; key errors are reported by name.
template <class Fn>
void with_named_errors(Fn fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    throw ContractViolation(e.what());
  }
}

}  // namespace io

inline ScenarioConfig from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ContractViolation("scenario: expected a JSON object");
  ScenarioConfig cfg;
  for (const auto& [section, body] : j.items()) {
    if (section == "vehicles") continue;
    if (section != "run" && section != "comm" && section != "leader")
      throw ContractViolation(section + ": unknown section");
    if (!body.is_object()) throw ContractViolation(section + ": expected an object");
  }
  io::with_named_errors([&] {
    if (j.contains("run"))
      for (const auto& [k, v] : j["run"].items())
        io::apply_run_key(cfg, k, io::json_value(v, "run." + k));
    if (j.contains("comm"))
      for (const auto& [k, v] : j["comm"].items())
        io::apply_comm_key(cfg.comm, k, io::json_value(v, "comm." + k));
    if (j.contains("leader")) {
      const auto& l = j["leader"];
      if (!l.contains("profile")) throw ContractViolation("leader: 'profile' is required");
      std::map<std::string, io::Value> kv;
      for (const auto& [k, v] : l.items())
        if (k != "profile") kv.emplace(k, io::json_value(v, "leader." + k));
      cfg.leader = io::build_profile(io::json_value(l["profile"], "leader.profile"), kv);
    }
    if (!j.contains("vehicles") || !j["vehicles"].is_array())
      throw ContractViolation("vehicles: expected an array");
    for (const auto& v : j["vehicles"]) {
      const std::string where = "vehicles[" + std::to_string(cfg.vehicles.size()) + "].";
      if (!v.is_object() || !v.contains("class") || !v["class"].is_string())
        throw ContractViolation(where + "class: required");
      VehicleEntry e;
      e.spec = VehicleSpec::of_class(vehicle_class_from_string(v["class"].get<std::string>()));
      for (const auto& [k, val] : v.items())
        if (k != "class") io::apply_vehicle_key(e, k, io::json_value(val, where + k), where);
      cfg.vehicles.push_back(e);
    }
  });
  io::validate_profile(cfg.leader);
  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_scenario_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = io::line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(std::string("invalid JSON: ") + e.what(), line, col);
  }
  return from_json(j);
}

// Chooses the encoding by content: a leading '{' means JSON.
inline ScenarioConfig parse_scenario_string(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_scenario_json(text);
  return parse_scenario_text(text);
}

inline ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("scenario: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_string(ss.str());
}

}  // namespace socf
