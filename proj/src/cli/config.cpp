#include "fockmetro/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fockmetro/errors.hpp"
#include "fockmetro/metrology.hpp"

namespace fockmetro::cli {

using nlohmann::json;

namespace {

struct TaskNames {
  Task task;
  const char* name;
  const char* sub;
};

constexpr TaskNames kTasks[] = {
    {Task::QfiSweep, "qfi_sweep", "qfi-sweep"},
    {Task::BetaSweep, "beta_sweep", "beta-sweep"},
    {Task::SensitivitySweep, "sensitivity_sweep", "sensitivity-sweep"},
    {Task::FixedObsSweep, "fixed_obs_sweep", "fixed-obs-sweep"},
    {Task::DecoherenceSweep, "decoherence_sweep", "decoherence-sweep"},
    {Task::ScSweep, "sc_sweep", "sc-sweep"},
    {Task::FitBeta, "fit_beta", "fit-beta"},
    {Task::StateInfo, "state_info", "state-info"},
};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::ConfigError, "field '" + field + "': " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

double num(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(field, "must be finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "must be an integer");
  return j.get<int>();
}

// {"values": [...]}, {"start", "stop", "per_decade"} (log) or {"start", "stop", "count"} (linear)
std::vector<double> parse_grid(const json& j, const std::string& field, bool allow_zero) {
  if (j.is_array()) return parse_grid(json{{"values", j}}, field, allow_zero);
  if (!j.is_object()) bad(field, "must be an object or array");
  only_keys(j, field, {"values", "start", "stop", "per_decade", "count"});
  std::vector<double> out;
  if (j.contains("values")) {
    if (j.size() != 1) bad(field, "'values' excludes start/stop");
    const json& v = j["values"];
    if (!v.is_array() || v.empty()) bad(field + ".values", "must be a non-empty array");
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(num(v[i], field + ".values[" + std::to_string(i) + "]"));
  } else {
    if (!j.contains("start")) bad(field + ".start", "required");
    if (!j.contains("stop")) bad(field + ".stop", "required");
    const double a = num(j["start"], field + ".start");
    const double b = num(j["stop"], field + ".stop");
    if (j.contains("per_decade") == j.contains("count")) bad(field, "give exactly one of per_decade, count");
    if (j.contains("per_decade")) {
      const int pd = integer(j["per_decade"], field + ".per_decade");
      if (pd < 1) bad(field + ".per_decade", "must be >= 1");
      if (!(a > 0.0)) bad(field + ".start", "must be > 0 on a log grid");
      if (!(b >= a)) bad(field + ".stop", "must be >= start");
      out = log_grid(a, b, pd);
    } else {
      const int n = integer(j["count"], field + ".count");
      if (n < 1) bad(field + ".count", "must be >= 1");
      if (!(b >= a)) bad(field + ".stop", "must be >= start");
      if (n == 1 && b != a) bad(field + ".count", "a single point needs start == stop");
      for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (allow_zero ? !(out[i] >= 0.0) : !(out[i] > 0.0))
      bad(field, allow_zero ? "values must be >= 0" : "values must be > 0");
    if (i > 0 && !(out[i] > out[i - 1])) bad(field, "values must be strictly increasing");
  }
  return out;
}

FamilySpec parse_family(const json& j) {
  if (!j.is_object()) bad("family", "must be an object");
  only_keys(j, "family", {"kind", "m", "alpha", "parameter"});
  if (!j.contains("kind") || !j["kind"].is_string()) bad("family.kind", "required string");
  const std::string k = j["kind"].get<std::string>();
  FamilySpec f;
  if (k == "coherent") f.kind = FamilyKind::Coherent;
  else if (k == "squeezed" || k == "squeezed_vacuum") f.kind = FamilyKind::Squeezed;
  else if (k == "fock") f.kind = FamilyKind::Fock;
  else if (k == "mth_phase") f.kind = FamilyKind::MthPhase;
  else if (k == "multisqueezed") f.kind = FamilyKind::Multisqueezed;
  else bad("family.kind", "unknown family '" + k + "'");

  const bool has_m = f.kind == FamilyKind::MthPhase || f.kind == FamilyKind::Multisqueezed;
  if (has_m) {
    if (!j.contains("m")) bad("family.m", "required for " + k);
    f.m = integer(j["m"], "family.m");
    if (f.m < 3) bad("family.m", "must be >= 3");
  } else if (j.contains("m")) {
    bad("family.m", "not used by " + k);
  }
  if (j.contains("alpha")) {
    if (f.kind != FamilyKind::Multisqueezed) bad("family.alpha", "only multisqueezed has a pump");
    f.alpha = num(j["alpha"], "family.alpha");
    if (!(f.alpha > 0.0)) bad("family.alpha", "must be > 0");
  }
  if (j.contains("parameter")) {
    f.parameter = num(j["parameter"], "family.parameter");
    if (!(*f.parameter >= 0.0)) bad("family.parameter", "must be >= 0");
    if (f.kind == FamilyKind::Fock && std::floor(*f.parameter) != *f.parameter)
      bad("family.parameter", "Fock level must be an integer");
  }
  return f;
}

Truncation parse_truncation(const json& j) {
  if (!j.is_object()) bad("truncation", "must be an object");
  only_keys(j, "truncation", {"tail_tol", "tail_window", "start_dim", "max_dim", "pump_dim"});
  Truncation t;
  if (j.contains("tail_tol")) {
    t.tail_tol = num(j["tail_tol"], "truncation.tail_tol");
    if (!(t.tail_tol > 0.0)) bad("truncation.tail_tol", "must be > 0");
  }
  if (j.contains("tail_window")) {
    t.tail_window = integer(j["tail_window"], "truncation.tail_window");
    if (t.tail_window < 1) bad("truncation.tail_window", "must be >= 1");
  }
  if (j.contains("start_dim")) {
    t.start_dim = integer(j["start_dim"], "truncation.start_dim");
    if (t.start_dim < 2) bad("truncation.start_dim", "must be >= 2");
  }
  if (j.contains("max_dim")) {
    t.max_dim = integer(j["max_dim"], "truncation.max_dim");
    if (t.max_dim < 2) bad("truncation.max_dim", "must be >= 2");
  }
  if (j.contains("pump_dim")) {
    t.pump_dim = integer(j["pump_dim"], "truncation.pump_dim");
    if (t.pump_dim < 2) bad("truncation.pump_dim", "must be >= 2");
  }
  if (t.start_dim > t.max_dim) bad("truncation.start_dim", "exceeds max_dim");
  return t;
}

void require(const json& j, const char* field, Task t) {
  if (!j.contains(field)) bad(field, std::string("required by ") + task_name(t));
}

}  // namespace

const char* task_name(Task t) {
  for (const auto& e : kTasks)
    if (e.task == t) return e.name;
  return "?";
}

const char* task_subcommand(Task t) {
  for (const auto& e : kTasks)
    if (e.task == t) return e.sub;
  return "?";
}

std::optional<Task> task_from_string(const std::string& s) {
  for (const auto& e : kTasks)
    if (s == e.name || s == e.sub) return e.task;
  return std::nullopt;
}

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::Coherent: return "coherent";
    case FamilyKind::Squeezed: return "squeezed";
    case FamilyKind::Fock: return "fock";
    case FamilyKind::MthPhase: return "mth_phase";
    case FamilyKind::Multisqueezed: return "multisqueezed";
  }
  return "?";
}

SweepConfig parse_config(const std::string& text, std::optional<Task> expected) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("<root>", "config must be a JSON object");
  only_keys(j, "", {"task", "family", "grid", "strengths", "nbar", "pool_order", "observable", "channel", "s_max",
                    "alpha_list", "truncation", "output", "workers", "cache"});

  SweepConfig c;
  if (j.contains("task")) {
    if (!j["task"].is_string()) bad("task", "must be a string");
    auto t = task_from_string(j["task"].get<std::string>());
    if (!t) bad("task", "unknown task '" + j["task"].get<std::string>() + "'");
    if (expected && *t != *expected)
      bad("task", std::string("config is for ") + task_name(*t) + " but subcommand is " + task_subcommand(*expected));
    c.task = *t;
  } else if (expected) {
    c.task = *expected;
  } else {
    bad("task", "required");
  }
  const Task t = c.task;

  require(j, "family", t);
  c.family = parse_family(j["family"]);

  if (j.contains("truncation")) c.truncation = parse_truncation(j["truncation"]);
  if (j.contains("output")) {
    if (!j["output"].is_string() || j["output"].get<std::string>().empty()) bad("output", "must be a non-empty string");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("workers")) {
    c.workers = integer(j["workers"], "workers");
    if (c.workers < 1 || c.workers > 256) bad("workers", "must be in [1, 256]");
  }
  if (j.contains("cache")) {
    if (!j["cache"].is_boolean()) bad("cache", "must be a boolean");
    c.cache = j["cache"].get<bool>();
  }
  if (j.contains("nbar")) {
    c.nbar = num(j["nbar"], "nbar");
    if (!(*c.nbar > 0.0)) bad("nbar", "must be > 0");
  }
  if (j.contains("s_max")) {
    c.s_max = num(j["s_max"], "s_max");
    if (!(c.s_max > 1e-4)) bad("s_max", "must exceed the scan start 1e-4");
  }
  if (j.contains("channel")) {
    const json& ch = j["channel"];
    std::string name;
    if (ch.is_string()) {
      name = ch.get<std::string>();
    } else if (ch.is_object()) {
      only_keys(ch, "channel", {"kind"});
      if (!ch.contains("kind") || !ch["kind"].is_string()) bad("channel.kind", "required string");
      name = ch["kind"].get<std::string>();
    } else {
      bad("channel", "must be a string or object");
    }
    try {
      c.channel = channel_from_string(name);
    } catch (const Error&) {
      bad("channel", "unknown channel '" + name + "'");
    }
  }
  if (j.contains("pool_order")) {
    c.pool_order = integer(j["pool_order"], "pool_order");
    if (c.pool_order < 1 || c.pool_order > 16) bad("pool_order", "must be in [1, 16]");
  }
  if (j.contains("observable")) {
    if (!j["observable"].is_string()) bad("observable", "must be a string");
    c.observable = j["observable"].get<std::string>();
    if (c.observable != "b3p" && c.observable != "b4p" && c.observable != "bms")
      bad("observable", "must be one of b3p, b4p, bms");
  }
  if (j.contains("alpha_list")) {
    const json& a = j["alpha_list"];
    if (!a.is_array()) bad("alpha_list", "must be an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double v = num(a[i], "alpha_list[" + std::to_string(i) + "]");
      if (!(v > 0.0)) bad("alpha_list[" + std::to_string(i) + "]", "must be > 0");
      if (!c.alpha_list.empty() && !(v > c.alpha_list.back())) bad("alpha_list", "must be strictly increasing");
      c.alpha_list.push_back(v);
    }
  }

  const bool pump = c.family.kind == FamilyKind::Multisqueezed;
  if (pump && t != Task::FitBeta && !j["family"].contains("alpha")) bad("family.alpha", "required for multisqueezed");

  switch (t) {
    case Task::QfiSweep:
    case Task::BetaSweep:
      require(j, "grid", t);
      c.grid = parse_grid(j["grid"], "grid", false);
      if (t == Task::BetaSweep && c.grid.size() < 3) bad("grid", "beta_sweep needs at least 3 points");
      break;
    case Task::SensitivitySweep:
      require(j, "grid", t);
      require(j, "pool_order", t);
      c.grid = parse_grid(j["grid"], "grid", false);
      break;
    case Task::FixedObsSweep:
      require(j, "grid", t);
      require(j, "observable", t);
      c.grid = parse_grid(j["grid"], "grid", false);
      if (c.observable == "bms" && !(pump || c.family.kind == FamilyKind::MthPhase))
        bad("observable", "bms needs a family with an order m");
      break;
    case Task::DecoherenceSweep:
      require(j, "nbar", t);
      require(j, "channel", t);
      require(j, "strengths", t);
      c.strengths = parse_grid(j["strengths"], "strengths", true);
      break;
    case Task::ScSweep:
      require(j, "grid", t);
      require(j, "channel", t);
      c.grid = parse_grid(j["grid"], "grid", false);
      break;
    case Task::FitBeta:
      require(j, "grid", t);
      require(j, "alpha_list", t);
      if (!pump) bad("family.kind", "fit_beta needs the multisqueezed family");
      if (j["family"].contains("alpha")) bad("family.alpha", "fit_beta takes pump amplitudes from alpha_list");
      c.grid = parse_grid(j["grid"], "grid", false);
      if (c.grid.size() < 3) bad("grid", "fit_beta needs at least 3 points per curve");
      if (c.alpha_list.size() < 3) bad("alpha_list", "needs at least 3 amplitudes");
      break;
    case Task::StateInfo:
      if (c.nbar.has_value() == c.family.parameter.has_value())
        bad("nbar", "state_info needs exactly one of nbar, family.parameter");
      break;
  }
  if (c.family.kind == FamilyKind::Fock) {
    if (t != Task::StateInfo && t != Task::QfiSweep) bad("family.kind", "fock states carry no phase information here");
    for (double v : c.grid)
      if (std::floor(v) != v) bad("grid", "Fock occupations must be integers");
    if (c.nbar && std::floor(*c.nbar) != *c.nbar) bad("nbar", "Fock occupation must be an integer");
  }
  return c;
}

SweepConfig load_config(const std::string& path, std::optional<Task> expected) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "field 'config': cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), expected);
}

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

std::string family_key(const FamilySpec& f) {
  std::string s = family_name(f.kind);
  s += ";m=" + std::to_string(f.m) + ";alpha=" + exact(f.alpha);
  if (f.parameter) s += ";p=" + exact(*f.parameter);
  return s;
}

std::string truncation_key(const Truncation& t) {
  return "tol=" + exact(t.tail_tol) + ";win=" + std::to_string(t.tail_window) + ";start=" +
         std::to_string(t.start_dim) + ";max=" + std::to_string(t.max_dim) + ";pump=" + std::to_string(t.pump_dim);
}

}  // namespace fockmetro::cli
