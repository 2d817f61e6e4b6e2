#include "pgland/tools/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pgland::tools {

namespace {

constexpr double kInf = 1e300;

KeySpec integer(std::string name, long def, std::string help, double lo, double hi = kInf) {
  return {std::move(name), KeyKind::Integer, std::to_string(def), std::move(help), lo, hi, false, false};
}

KeySpec real(std::string name, std::string def, std::string help, double lo, double hi, bool lo_open,
             bool hi_open) {
  return {std::move(name), KeyKind::Real, std::move(def), std::move(help), lo, hi, lo_open, hi_open};
}

KeySpec positive(std::string name, std::string def, std::string help) {
  return real(std::move(name), std::move(def), std::move(help), 0.0, kInf, true, false);
}

KeySpec text(std::string name, std::string def, std::string help) {
  return {std::move(name), KeyKind::Text, std::move(def), std::move(help)};
}

std::vector<KeySpec> common(const std::string& experiment, long seed) {
  return {
      integer("seed", seed, "random seed", 0, 9.2e18),
      text("output", experiment + ".csv", "CSV path; the sidecar is written next to it with .meta appended"),
      integer("threads", 0, "worker threads for Monte Carlo work (0 = hardware concurrency)", 0, 1024),
  };
}

KeySpec gamma_key() { return real("gamma", "0.9", "discount factor", 0.0, 1.0, true, true); }

std::vector<KeySpec> descent_keys(const std::string& grad_tol, long max_iters = 10'000) {
  return {
      real("beta", "0.5", "backtracking factor", 0.0, 1.0, true, true),
      integer("max_halvings", 60, "backtracking reductions before giving up", 1, 1000),
      positive("grad_tol", grad_tol, "stop once ||grad|| <= grad_tol (1 + |loss|)"),
      integer("max_iters", max_iters, "iteration cap", 1, 1e8),
  };
}

std::vector<KeySpec> inventory_keys() {
  return {
      integer("horizon", 5, "ordering periods H", 1, 1000),
      positive("order_cost", "1", "per-unit order cost c"),
      positive("holding_cost", "1", "per-unit holding cost b"),
      positive("backlog_cost", "2", "per-unit backlog cost p (must exceed c)"),
      positive("demand_max", "10", "demand ~ U[0, demand_max]"),
      real("init_lo", "0", "initial inventory ~ U[init_lo, init_hi]", -kInf, kInf, false, false),
      real("init_hi", "5", "upper end of the initial inventory law", -kInf, kInf, false, false),
      integer("oracle_paths", 100'000, "Monte Carlo paths per golden-section evaluation", 1, 1e9),
      positive("oracle_tol", "1e-3", "golden-section tolerance"),
  };
}

std::vector<KeySpec> build(const std::string& experiment, long seed, std::vector<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> keys = common(experiment, seed);
  for (auto& part : parts) keys.insert(keys.end(), part.begin(), part.end());
  std::sort(keys.begin(), keys.end(), [](const KeySpec& a, const KeySpec& b) { return a.name < b.name; });
  return keys;
}

const std::map<std::string, std::vector<KeySpec>>& tables() {
  static const std::map<std::string, std::vector<KeySpec>> t = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    m["tabular"] = build("tabular", 1,
                         {{integer("n_states", 100, "number of states", 1, 1e5),
                           integer("n_actions", 20, "number of actions", 1, 1e4), gamma_key()},
                          descent_keys("1e-8")});
    m["stopping"] = build("stopping", 1,
                          {{integer("n_contexts", 10, "contexts |X|", 1, 1e5),
                            integer("n_offers", 50, "offers |Y|", 1, 1e6), gamma_key()},
                           descent_keys("1e-11", 1'000'000)});
    m["lqr"] = build("lqr", 1,
                     {{integer("n", 3, "state dimension", 1, 100), integer("k", 2, "control dimension", 1, 100),
                       gamma_key(),
                       real("noise_scale", "0", "noise covariance is noise_scale^2 I", 0.0, kInf, false, false),
                       positive("init_scale", "0.5", "initial gain entries ~ U[-init_scale, init_scale]")},
                      descent_keys("1e-8")});
    m["inventory"] = build("inventory", 1,
                           {inventory_keys(),
                            {real("theta0", "5", "initial threshold for every period", 0.0, kInf, false, false),
                             integer("train_paths", 10'000, "paths in the fixed sample-average objective", 1, 1e9),
                             integer("n_paths", 100'000, "paths for the final evaluation", 1, 1e9)},
                            descent_keys("1e-8", 200)});
    m["verify-descent"] = build("verify-descent", 2,
                                {{integer("n", 100, "number of (mdp, theta) cases", 1, 1e7),
                                  integer("max_states", 10, "states drawn from 1..max_states", 1, 1e4),
                                  integer("max_actions", 5, "actions drawn from 2..max_actions", 2, 1e3),
                                  gamma_key()}});
    m["verify-approximation"] = build(
        "verify-approximation", 3,
        {{integer("n_mdps", 5, "number of seeded MDPs", 1, 1e5), integer("n_states", 6, "states per MDP", 2, 20),
          integer("n_actions", 3, "actions per MDP", 2, 100), gamma_key()},
         descent_keys("1e-8")});
    m["verify-softpi"] = build("verify-softpi", 4,
                               {{integer("n", 100, "number of (policy, alpha) cases", 1, 1e7),
                                 integer("n_mdps", 5, "cases cycle over this many seeded MDPs", 1, 1e5),
                                 integer("n_states", 5, "states per MDP", 1, 1e4),
                                 integer("n_actions", 3, "actions per MDP", 1, 1e3), gamma_key()}});
    m["verify-finite-horizon"] = build(
        "verify-finite-horizon", 5,
        {inventory_keys(),
         {integer("n", 10, "number of random threshold vectors", 1, 1e6),
          integer("n_paths", 100'000, "paths per directional derivative", 1, 1e9),
          positive("step", "1e-2", "central-difference step along the stage direction"),
          positive("stage_tol", "1e-2", "thresholds this close to the optimum count as optimal")}});
    m["reinforce-check"] = build("reinforce-check", 10,
                                 {{integer("n_samples", 100'000, "trajectories per estimate", 1, 1e10),
                                   integer("n_mdps", 2, "seeded MDPs", 1, 1e4),
                                   integer("n_thetas", 3, "random parameters per MDP", 1, 1e4),
                                   integer("n_states", 3, "states per MDP", 1, 1e3),
                                   integer("n_actions", 2, "actions per MDP", 1, 1e3), gamma_key()}});
    return m;
  }();
  return t;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_long(const std::string& s, long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec == std::errc() && ptr == end) return true;
  // Also accept integral values written like 1e5.
  double d = 0.0;
  if (!parse_double(s, d) || d != std::floor(d) || std::abs(d) > 9.2e18) return false;
  out = static_cast<long>(d);
  return true;
}

void check_value(const KeySpec& key, const std::string& value) {
  if (key.kind == KeyKind::Text) {
    if (value.empty()) throw ConfigError("'" + key.name + "' must not be empty");
    return;
  }
  double v = 0.0;
  if (key.kind == KeyKind::Integer) {
    long n = 0;
    if (!parse_long(value, n)) throw ConfigError("'" + key.name + "' must be an integer, got '" + value + "'");
    v = static_cast<double>(n);
  } else if (!parse_double(value, v)) {
    throw ConfigError("'" + key.name + "' must be a finite number, got '" + value + "'");
  }
  const bool below = key.lo_open ? v <= key.lo : v < key.lo;
  const bool above = key.hi_open ? v >= key.hi : v > key.hi;
  if (below || above) {
    std::ostringstream range;
    range << (key.lo_open ? "(" : "[");
    if (key.lo > -kInf) range << key.lo; else range << "-inf";
    range << ", ";
    if (key.hi < kInf) range << key.hi; else range << "inf";
    range << (key.hi_open ? ")" : "]");
    throw ConfigError("'" + key.name + "' = " + value + " is outside " + range.str());
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "tabular",       "stopping",
      "lqr",           "inventory",
      "verify-descent", "verify-approximation",
      "verify-softpi", "verify-finite-horizon",
      "reinforce-check"};
  return names;
}

const std::vector<KeySpec>& experiment_keys(const std::string& experiment) {
  const auto it = tables().find(experiment);
  if (it == tables().end()) throw ConfigError("unknown experiment '" + experiment + "'");
  return it->second;
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": missing key");
    if (out.count(key)) throw ConfigError(origin + ":" + std::to_string(number) + ": '" + key + "' set twice");
    out[key] = value;
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

ExperimentConfig resolve_config(const std::string& experiment, const KeyValues& file_values,
                                const KeyValues& flag_values) {
  const std::vector<KeySpec>& keys = experiment_keys(experiment);
  KeyValues values;
  for (const KeySpec& k : keys) values[k.name] = k.default_value;
  auto apply = [&](const KeyValues& layer, const std::string& origin) {
    for (const auto& [raw_key, value] : layer) {
      const std::string key = normalize_key(raw_key);
      if (key == "experiment") {
        if (value != experiment) {
          throw ConfigError("'experiment' in " + origin + " is '" + value + "' but the command is '" + experiment + "'");
        }
        continue;
      }
      if (!values.count(key)) throw ConfigError("unknown key '" + key + "' for experiment '" + experiment + "'");
      values[key] = value;
    }
  };
  apply(file_values, "the config file");
  apply(flag_values, "the flags");
  for (const KeySpec& k : keys) check_value(k, values[k.name]);
  auto num = [&](const std::string& key) {
    double v = 0.0;
    parse_double(values[key], v);
    return v;
  };
  if (values.count("backlog_cost") && num("backlog_cost") <= num("order_cost")) {
    throw ConfigError("'backlog_cost' must exceed 'order_cost'");
  }
  if (values.count("init_lo") && num("init_lo") > num("init_hi")) {
    throw ConfigError("'init_lo' must not exceed 'init_hi'");
  }
  return ExperimentConfig(experiment, std::move(values));
}

const std::string& ExperimentConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("experiment '" + experiment_ + "' has no key '" + key + "'");
  return it->second;
}

long ExperimentConfig::integer(const std::string& key) const {
  long n = 0;
  if (!parse_long(raw(key), n)) throw ConfigError("'" + key + "' must be an integer");
  return n;
}

double ExperimentConfig::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(raw(key), v)) throw ConfigError("'" + key + "' must be a finite number");
  return v;
}

const std::string& ExperimentConfig::text(const std::string& key) const { return raw(key); }

}  // namespace pgland::tools
