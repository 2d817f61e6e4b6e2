#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgland::tools {

/// Bad experiment name, unknown key, or a value that fails to parse or lies
/// outside its range. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyKind { Integer, Real, Text };

struct KeySpec {
  std::string name;
  KeyKind kind = KeyKind::Real;
  std::string default_value;
  std::string help;
  double lo = -1e300;
  double hi = 1e300;
  bool lo_open = false;
  bool hi_open = false;
};

using KeyValues = std::map<std::string, std::string>;

const std::vector<std::string>& experiment_names();

/// Keys accepted by an experiment, with defaults. Throws ConfigError for an
/// unknown experiment.
const std::vector<KeySpec>& experiment_keys(const std::string& experiment);

/// Dashes become underscores, so `n-states` and `n_states` name the same key.
std::string normalize_key(std::string key);

/// `key = value` lines; blank lines and `#` comments are skipped. An
/// `experiment` entry is kept and checked by resolve_config.
KeyValues parse_config_text(const std::string& text, const std::string& origin = "config");
KeyValues read_config_file(const std::string& path);

/// Fully resolved, validated settings for one run.
class ExperimentConfig {
 public:
  ExperimentConfig(std::string experiment, KeyValues values)
      : experiment_(std::move(experiment)), values_(std::move(values)) {}

  const std::string& experiment() const { return experiment_; }
  const KeyValues& values() const { return values_; }

  long integer(const std::string& key) const;
  double real(const std::string& key) const;
  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
  const std::string& text(const std::string& key) const;

 private:
  const std::string& raw(const std::string& key) const;

  std::string experiment_;
  KeyValues values_;
};

/// Defaults, then the config file, then flags; every key is checked against
/// the experiment's table and every value against its range.
ExperimentConfig resolve_config(const std::string& experiment, const KeyValues& file_values = {},
                                const KeyValues& flag_values = {});

}  // namespace pgland::tools
