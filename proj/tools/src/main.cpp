#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "pgland/tools/config.hpp"
#include "pgland/tools/experiments.hpp"
#include "pgland/version.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::string flag_name(const std::string& key) {
  std::string flag = key;
  for (char& c : flag) {
    if (c == '_') c = '-';
  }
  return "--" + flag;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pgland::tools;

  CLI::App app{"Policy-gradient landscape experiments: convergence runs and numeric theorem checks."};
  app.set_version_flag("--version", std::string(pgland::kVersion));
  app.require_subcommand(1);

  struct Command {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Command> commands;
  for (const std::string& name : experiment_names()) {
    Command& cmd = commands[name];
    cmd.app = app.add_subcommand(name);
    cmd.app->add_option("--config", cmd.config_file, "key = value file; flags override it");
    for (const KeySpec& key : experiment_keys(name)) {
      cmd.app->add_option(flag_name(key.name), cmd.flags[key.name], key.help + " (default " + key.default_value + ")");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (auto& [name, cmd] : commands) {
    if (!cmd.app->parsed()) continue;
    KeyValues flags;
    for (const auto& [key, value] : cmd.flags) {
      if (cmd.app->count(flag_name(key)) > 0) flags[key] = value;
    }
    ExperimentConfig cfg("", {});
    try {
      const KeyValues file = cmd.config_file.empty() ? KeyValues{} : read_config_file(cmd.config_file);
      cfg = resolve_config(name, file, flags);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    try {
      return run(cfg, std::cerr);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kRuntimeError;
    }
  }
  return kConfigError;
}
