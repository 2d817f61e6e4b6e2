#include <clocale>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "pgland/tools/config.hpp"
#include "pgland/tools/csv.hpp"

using namespace pgland::tools;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pgland_test_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PGLAND_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DefaultsFileThenFlags) {
  const ExperimentConfig d = resolve_config("tabular");
  EXPECT_EQ(d.integer("n_states"), 100);
  EXPECT_EQ(d.integer("n_actions"), 20);
  EXPECT_DOUBLE_EQ(d.real("gamma"), 0.9);
  const KeyValues file = parse_config_text("# comment\nn-states = 7\n\ngamma = 0.5  # trailing\n");
  const ExperimentConfig f = resolve_config("tabular", file);
  EXPECT_EQ(f.integer("n_states"), 7);
  EXPECT_DOUBLE_EQ(f.real("gamma"), 0.5);
  const ExperimentConfig both = resolve_config("tabular", file, {{"gamma", "0.25"}});
  EXPECT_EQ(both.integer("n_states"), 7);
  EXPECT_DOUBLE_EQ(both.real("gamma"), 0.25);
  EXPECT_EQ(resolve_config("tabular", {{"n_states", "1e3"}}).integer("n_states"), 1000);
}

TEST(Config, Rejections) {
  EXPECT_THROW(resolve_config("nope"), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"bogus", "1"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"gamma", "1"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"gamma", "0"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"gamma", "x"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"n_states", "2.5"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"n_states", "0"}}), ConfigError);
  EXPECT_THROW(resolve_config("inventory", {{"backlog_cost", "0.5"}}), ConfigError);
  EXPECT_THROW(resolve_config("inventory", {{"init_lo", "6"}}), ConfigError);
  EXPECT_THROW(resolve_config("tabular", {{"experiment", "lqr"}}), ConfigError);
  EXPECT_NO_THROW(resolve_config("tabular", {{"experiment", "tabular"}}));
  EXPECT_THROW(parse_config_text("just words"), ConfigError);
  EXPECT_THROW(parse_config_text("a = 1\na = 2"), ConfigError);
  try {
    resolve_config("lqr", {{"gamma", "1.5"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
}

TEST(Config, EveryExperimentResolvesWithDefaults) {
  for (const std::string& name : experiment_names()) {
    const ExperimentConfig c = resolve_config(name);
    EXPECT_EQ(c.experiment(), name);
    EXPECT_EQ(c.text("output"), name + ".csv");
    EXPECT_GE(c.integer("threads"), 0);
  }
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(12L), "12");
  const char* old = std::setlocale(LC_NUMERIC, "de_DE.UTF-8");
  EXPECT_EQ(format_number(2.5), "2.5");
  if (old) std::setlocale(LC_NUMERIC, "C");
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_EQ(format_vector(m), "1 2 3 4");
}

TEST(Csv, WriterAndSidecar) {
  const fs::path p = scratch("w.csv");
  {
    CsvWriter w(p.string(), {"a", "b"});
    w.row({"1", "2"});
    EXPECT_THROW(w.row({"1"}), std::logic_error);
  }
  EXPECT_EQ(slurp(p), "a,b\n1,2\n");
  Sidecar s;
  s.set("x", 1.5);
  s.set("y", true);
  s.set("x", 2L);
  ASSERT_NE(s.find("x"), nullptr);
  EXPECT_EQ(*s.find("x"), "2");
  EXPECT_EQ(s.find("z"), nullptr);
  s.write((p.string() + ".meta"));
  EXPECT_EQ(slurp(p.string() + ".meta"), "x = 2\ny = 1\n");
}

TEST(Cli, ExitCodesAndOutputs) {
  const fs::path out = scratch("lqr.csv");
  EXPECT_EQ(run_cli("lqr --n 2 --k 1 --output " + out.string()), 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,loss,optimality_gap,grad_norm,step_size,wall_time_s");
  const std::string meta = slurp(out.string() + ".meta");
  EXPECT_NE(meta.find("experiment = lqr"), std::string::npos);
  EXPECT_NE(meta.find("config.n = 2"), std::string::npos);

  EXPECT_EQ(run_cli("lqr --gamma 2 --output " + out.string()), 1);
  EXPECT_EQ(run_cli("lqr --no-such-flag 1"), 1);
  EXPECT_EQ(run_cli("not-an-experiment"), 1);
  EXPECT_EQ(run_cli(""), 1);

  const fs::path cfg = scratch("c.conf");
  std::ofstream(cfg) << "experiment = tabular\n";
  EXPECT_EQ(run_cli("lqr --config " + cfg.string()), 1);
  EXPECT_EQ(run_cli("lqr --config " + scratch("missing.conf").string()), 1);

  std::ofstream(cfg) << "experiment = verify-softpi\nn = 5\n";
  const fs::path soft = scratch("soft.csv");
  EXPECT_EQ(run_cli("verify-softpi --config " + cfg.string() + " --n 3 --output " + soft.string()), 0);
  const std::string soft_meta = slurp(soft.string() + ".meta");
  EXPECT_NE(soft_meta.find("config.n = 3"), std::string::npos);
  EXPECT_NE(soft_meta.find("result.checks = 3"), std::string::npos);
  EXPECT_NE(soft_meta.find("result.failures = 0"), std::string::npos);
  fs::remove_all(out.parent_path());
}
