#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"
#include "stokesheat/error.hpp"

using namespace stokesheat;
using namespace stokesheat::cli;

namespace {

std::string config_error(const std::string& text, const Overrides& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
    return e.what();
  }
  ADD_FAILURE() << "expected a configuration error";
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("stokesheat_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(Config, MinimalFileFillsDefaults) {
  const auto c = parse_config(R"({"basis": {"Lambda_max": 50}})");
  EXPECT_EQ(c.basis.lambda_max, 50);
  EXPECT_EQ(c.effective_k_max(), default_k_max(50));
  EXPECT_EQ(c.schedule.gamma, 1.5);
  EXPECT_EQ(c.schedule.epsilon, 0.5);
  EXPECT_EQ(c.schedule.lambda_cap, 1024);
  EXPECT_EQ(c.region.x2[0], 0.3);
  EXPECT_EQ(c.sweeps.t_list.size(), 4u);
  EXPECT_EQ(c.io.format, OutputFormat::csv);
  EXPECT_EQ(c.make_kernel().a(), 0.25);
  // The echo round-trips to the same configuration.
  const auto again = parse_config(config_json(c));
  EXPECT_EQ(config_json(again), config_json(c));
}

TEST(Config, GammaOneNamesTheKey) {
  const auto msg = config_error(R"({"basis": {"Lambda_max": 50}, "schedule": {"gamma": 1.0}})");
  EXPECT_EQ(msg.rfind("schedule.gamma", 0), 0u) << msg;
}

TEST(Config, FlagOverridesFile) {
  Overrides ov;
  ov.lambda_max = 100;
  ov.region = std::array<double, 4>{0, 1, 0.2, 0.4};
  ov.format = "structured";
  const auto c = parse_config(R"({"basis": {"Lambda_max": 50}})", ov);
  EXPECT_EQ(c.basis.lambda_max, 100);
  EXPECT_EQ(c.region.x1[1], 1);
  EXPECT_EQ(c.region.x2[0], 0.2);
  EXPECT_EQ(c.io.format, OutputFormat::structured);
}

TEST(Config, StrictRejections) {
  EXPECT_NE(config_error("{}").find("basis.Lambda_max"), std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50, "lambda": 1}})").find("basis.lambda"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "extra": {}})").find("extra"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": "50"}})").find("expected a number"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "region": {"x2": [0.4, 0.4]}})")
                .find("region.x2"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "schedule": {"epsilon": 1}})")
                .find("schedule.epsilon"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "schedule": {"T": 2}})")
                .find("schedule.T"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "kernel": {"support": [0.5, 1.5]}})")
                .find("kernel.support"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "io": {"format": "xml"}})")
                .find("io.format"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"basis": {"Lambda_max": 50}, "sweeps": {"T_list": [0.1, -1]}})")
                .find("sweeps.T_list[1]"),
            std::string::npos);
  EXPECT_NE(config_error("{not json").find("not valid JSON"), std::string::npos);
}

TEST(Output, VersionedCsvAndStructured) {
  Table t{"demo", 2, {"a", "b", "c"}, {}};
  t.add({1.0 / 3.0, std::int64_t{7}, std::string("x")});
  t.add({std::numeric_limits<double>::infinity(), std::int64_t{-1}, std::string("y")});
  EXPECT_EQ(t.csv(),
            "# stokesheat demo v2\na,b,c\n0.33333333333333331,7,x\ninf,-1,y\n");
  const auto js = t.json();
  EXPECT_NE(js.find("\"kind\": \"stokesheat.demo\""), std::string::npos);
  EXPECT_NE(js.find("[0.33333333333333331, 7, \"x\"]"), std::string::npos);
  EXPECT_NE(js.find("[null, -1, \"y\"]"), std::string::npos);
  EXPECT_THROW(t.add({1.0}), Error);
}

TEST(Commands, EigensCachedRunsAreByteIdentical) {
  TempDir dir;
  Overrides ov;
  ov.out_dir = (dir.path / "out").string();
  ov.cache = (dir.path / "cache" / "basis.json").string();
  const auto cfg = parse_config(R"({"basis": {"Lambda_max": 50}})", ov);
  std::ostringstream out, log;
  ASSERT_EQ(cmd_eigens(cfg, out, log), 0);
  const auto first = slurp(dir.path / "out" / "modes.csv");
  EXPECT_NE(first.find("0,1,-,9.869604401089358"), std::string::npos);
  EXPECT_NE(first.find("0,2,-,39.47841760435743"), std::string::npos);
  EXPECT_TRUE(log.str().empty());

  ASSERT_EQ(cmd_eigens(cfg, out, log), 0);
  EXPECT_EQ(slurp(dir.path / "out" / "modes.csv"), first);
  EXPECT_TRUE(log.str().empty());

  std::ofstream(dir.path / "cache" / "basis.json") << "{ corrupted";
  ASSERT_EQ(cmd_eigens(cfg, out, log), 0);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  EXPECT_EQ(slurp(dir.path / "out" / "modes.csv"), first);
}

TEST(Commands, ControlEdgeCases) {
  TempDir dir;
  Overrides ov;
  ov.out_dir = dir.path.string();
  std::ostringstream out, log;
  const auto zero = parse_config(
      R"({"basis": {"Lambda_max": 60}, "schedule": {"Lambda_cap": 60, "z0_modes": 0}})", ov);
  EXPECT_EQ(cmd_control(zero, out, log), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path / "run_report.csv"));

  const auto below = parse_config(
      R"({"basis": {"Lambda_max": 60}, "schedule": {"Lambda_cap": 5, "z0_modes": 10}})", ov);
  EXPECT_EQ(cmd_control(below, out, log), 1);

  const auto small = parse_config(R"({"basis": {"Lambda_max": 60}})", ov);
  try {
    cmd_control(small, out, log);
    ADD_FAILURE() << "expected a configuration error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
    EXPECT_EQ(std::string(e.what()).rfind("basis.Lambda_max", 0), 0u);
  }
}

TEST(Commands, SweepsAreCheckedAgainstTheBasis) {
  std::ostringstream out, log;
  const auto empty = parse_config(R"({"basis": {"Lambda_max": 60}, "sweeps": {"Lambda_list": []}})");
  EXPECT_THROW(cmd_specineq(empty, out, log), Error);
  const auto big = parse_config(R"({"basis": {"Lambda_max": 60}})");
  try {
    cmd_observe(big, out, log);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sweeps.Lambda_list[2]"), std::string::npos);
  }
}

TEST(Commands, ObserveSinglePointGivesOneRow) {
  TempDir dir;
  Overrides ov;
  ov.out_dir = dir.path.string();
  const auto cfg = parse_config(
      R"({"basis": {"Lambda_max": 60}, "sweeps": {"Lambda_list": [40], "T_list": [0.3]}})", ov);
  std::ostringstream out, log;
  EXPECT_EQ(cmd_observe(cfg, out, log), 0);
  const auto csv = slurp(dir.path / "observe.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("# stokesheat observe v1\nLambda,T,dim,C_obs,log_C_obs\n40,", 0), 0u);
}
