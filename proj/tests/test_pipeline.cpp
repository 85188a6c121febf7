#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "mareforge/error.hpp"
#include "mareforge/fixture.hpp"
#include "mareforge/json_io.hpp"
#include "mareforge/pipeline.hpp"

using namespace mareforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mareforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_fixture(const fs::path& dir, FixtureKind kind, std::size_t n) {
  const fs::path p = dir / "input.csv";
  save_csv(make_fixture(kind, n, 3), p);
  return p;
}

}  // namespace

TEST(Fixture, Properties) {
  const auto s = make_fixture(FixtureKind::ar1_error, 500, 1, 50.0);
  EXPECT_EQ(s.size(), 500u);
  EXPECT_EQ(s.cap(), 50.0);
  EXPECT_EQ(s.step(), std::chrono::seconds(3600));
  EXPECT_EQ(format_datetime(s.timestamps()[0]), "2013-07-01 00:00:00");
  bool zero = false;
  for (std::size_t t = 0; t < s.size(); ++t) {
    EXPECT_GE(s.y()[t], 0.0);
    EXPECT_LE(s.y()[t], 50.0);
    EXPECT_LE(s.x()[t], 0.95 * 50.0 + 1e-12);
    EXPECT_NEAR(s.x()[t] / 0.25, std::round(s.x()[t] / 0.25), 1e-9);
    zero = zero || s.x()[t] == 0.0;
  }
  EXPECT_TRUE(zero);
  EXPECT_EQ(to_csv(s), to_csv(make_fixture(FixtureKind::ar1_error, 500, 1, 50.0)));
  EXPECT_THROW(make_fixture(FixtureKind::iid_error, 50, 1), DomainError);
  EXPECT_EQ(parse_fixture_kind("heteroscedastic"), FixtureKind::heteroscedastic);
}

TEST(Json, FittedModelRoundTrip) {
  const auto model = fit_all(make_fixture(FixtureKind::heteroscedastic, 400, 2), 0.1);
  const auto back = fitted_model_from_json(to_json(model));
  EXPECT_EQ(back, model);
  EXPECT_THROW(fitted_model_from_json("{not json"), DataError);
}

TEST(Json, ArmaModelRoundTrip) {
  ArmaModel m;
  m.p = 2;
  m.q = 1;
  m.a = {0.5, -0.1};
  m.b = {0.3};
  m.sigma_delta = 0.123456789012345;
  m.bic = -42.5;
  EXPECT_EQ(arma_model_from_json(to_json(m)), m);
}

TEST(Pipeline, RunWritesArtifacts) {
  const auto dir = scratch("run");
  RunConfig cfg;
  cfg.input_csv = write_fixture(dir, FixtureKind::iid_error, 300);
  cfg.target_mape = 10.0;
  cfg.a = 0.1;
  cfg.n_scenarios = 4;
  cfg.output_dir = dir / "out";
  std::ostringstream log;
  const auto res = run(cfg, log);
  for (const char* f : {"fitted_model.json", "target.json", "scenarios.csv", "scenarios.json", "scores.json", "run.log"})
    EXPECT_TRUE(fs::exists(cfg.output_dir / f)) << f;
  EXPECT_EQ(res.scenarios.size(), 4u);
  ASSERT_TRUE(res.scores.has_value());
  EXPECT_NE(log.str().find("r_mhat="), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(cfg.output_dir / "target.json"));
  EXPECT_DOUBLE_EQ(j["target_mape"].get<double>(), 10.0);
  EXPECT_FALSE(j["weights"].empty());
}

TEST(Pipeline, InfeasibleTargetLogsMaximum) {
  const auto dir = scratch("infeasible");
  RunConfig cfg;
  cfg.input_csv = write_fixture(dir, FixtureKind::iid_error, 300);
  cfg.target_mape = 1e5;
  cfg.a = 0.1;
  cfg.output_dir = dir / "out";
  std::ostringstream log;
  EXPECT_THROW(run(cfg, log), InfeasibleTarget);
  const auto text = read_file(cfg.output_dir / "run.log");
  EXPECT_NE(text.find("max_feasible_mape="), std::string::npos);
  EXPECT_NE(text.find("error="), std::string::npos);
}

TEST(Pipeline, InvertedRolesAndSidSlice) {
  const auto dir = scratch("invert");
  RunConfig cfg;
  cfg.input_csv = write_fixture(dir, FixtureKind::heteroscedastic, 300);
  cfg.invert_roles = true;
  cfg.sid_start = "2013-07-02 00:00";
  cfg.sid_end = "2013-07-03 23:00";
  cfg.target_mape = 8.0;
  cfg.a = 0.1;
  cfg.n_scenarios = 2;
  cfg.output_dir = dir / "out";
  std::ostringstream log;
  const auto res = run(cfg, log);
  EXPECT_EQ(res.scenarios.x.size(), 48u);
  const auto input = load_input(cfg);
  EXPECT_EQ(input.x()[24], res.scenarios.x[0]);  // roles swapped: x is the actuals column
}

#ifdef MAREFORGE_CLI
TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string cli = MAREFORGE_CLI;
  const auto input = (dir / "in.csv").string();
  const auto status = [](const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  EXPECT_EQ(status(cli + " make-fixture --kind iid-error --n 300 --seed 2 --output " + input), 0);
  EXPECT_EQ(status(cli + " run --input " + input + " --target-mape 10 --a 0.1 --scenarios 2 --output-dir " +
                   (dir / "ok").string()),
            0);
  EXPECT_EQ(status(cli + " run --input " + input + " --target-mape 100000 --a 0.1 --output-dir " +
                   (dir / "bad").string()),
            3);
  EXPECT_EQ(status(cli + " run --input " + (dir / "missing.csv").string() + " --target-mape 10 --output-dir " +
                   (dir / "missing").string()),
            2);
  EXPECT_EQ(status(cli + " run --bogus"), 1);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = scratch("cli_config");
  const std::string cli = MAREFORGE_CLI;
  save_csv(make_fixture(FixtureKind::iid_error, 300, 5), dir / "in.csv");
  const auto cfg = dir / "run.toml";
  write_file_atomic(cfg, "input = \"" + (dir / "in.csv").string() + "\"\ntarget_mape = 12\nscenarios = 4\n" +
                             "output-dir = \"" + (dir / "out").string() + "\"\n");
  ASSERT_EQ(std::system((cli + " run --config " + cfg.string() + " --scenarios 2 >/dev/null 2>&1").c_str()), 0);
  const auto table = load_table(dir / "out" / "scenarios.csv");
  EXPECT_EQ(table.names.size(), 3u);  // x plus two scenarios
  EXPECT_NE(read_file(dir / "out" / "run.log").find("target_mape=12"), std::string::npos);
}
#endif
