#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "stable_opinf/io.h"

namespace stable_opinf::cli {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int CountLines(const fs::path& path) {
  const std::string text = Slurp(path);
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

// Runs the tool with `args` in `dir`; stdout and stderr go to dir/out.txt.
int RunTool(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" +
                          STABLE_OPINF_CLI_PATH + "' " + args + " > out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, Defaults) {
  const RunConfig cfg = config_from_json(default_config_json());
  EXPECT_EQ(cfg.r, 3);
  EXPECT_EQ(cfg.d, 4);
  EXPECT_FALSE(cfg.theta.has_value());
  EXPECT_EQ(cfg.mode, InferenceMode::kBounded);
  EXPECT_EQ(cfg.chain.nodes, 30);
  EXPECT_EQ(cfg.fom.num_snapshots, 200);
  EXPECT_EQ(cfg.ModelPath(), (fs::path("run") / "model.json").string());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  Json doc = default_config_json();
  doc["bogus"] = 1;
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = default_config_json();
  doc["fom"]["bogus"] = 1;
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = default_config_json();
  doc["d"] = 3;
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = default_config_json();
  doc["r"] = "three";
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = default_config_json();
  doc["mode"] = "stable";
  EXPECT_THROW(config_from_json(doc), ConfigError);
  doc = default_config_json();
  doc["theta"] = 5;  // larger than r
  EXPECT_THROW(config_from_json(doc), ConfigError);
}

TEST(Config, HashIsStable) {
  const Json a = default_config_json();
  Json b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b["r"] = 4;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Report, SortsDenseAsThetaEqualR) {
  std::vector<ReportRow> rows(4);
  rows[0].r = 3, rows[0].d = 4;
  rows[1].r = 3, rows[1].d = 4, rows[1].theta = 2;
  rows[2].r = 3, rows[2].d = 2;
  rows[3].r = 2, rows[3].d = 4, rows[3].theta = 1;
  sort_rows(&rows);
  EXPECT_EQ(rows[0].r, 2);
  EXPECT_EQ(rows[1].d, 2);
  EXPECT_EQ(rows[2].theta, 2);
  EXPECT_FALSE(rows[3].theta.has_value());
  const std::string md = render_markdown(rows, {});
  EXPECT_NE(md.find("| 3 | 4 | - |"), std::string::npos);
  EXPECT_EQ(render_csv({}), "r,d,theta,n_phi,err_inf,err_val,t_inf,t_sim\n");
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("stable_opinf_cli_" + std::to_string(::getpid()));
    fs::create_directories(root_);
    generate_status_ = RunTool(root_, "generate --data-dir data");
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path root_;
  static int generate_status_;
};

fs::path CliPipeline::root_;
int CliPipeline::generate_status_ = -1;

TEST_F(CliPipeline, GenerateWritesSnapshotFiles) {
  ASSERT_EQ(generate_status_, 0) << Slurp(root_ / "out.txt");
  for (const char* f : {"inference_displacements.csv", "inference_inputs.csv",
                        "validation_displacements.csv", "validation_inputs.csv"}) {
    EXPECT_EQ(CountLines(root_ / "data" / f), 201) << f;
  }
  EXPECT_TRUE(fs::is_regular_file(root_ / "data" / "generate.json"));
}

TEST_F(CliPipeline, GenerateIsDeterministic) {
  ASSERT_EQ(RunTool(root_, "generate --data-dir data2"), 0);
  for (const char* f : {"inference_displacements.csv", "validation_inputs.csv"}) {
    EXPECT_EQ(Slurp(root_ / "data" / f), Slurp(root_ / "data2" / f)) << f;
  }
}

TEST_F(CliPipeline, InferValidateVerify) {
  ASSERT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/t2 -r 3 -d 4 --theta 2"), 0)
      << Slurp(root_ / "out.txt");
  const Json rep = read_json((root_ / "runs/t2/infer_report.json").string());
  EXPECT_EQ(rep.at("n_phi"), 21);
  EXPECT_EQ(rep.at("theta"), 2);
  EXPECT_TRUE(rep.contains("certificate"));
  EXPECT_EQ(rep.at("certificate").at("passed"), true);
  EXPECT_TRUE(rep.at("provenance").contains("config_hash"));

  ASSERT_EQ(RunTool(root_, "validate --data-dir data --run-dir runs/t2 --plot-dofs 1,29"), 0)
      << Slurp(root_ / "out.txt");
  const Json val = read_json((root_ / "runs/t2/validate_report.json").string());
  EXPECT_LT(val.at("err_val").get<double>(), 0.5);
  EXPECT_EQ(CountLines(root_ / "runs/t2/rom_displacements.csv"), 201);
  EXPECT_TRUE(fs::is_regular_file(root_ / "runs/t2/dof_1.svg"));
  EXPECT_TRUE(fs::is_regular_file(root_ / "runs/t2/dof_29.svg"));

  // Re-simulating on the inference data reproduces err_inf.
  ASSERT_EQ(RunTool(root_, "validate --data-dir data --run-dir runs/t2 --on inference"), 0);
  const Json on_inf = read_json((root_ / "runs/t2/validate_inference_report.json").string());
  EXPECT_NEAR(on_inf.at("err_val").get<double>(), rep.at("err_inf").get<double>(), 1e-12);

  EXPECT_EQ(RunTool(root_, "verify --run-dir runs/t2"), 0) << Slurp(root_ / "out.txt");
}

TEST_F(CliPipeline, DenseQuadraticAndUnconstrained) {
  ASSERT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/d2 -d 2 --mode unconstrained"),
            0);
  const Json rep = read_json((root_ / "runs/d2/infer_report.json").string());
  EXPECT_EQ(rep.at("n_phi"), 6);
  EXPECT_TRUE(rep.at("theta").is_null());
  EXPECT_FALSE(rep.contains("certificate"));
  EXPECT_EQ(RunTool(root_, "verify --run-dir runs/d2"), 0);
}

TEST_F(CliPipeline, ZeroModelHasUnitError) {
  ASSERT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/z -d 2 --mode unconstrained"),
            0);
  Json model = read_json((root_ / "runs/z/model.json").string());
  for (auto& v : model["k"]) v = 0.0;
  for (auto& row : model["B"]) {
    for (auto& v : row) v = 0.0;
  }
  write_json((root_ / "runs/z/model.json").string(), model);
  ASSERT_EQ(RunTool(root_, "validate --data-dir data --run-dir runs/z"), 0)
      << Slurp(root_ / "out.txt");
  const Json val = read_json((root_ / "runs/z/validate_report.json").string());
  EXPECT_NEAR(val.at("err_val").get<double>(), 1.0, 1e-12);
}

TEST_F(CliPipeline, ReportTable) {
  ASSERT_EQ(RunTool(root_, "report --output empty"), 0);
  EXPECT_EQ(CountLines(root_ / "empty.md"), 2);
  EXPECT_EQ(CountLines(root_ / "empty.csv"), 1);

  ASSERT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/r1 -r 3 -d 2"), 0);
  ASSERT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/r2 -r 2 -d 4 --theta 1"), 0);
  ASSERT_EQ(RunTool(root_, "validate --data-dir data --run-dir runs/r2"), 0);
  ASSERT_EQ(RunTool(root_, "report --output table runs/r1 runs/r2 runs/none"), 0);
  const std::string csv = Slurp(root_ / "table.csv");
  std::istringstream in(csv);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(first.rfind("2,4,1,", 0), 0u) << csv;
  EXPECT_EQ(second.rfind("3,2,-,6,", 0), 0u) << csv;
  EXPECT_EQ(second.substr(second.size() - 1), ",");  // r1 was never validated

  const Json summary = read_json((root_ / "table.json").string());
  EXPECT_EQ(summary.at("rows"), 2);
  EXPECT_EQ(summary.at("missing").size(), 3u);
  EXPECT_NE(Slurp(root_ / "out.txt").find("missing artifact"), std::string::npos);
}

TEST_F(CliPipeline, ExitCodes) {
  EXPECT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/x -d 3"), 2);
  EXPECT_EQ(RunTool(root_, "infer --data-dir nowhere --run-dir runs/x"), 2);
  EXPECT_EQ(RunTool(root_, "infer --no-such-flag"), 2);
  EXPECT_EQ(RunTool(root_, "validate --run-dir runs/empty"), 2);
  EXPECT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/x", "STABLE_OPINF_MAX_ITER=abc"),
            2);

  {
    std::ofstream cfg(root_ / "bad.json");
    cfg << R"({"r": 3, "colour": "red"})";
  }
  EXPECT_EQ(RunTool(root_, "infer -c bad.json"), 2);
  EXPECT_NE(Slurp(root_ / "out.txt").find("colour"), std::string::npos);

  EXPECT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/x -r 40"), 3);
  EXPECT_NE(Slurp(root_ / "out.txt").find("[pod]"), std::string::npos);
  EXPECT_EQ(RunTool(root_, "infer --data-dir data --run-dir runs/x", "STABLE_OPINF_MAX_ITER=2"),
            3);
  EXPECT_NE(Slurp(root_ / "out.txt").find("[inference]"), std::string::npos);
}

TEST_F(CliPipeline, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream cfg(root_ / "cfg.json");
    cfg << R"({"paths": {"data_dir": "data", "run_dir": "runs/cfg"}, "d": 2, "r": 2})";
  }
  ASSERT_EQ(RunTool(root_, "infer -c cfg.json -r 3"), 0) << Slurp(root_ / "out.txt");
  const Json rep = read_json((root_ / "runs/cfg/infer_report.json").string());
  EXPECT_EQ(rep.at("r"), 3);
  EXPECT_EQ(rep.at("d"), 2);
}

}  // namespace
}  // namespace stable_opinf::cli
