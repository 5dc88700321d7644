#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stable_opinf/fom.h"
#include "stable_opinf/inference.h"
#include "stable_opinf/io.h"
#include "stable_opinf/rom.h"

namespace stable_opinf::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kMaxIterEnv = "STABLE_OPINF_MAX_ITER";

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitPipeline = 3 };

/// Rejected configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pipeline failure tagged with the stage that raised it (exit code 3).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunConfig {
  // Paths.
  std::string data_dir = "data";
  std::string run_dir = "run";
  std::string model_path;   // empty: <run_dir>/model.json
  std::string report_path = "report";  // writes <report_path>.md and .csv
  std::vector<std::string> runs;       // run directories for `report`

  // Reduced model.
  int r = 3;
  int d = 4;
  std::optional<int> theta;  // absent: dense basis
  std::optional<int> budget;
  InferenceMode mode = InferenceMode::kBounded;
  Hyperparams hyperparams;
  std::optional<int> num_snapshots;  // keep only the first N inference samples
  int max_iter = 200;
  std::uint64_t seed = 42;

  // ROM time stepping.
  Integrator integrator = Integrator::kRk4;
  double dt = 1e-3;
  std::string validate_on = "validation";  // or "inference"
  std::vector<int> plot_dofs;               // one-based; empty: input DoF

  // Data generation.
  ChainModel chain;
  FomOptions fom;
  InputProfile inference_input{ProfileKind::kInference};
  InputProfile validation_input{ProfileKind::kValidation};

  std::string ModelPath() const;
};

/// Every key accepted in a config document, with its default value.
Json default_config_json();

/// Parses and range-checks a config document; absent keys take their
/// defaults. Unknown keys and values of the wrong type are rejected with
/// ConfigError.
RunConfig config_from_json(const Json& doc);

/// Reads `path` (if non-empty) on top of the defaults, then applies the
/// iteration cap from the environment.
Json load_config_document(const std::string& path);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& doc);

/// Provenance block written into every output document.
Json provenance(const std::string& command, const Json& doc);

std::string snapshot_path(const std::string& dir, const std::string& set,
                          const std::string& kind);

// Each command returns an exit code and throws ConfigError or StageError.
int cmd_generate(const RunConfig& cfg, const Json& doc);
int cmd_infer(const RunConfig& cfg, const Json& doc);
int cmd_validate(const RunConfig& cfg, const Json& doc);
int cmd_report(const RunConfig& cfg, const Json& doc);
int cmd_verify(const RunConfig& cfg, const Json& doc);

/// One row of the results table.
struct ReportRow {
  int r = 0, d = 0;
  std::optional<int> theta;
  int n_phi = 0;
  double err_inf = 0.0;
  std::optional<double> err_val;
  double t_inf = 0.0;
  std::optional<double> t_sim;
};

/// Sorts by (r, d, theta) with a dense row ranked as theta = r.
void sort_rows(std::vector<ReportRow>* rows);
std::string render_markdown(const std::vector<ReportRow>& rows,
                            const std::vector<std::string>& missing);
std::string render_csv(const std::vector<ReportRow>& rows);

}  // namespace stable_opinf::cli
