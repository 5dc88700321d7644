#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include "stable_opinf/clustering.h"
#include "stable_opinf/error.h"
#include "stable_opinf/pod.h"
#include "stable_opinf/svg_plot.h"

namespace stable_opinf::cli {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json ProfileJson(const InputProfile& p) {
  return {{"kind", std::string(to_string(p.kind))},
          {"amplitude", p.amplitude},
          {"frequency", p.frequency},
          {"phase", p.phase},
          {"duration", p.duration}};
}

// Overlays `patch` on `base`; keys absent from `base` are rejected.
void MergeInto(Json& base, const Json& patch, const std::string& where) {
  if (!patch.is_object()) {
    throw ConfigError(where.empty() ? "config must be a JSON object"
                                    : "'" + where + "' must be an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      MergeInto(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T Get(const Json& doc, const char* key, const std::string& where = "") {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + (where.empty() ? "" : where + ".") + key +
                      "' has the wrong type");
  }
}

template <typename T>
std::optional<T> GetOptional(const Json& doc, const char* key) {
  if (doc.at(key).is_null()) return std::nullopt;
  return Get<T>(doc, key);
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

InputProfile ProfileFromJson(const Json& j, const std::string& where) {
  InputProfile p;
  try {
    p.kind = parse_profile_kind(Get<std::string>(j, "kind", where));
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  p.amplitude = Get<double>(j, "amplitude", where);
  p.frequency = Get<double>(j, "frequency", where);
  p.phase = Get<double>(j, "phase", where);
  p.duration = Get<double>(j, "duration", where);
  Require(std::isfinite(p.amplitude) && std::isfinite(p.frequency) &&
              std::isfinite(p.phase) && std::isfinite(p.duration),
          where + ": profile parameters must be finite");
  return p;
}

// Non-finite values are stored as strings so the document stays valid JSON.
Json Number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double ReadNumber(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw Error(ErrorCode::kParse, "expected a number");
}

template <typename F>
auto Stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError("io", "cannot create directory '" + dir + "'");
}

void RequireFile(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw ConfigError("missing input file '" + path + "'");
  }
}

SnapshotSet LoadSet(const std::string& dir, const std::string& set) {
  const std::string disp = snapshot_path(dir, set, "displacements");
  const std::string in = snapshot_path(dir, set, "inputs");
  RequireFile(disp);
  RequireFile(in);
  return Stage("io", [&] { return read_snapshots(disp, in); });
}

struct RomRun {
  Trajectory trajectory;
  MatrixXd X;  // reduced states at the reference times; NaN after divergence
  double err = kInf;
  bool diverged = false;
};

RomRun RunRom(const RomModel& model, const SnapshotSet& ref,
              const RunConfig& cfg) {
  if (ref.num_inputs() != model.n_u) {
    throw StageError("rom", "data has " + std::to_string(ref.num_inputs()) +
                                " inputs, model expects " +
                                std::to_string(model.n_u));
  }
  if (ref.num_dofs() != model.V.rows()) {
    throw StageError("rom", "data has " + std::to_string(ref.num_dofs()) +
                                " DoFs, model basis has " +
                                std::to_string(model.V.rows()));
  }
  return Stage("rom", [&] {
    const InputSeries input{ref.times, ref.inputs};
    const int n = ref.num_snapshots();
    const double t0 = ref.times[0];
    const double span = ref.times[n - 1] - t0;
    const int steps = static_cast<int>(std::lround(span / cfg.dt));
    SimulationOptions opts;
    opts.integrator = cfg.integrator;
    if (n > 1) {
      const double ratio = ref.time_step() / cfg.dt;
      const long k = std::lround(ratio);
      if (k >= 1 && std::abs(ratio - k) < 1e-9 * ratio) opts.record_every = static_cast<int>(k);
    }
    VectorXd y0 = ref.displacements.col(0);
    if (model.mean.size() == y0.size()) y0 -= model.mean;
    const VectorXd x0 = model.V.transpose() * y0;
    RomRun run;
    run.trajectory = simulate(
        model, [&](double t) { return input(t); }, x0,
        VectorXd::Zero(model.r), t0, cfg.dt, steps, opts);
    run.diverged = run.trajectory.diverged;
    run.X = sample_at(run.trajectory, ref.times);
    if (run.diverged) {
      const double t_last = run.trajectory.times[run.trajectory.size() - 1];
      for (int i = 0; i < n; ++i) {
        if (ref.times[i] > t_last + 0.5 * cfg.dt) {
          run.X.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
      run.err = kInf;
    } else {
      run.err = error_metric(ref.displacements, model.V, run.X, model.mean).err;
    }
    return run;
  });
}

Json CheckJson(const ModelCheck& c) {
  const auto& cert = c.certificate;
  return {{"passed", c.passed()},
          {"min_eig_m", c.min_eig_m},
          {"min_eig_c", c.min_eig_c},
          {"min_eig_g", cert.min_eig_g},
          {"min_eig_h", cert.has_h ? Json(cert.min_eig_h) : Json()},
          {"match_residual_g", cert.match_residual_g},
          {"match_residual_h", cert.has_h ? Json(cert.match_residual_h) : Json()},
          {"min_positivity", cert.min_positivity},
          {"min_euler", cert.has_h ? Json(cert.min_euler) : Json()}};
}

std::string Fmt(const char* spec, double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string RunConfig::ModelPath() const {
  return model_path.empty() ? (fs::path(run_dir) / "model.json").string()
                            : model_path;
}

Json default_config_json() {
  const RunConfig c;
  const Hyperparams& h = c.hyperparams;
  const ChainModel& ch = c.chain;
  return {
      {"paths",
       {{"data_dir", c.data_dir},
        {"run_dir", c.run_dir},
        {"model", c.model_path},
        {"report", c.report_path}}},
      {"runs", Json::array()},
      {"r", c.r},
      {"d", c.d},
      {"theta", nullptr},
      {"budget", nullptr},
      {"mode", std::string(to_string(c.mode))},
      {"hyperparams",
       {{"eps", nullptr},
        {"eps_rel", h.eps_rel},
        {"delta_m", h.delta_m},
        {"delta_c", h.delta_c}}},
      {"num_snapshots", nullptr},
      {"max_iter", c.max_iter},
      {"seed", c.seed},
      {"integrator", std::string(to_string(c.integrator))},
      {"dt", c.dt},
      {"validate_on", c.validate_on},
      {"plot_dofs", Json::array()},
      {"fom",
       {{"nodes", ch.nodes},
        {"law", std::string(to_string(ch.law))},
        {"mass", ch.mass},
        {"k1", ch.k1},
        {"k3", ch.k3},
        {"a", ch.a},
        {"alpha", ch.alpha},
        {"beta", ch.beta},
        {"input_dof", ch.input_dof},
        {"t_end", c.fom.t_end},
        {"num_snapshots", c.fom.num_snapshots},
        {"dt", c.fom.dt}}},
      {"inputs",
       {{"inference", ProfileJson(c.inference_input)},
        {"validation", ProfileJson(c.validation_input)}}},
  };
}

RunConfig config_from_json(const Json& user) {
  Json doc = default_config_json();
  MergeInto(doc, user, "");
  RunConfig c;
  const Json& paths = doc.at("paths");
  c.data_dir = Get<std::string>(paths, "data_dir", "paths");
  c.run_dir = Get<std::string>(paths, "run_dir", "paths");
  c.model_path = Get<std::string>(paths, "model", "paths");
  c.report_path = Get<std::string>(paths, "report", "paths");
  c.runs = Get<std::vector<std::string>>(doc, "runs");

  c.r = Get<int>(doc, "r");
  c.d = Get<int>(doc, "d");
  c.theta = GetOptional<int>(doc, "theta");
  c.budget = GetOptional<int>(doc, "budget");
  try {
    c.mode = parse_mode(Get<std::string>(doc, "mode"));
    c.integrator = parse_integrator(Get<std::string>(doc, "integrator"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const Json& hp = doc.at("hyperparams");
  if (!hp.at("eps").is_null()) c.hyperparams.eps = Get<double>(hp, "eps", "hyperparams");
  c.hyperparams.eps_rel = Get<double>(hp, "eps_rel", "hyperparams");
  c.hyperparams.delta_m = Get<double>(hp, "delta_m", "hyperparams");
  c.hyperparams.delta_c = Get<double>(hp, "delta_c", "hyperparams");
  c.num_snapshots = GetOptional<int>(doc, "num_snapshots");
  c.max_iter = Get<int>(doc, "max_iter");
  c.seed = Get<std::uint64_t>(doc, "seed");
  c.dt = Get<double>(doc, "dt");
  c.validate_on = Get<std::string>(doc, "validate_on");
  c.plot_dofs = Get<std::vector<int>>(doc, "plot_dofs");

  const Json& f = doc.at("fom");
  c.chain.nodes = Get<int>(f, "nodes", "fom");
  try {
    c.chain.law = parse_spring_law(Get<std::string>(f, "law", "fom"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  c.chain.mass = Get<double>(f, "mass", "fom");
  c.chain.k1 = Get<double>(f, "k1", "fom");
  c.chain.k3 = Get<double>(f, "k3", "fom");
  c.chain.a = Get<double>(f, "a", "fom");
  c.chain.alpha = Get<double>(f, "alpha", "fom");
  c.chain.beta = Get<double>(f, "beta", "fom");
  c.chain.input_dof = Get<int>(f, "input_dof", "fom");
  c.fom.t_end = Get<double>(f, "t_end", "fom");
  c.fom.num_snapshots = Get<int>(f, "num_snapshots", "fom");
  c.fom.dt = Get<double>(f, "dt", "fom");
  c.inference_input = ProfileFromJson(doc.at("inputs").at("inference"), "inputs.inference");
  c.validation_input = ProfileFromJson(doc.at("inputs").at("validation"), "inputs.validation");

  Require(c.r >= 1, "r must be at least 1");
  Require(c.d >= 2 && c.d % 2 == 0, "d must be an even integer >= 2");
  Require(!c.theta || (*c.theta >= 1 && *c.theta <= c.r),
          "theta must lie in [1, r]");
  Require(!c.budget || *c.budget >= 1, "budget must be positive");
  Require(!c.budget || c.theta, "budget requires a sparse selection (theta)");
  Require(!c.hyperparams.eps || *c.hyperparams.eps >= 0.0,
          "eps must be nonnegative");
  Require(c.hyperparams.eps_rel >= 0.0, "eps_rel must be nonnegative");
  Require(c.hyperparams.delta_m >= 0.0 && c.hyperparams.delta_c >= 0.0,
          "delta_m and delta_c must be nonnegative");
  Require(!c.num_snapshots || *c.num_snapshots >= 5,
          "num_snapshots must be at least 5");
  Require(c.max_iter >= 1, "max_iter must be positive");
  Require(c.dt > 0.0 && std::isfinite(c.dt), "dt must be positive");
  Require(c.validate_on == "validation" || c.validate_on == "inference",
          "validate_on must be 'validation' or 'inference'");
  for (int k : c.plot_dofs) Require(k >= 1, "plot_dofs are one-based");
  Require(c.fom.t_end > 0.0, "fom.t_end must be positive");
  Require(c.fom.num_snapshots >= 5, "fom.num_snapshots must be at least 5");
  Require(c.fom.dt > 0.0, "fom.dt must be positive");
  try {
    c.chain.Validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("fom: ") + e.what());
  }
  return c;
}

Json load_config_document(const std::string& path) {
  Json doc = default_config_json();
  if (!path.empty()) {
    Json user;
    try {
      user = read_json(path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    MergeInto(doc, user, "");
  }
  if (const char* env = std::getenv(kMaxIterEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1000000) {
      throw ConfigError(std::string(kMaxIterEnv) + " must be a positive integer");
    }
    doc["max_iter"] = v;
  }
  return doc;
}

std::string config_hash(const Json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json provenance(const std::string& command, const Json& doc) {
  return {{"tool", "stable_opinf"},
          {"version", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"command", command},
          {"config_hash", config_hash(doc)},
          {"seed", doc.at("seed")}};
}

std::string snapshot_path(const std::string& dir, const std::string& set,
                          const std::string& kind) {
  return (fs::path(dir) / (set + "_" + kind + ".csv")).string();
}

int cmd_generate(const RunConfig& cfg, const Json& doc) {
  EnsureDir(cfg.data_dir);
  Json sets = Json::object();
  for (const auto& [name, profile] :
       {std::pair{std::string("inference"), cfg.inference_input},
        std::pair{std::string("validation"), cfg.validation_input}}) {
    const SnapshotSet snaps =
        Stage("fom", [&] { return simulate_fom(cfg.chain, profile, cfg.fom); });
    Stage("io", [&] {
      write_snapshots(snapshot_path(cfg.data_dir, name, "displacements"),
                      snapshot_path(cfg.data_dir, name, "inputs"), snaps);
    });
    sets[name] = {{"num_snapshots", snaps.num_snapshots()},
                  {"dofs", snaps.num_dofs()},
                  {"inputs", snaps.num_inputs()},
                  {"profile", ProfileJson(profile)}};
    std::cout << name << ": " << snaps.num_snapshots() << " snapshots, "
              << snaps.num_dofs() << " DoFs\n";
  }
  Json out = {{"sets", sets},
              {"fom", doc.at("fom")},
              {"provenance", provenance("generate", doc)}};
  Stage("io", [&] { write_json((fs::path(cfg.data_dir) / "generate.json").string(), out); });
  return kExitOk;
}

int cmd_infer(const RunConfig& cfg, const Json& doc) {
  SnapshotSet train = LoadSet(cfg.data_dir, "inference");
  if (cfg.num_snapshots) {
    Require(*cfg.num_snapshots <= train.num_snapshots(),
            "num_snapshots exceeds the " + std::to_string(train.num_snapshots()) +
                " available samples");
    train = train.Head(*cfg.num_snapshots);
  }
  for (int k : cfg.plot_dofs) {
    Require(k <= train.num_dofs(), "plot_dofs entry exceeds the number of DoFs");
  }

  const ReducedDataset data = Stage("pod", [&] {
    train.Validate();
    return reduce(train, compute_basis(train.displacements, cfg.r));
  });

  const auto start = std::chrono::steady_clock::now();
  const ClusterSelection selection = Stage("clustering", [&] {
    return cfg.theta ? select_clusters(data.sigma_full, cfg.r, *cfg.theta, cfg.d,
                                       cfg.budget)
                     : dense_selection(cfg.r, cfg.d);
  });
  InferOptions options;
  options.solver.max_iter = cfg.max_iter;
  options.verify.seed = cfg.seed;
  auto [model, rep] = Stage("inference", [&] {
    return infer(data, selection, cfg.mode, cfg.hyperparams, options);
  });
  const double t_inf = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();

  const RomRun run = RunRom(model, train, cfg);

  EnsureDir(cfg.run_dir);
  if (const fs::path parent = fs::path(cfg.ModelPath()).parent_path(); !parent.empty()) {
    EnsureDir(parent.string());
  }
  Json prov = provenance("infer", doc);
  prov["data_hash"] = model.data_hash;
  Stage("io", [&] { save_model(cfg.ModelPath(), model, prov); });

  Json report = {
      {"r", cfg.r},
      {"d", cfg.d},
      {"theta", cfg.theta ? Json(*cfg.theta) : Json()},
      {"budget", cfg.budget ? Json(*cfg.budget) : Json()},
      {"mode", std::string(to_string(cfg.mode))},
      {"num_snapshots", train.num_snapshots()},
      {"n_phi", rep.n_phi},
      {"clusters", selection.num_clusters()},
      {"err_inf", Number(run.err)},
      {"diverged_inf", run.diverged},
      {"t_inf", t_inf},
      {"objective", rep.objective},
      {"solver_status", std::string(to_string(rep.status))},
      {"iterations", rep.iterations},
      {"eps", model.eps},
      {"model", cfg.ModelPath()},
      {"provenance", prov},
  };
  if (rep.check) report["certificate"] = CheckJson(*rep.check);
  Stage("io", [&] {
    write_json((fs::path(cfg.run_dir) / "infer_report.json").string(), report);
  });
  std::cout << "n_phi " << rep.n_phi << "  err_inf " << format_double(run.err)
            << "  t_inf " << Fmt("%.3g", t_inf) << " s  status "
            << to_string(rep.status) << '\n';
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, const Json& doc) {
  RequireFile(cfg.ModelPath());
  const SnapshotSet ref = LoadSet(cfg.data_dir, cfg.validate_on);
  for (int k : cfg.plot_dofs) {
    Require(k <= ref.num_dofs(), "plot_dofs entry exceeds the number of DoFs");
  }
  const RomModel model = Stage("io", [&] { return load_model(cfg.ModelPath()); });
  const RomRun run = RunRom(model, ref, cfg);
  const double t_sim = run.trajectory.t_sim;

  EnsureDir(cfg.run_dir);
  const fs::path dir(cfg.run_dir);
  MatrixXd Y = model.V * run.X;
  if (model.mean.size() == Y.rows()) Y.colwise() += model.mean;
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= Y.rows(); ++i) header.push_back("y_" + std::to_string(i));
  Stage("io", [&] {
    write_series_csv((dir / "rom_displacements.csv").string(), header, ref.times, Y);
    write_trajectory((dir / "rom_reduced.csv").string(), run.trajectory);
  });

  std::vector<int> dofs = cfg.plot_dofs;
  if (dofs.empty()) dofs.push_back(ref.num_dofs());
  std::vector<std::string> plots;
  for (int k : dofs) {
    PlotSpec spec;
    spec.title = "DoF " + std::to_string(k) + " (" + cfg.validate_on + " input)";
    spec.y_label = "displacement";
    std::vector<PlotSeries> series{
        {"FOM", ref.times, ref.displacements.row(k - 1).transpose(), "#1f77b4", false},
        {"ROM", ref.times, Y.row(k - 1).transpose(), "#d62728", true}};
    const std::string name = "dof_" + std::to_string(k) + ".svg";
    Stage("io", [&] { write_text((dir / name).string(), render_line_plot(spec, series)); });
    plots.push_back(name);
  }

  Json report = {
      {"dataset", cfg.validate_on},
      {"err_val", Number(run.err)},
      {"diverged", run.diverged},
      {"t_sim", t_sim},
      {"num_snapshots", ref.num_snapshots()},
      {"integrator", std::string(to_string(cfg.integrator))},
      {"dt", cfg.dt},
      {"model", cfg.ModelPath()},
      {"plots", plots},
      {"provenance", provenance("validate", doc)},
  };
  const std::string name =
      cfg.validate_on == "validation" ? "validate_report.json"
                                      : "validate_" + cfg.validate_on + "_report.json";
  Stage("io", [&] { write_json((dir / name).string(), report); });
  std::cout << "err_val " << format_double(run.err) << "  t_sim "
            << Fmt("%.3g", t_sim) << " s" << (run.diverged ? "  (diverged)" : "")
            << '\n';
  return kExitOk;
}

void sort_rows(std::vector<ReportRow>* rows) {
  std::stable_sort(rows->begin(), rows->end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     const int ta = a.theta.value_or(a.r), tb = b.theta.value_or(b.r);
                     if (a.r != b.r) return a.r < b.r;
                     if (a.d != b.d) return a.d < b.d;
                     if (ta != tb) return ta < tb;
                     return a.theta.has_value() && !b.theta.has_value();
                   });
}

std::string render_markdown(const std::vector<ReportRow>& rows,
                            const std::vector<std::string>& missing) {
  std::ostringstream o;
  o << "| r | d | Θ | n_φ | err_inf | err_val | t_inf (s) | t_sim (s) |\n"
    << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    o << "| " << row.r << " | " << row.d << " | "
      << (row.theta ? std::to_string(*row.theta) : "-") << " | " << row.n_phi
      << " | " << Fmt("%.2e", row.err_inf) << " | "
      << (row.err_val ? Fmt("%.2e", *row.err_val) : "n/a") << " | "
      << Fmt("%.3g", row.t_inf) << " | "
      << (row.t_sim ? Fmt("%.3g", *row.t_sim) : "n/a") << " |\n";
  }
  if (!missing.empty()) {
    o << "\nMissing artifacts:\n\n";
    for (const auto& m : missing) o << "- " << m << '\n';
  }
  return o.str();
}

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream o;
  o << "r,d,theta,n_phi,err_inf,err_val,t_inf,t_sim\n";
  for (const auto& row : rows) {
    o << row.r << ',' << row.d << ','
      << (row.theta ? std::to_string(*row.theta) : "-") << ',' << row.n_phi
      << ',' << format_double(row.err_inf) << ','
      << (row.err_val ? format_double(*row.err_val) : "") << ','
      << format_double(row.t_inf) << ','
      << (row.t_sim ? format_double(*row.t_sim) : "") << '\n';
  }
  return o.str();
}

int cmd_report(const RunConfig& cfg, const Json& doc) {
  std::vector<ReportRow> rows;
  std::vector<std::string> missing;
  for (const auto& run : cfg.runs) {
    const fs::path dir(run);
    const fs::path inf = dir / "infer_report.json";
    const fs::path val = dir / "validate_report.json";
    if (!fs::is_regular_file(inf)) {
      missing.push_back(inf.string());
      if (!fs::is_regular_file(val)) missing.push_back(val.string());
      continue;
    }
    ReportRow row;
    try {
      const Json j = read_json(inf.string());
      row.r = j.at("r").get<int>();
      row.d = j.at("d").get<int>();
      if (!j.at("theta").is_null()) row.theta = j.at("theta").get<int>();
      row.n_phi = j.at("n_phi").get<int>();
      row.err_inf = ReadNumber(j.at("err_inf"));
      row.t_inf = ReadNumber(j.at("t_inf"));
    } catch (const std::exception& e) {
      missing.push_back(inf.string() + " (unreadable: " + e.what() + ")");
      continue;
    }
    if (fs::is_regular_file(val)) {
      try {
        const Json j = read_json(val.string());
        row.err_val = ReadNumber(j.at("err_val"));
        row.t_sim = ReadNumber(j.at("t_sim"));
      } catch (const std::exception& e) {
        missing.push_back(val.string() + " (unreadable: " + e.what() + ")");
      }
    } else {
      missing.push_back(val.string());
    }
    rows.push_back(row);
  }
  sort_rows(&rows);
  const std::string md = render_markdown(rows, missing);
  const fs::path base(cfg.report_path);
  if (!base.parent_path().empty()) EnsureDir(base.parent_path().string());
  Stage("io", [&] {
    write_text(base.string() + ".md", md);
    write_text(base.string() + ".csv", render_csv(rows));
    write_json(base.string() + ".json",
               {{"rows", static_cast<int>(rows.size())},
                {"missing", missing},
                {"provenance", provenance("report", doc)}});
  });
  std::cout << md;
  for (const auto& m : missing) std::cerr << "missing artifact: " << m << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const Json&) {
  RequireFile(cfg.ModelPath());
  const RomModel model = Stage("io", [&] { return load_model(cfg.ModelPath()); });
  VerifyOptions opts;
  opts.seed = cfg.seed;
  const auto check = Stage("verify", [&] { return verify_model(model, opts); });
  if (!check) {
    std::cout << "unconstrained model: no certificate to check\n";
    return kExitOk;
  }
  std::cout << CheckJson(*check).dump(2) << '\n';
  if (!check->passed()) throw StageError("verify", "certificate checks failed");
  return kExitOk;
}

}  // namespace stable_opinf::cli
