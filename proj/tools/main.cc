#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli.h"
#include "stable_opinf/io.h"

using stable_opinf::Json;
namespace cli = stable_opinf::cli;

namespace {

enum class Kind { kInt, kFloat, kString, kIntList };

// A command-line flag that overrides one key of the config document.
struct Flag {
  std::string name;
  std::string pointer;
  Kind kind;
  std::string help;
  std::string value;
  CLI::Option* option = nullptr;
};

Json Convert(const Flag& f) {
  try {
    switch (f.kind) {
      case Kind::kInt: {
        std::size_t pos = 0;
        const long long v = std::stoll(f.value, &pos);
        if (pos != f.value.size()) break;
        return v;
      }
      case Kind::kFloat:
        return stable_opinf::parse_double(f.value);
      case Kind::kString:
        return f.value;
      case Kind::kIntList: {
        Json list = Json::array();
        std::string item;
        std::istringstream in(f.value);
        while (std::getline(in, item, ',')) {
          std::size_t pos = 0;
          list.push_back(std::stoll(item, &pos));
          if (pos != item.size()) throw std::invalid_argument(item);
        }
        return list;
      }
    }
  } catch (const std::exception&) {
  }
  throw cli::ConfigError("invalid value '" + f.value + "' for " + f.name);
}

std::vector<Flag> MakeFlags(const std::string& command) {
  std::vector<Flag> f = {
      {"--data-dir", "/paths/data_dir", Kind::kString, "snapshot CSV directory"},
      {"--run-dir", "/paths/run_dir", Kind::kString, "output directory of a run"},
      {"--model", "/paths/model", Kind::kString, "model file (default <run-dir>/model.json)"},
      {"--seed", "/seed", Kind::kInt, "seed for sampled certificate checks"},
  };
  auto add = [&](std::vector<Flag> more) {
    f.insert(f.end(), more.begin(), more.end());
  };
  if (command == "generate") {
    add({{"--nodes", "/fom/nodes", Kind::kInt, "chain nodes including the clamped one"},
         {"--law", "/fom/law", Kind::kString, "spring law: duffing or sinh"},
         {"--mass", "/fom/mass", Kind::kFloat, "nodal mass"},
         {"--k1", "/fom/k1", Kind::kFloat, "linear spring stiffness"},
         {"--k3", "/fom/k3", Kind::kFloat, "cubic spring stiffness"},
         {"--alpha", "/fom/alpha", Kind::kFloat, "Rayleigh mass coefficient"},
         {"--beta", "/fom/beta", Kind::kFloat, "Rayleigh stiffness coefficient"},
         {"--t-end", "/fom/t_end", Kind::kFloat, "simulated time span"},
         {"--snapshots", "/fom/num_snapshots", Kind::kInt, "snapshots per set"},
         {"--fom-dt", "/fom/dt", Kind::kFloat, "FOM time step"},
         {"--inference-profile", "/inputs/inference/kind", Kind::kString,
          "inference|validation|custom|step|pulse"},
         {"--inference-amplitude", "/inputs/inference/amplitude", Kind::kFloat, ""},
         {"--inference-frequency", "/inputs/inference/frequency", Kind::kFloat, ""},
         {"--validation-profile", "/inputs/validation/kind", Kind::kString,
          "inference|validation|custom|step|pulse"},
         {"--validation-amplitude", "/inputs/validation/amplitude", Kind::kFloat, ""},
         {"--validation-frequency", "/inputs/validation/frequency", Kind::kFloat, ""}});
  }
  if (command == "infer") {
    add({{"-r,--r", "/r", Kind::kInt, "reduced dimension"},
         {"-d,--d", "/d", Kind::kInt, "polynomial degree (even)"},
         {"--theta", "/theta", Kind::kInt, "cluster size; omit for a dense basis"},
         {"--budget", "/budget", Kind::kInt, "monomial budget for sparse selection"},
         {"--mode", "/mode", Kind::kString, "iss|bounded|unconstrained"},
         {"--eps", "/hyperparams/eps", Kind::kFloat, "absolute epsilon"},
         {"--eps-rel", "/hyperparams/eps_rel", Kind::kFloat, "relative epsilon"},
         {"--delta-m", "/hyperparams/delta_m", Kind::kFloat, "mass floor"},
         {"--delta-c", "/hyperparams/delta_c", Kind::kFloat, "damping floor (iss)"},
         {"--num-snapshots", "/num_snapshots", Kind::kInt, "use the first N samples"},
         {"--max-iter", "/max_iter", Kind::kInt, "solver iteration cap"}});
  }
  if (command == "infer" || command == "validate") {
    add({{"--integrator", "/integrator", Kind::kString, "rk4|implicit_midpoint"},
         {"--dt", "/dt", Kind::kFloat, "ROM time step"}});
  }
  if (command == "validate") {
    add({{"--on", "/validate_on", Kind::kString, "validation|inference"},
         {"--plot-dofs", "/plot_dofs", Kind::kIntList, "one-based DoFs to plot, comma separated"}});
  }
  if (command == "report") {
    add({{"--output", "/paths/report", Kind::kString, "output prefix (.md, .csv, .json)"}});
  }
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable operator inference for second-order polynomial systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kVersion);

  struct Command {
    std::string name;
    std::string help;
    int (*run)(const cli::RunConfig&, const Json&);
  };
  const std::vector<Command> commands = {
      {"generate", "simulate the spring chain and write snapshot CSVs", cli::cmd_generate},
      {"infer", "POD, cluster selection and inference; writes model and report", cli::cmd_infer},
      {"validate", "simulate a model on held-out data; writes errors, CSVs and plots", cli::cmd_validate},
      {"report", "collect run directories into a results table", cli::cmd_report},
      {"verify", "re-run the certificate checks stored in a model file", cli::cmd_verify},
  };

  struct Parsed {
    CLI::App* sub;
    std::string config;
    std::vector<Flag> flags;
    std::vector<std::string> runs;
  };
  std::vector<std::unique_ptr<Parsed>> parsed;
  for (const auto& c : commands) {
    auto p = std::make_unique<Parsed>();
    p->sub = app.add_subcommand(c.name, c.help);
    p->sub->add_option("-c,--config", p->config, "JSON config document");
    p->flags = MakeFlags(c.name);
    for (auto& f : p->flags) f.option = p->sub->add_option(f.name, f.value, f.help);
    if (c.name == "report") {
      p->sub->add_option("runs", p->runs, "run directories (appended to config runs)");
    }
    parsed.push_back(std::move(p));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    Parsed& p = *parsed[i];
    if (!p.sub->parsed()) continue;
    try {
      Json doc = cli::load_config_document(p.config);
      for (const auto& f : p.flags) {
        if (f.option->count() > 0) doc[Json::json_pointer(f.pointer)] = Convert(f);
      }
      for (const auto& run : p.runs) doc["runs"].push_back(run);
      const cli::RunConfig cfg = cli::config_from_json(doc);
      return commands[i].run(cfg, doc);
    } catch (const cli::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return cli::kExitConfig;
    } catch (const cli::StageError& e) {
      std::cerr << "error " << e.what() << '\n';
      return cli::kExitPipeline;
    } catch (const std::exception& e) {
      std::cerr << "error [internal] " << e.what() << '\n';
      return cli::kExitPipeline;
    }
  }
  return cli::kExitOk;
}
