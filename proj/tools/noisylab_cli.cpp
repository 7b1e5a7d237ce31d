// noisylab: run, matrix and fit-trace commands.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "noisylab/experiment.hpp"

namespace {

using noisylab::RunConfig;

struct Settings {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool loss_trace = false;
};

// Every config key becomes a --key option. In matrix mode the single-run
// flags fill the list axes instead.
void add_settings(CLI::App* cmd, Settings& s, bool matrix) {
  cmd->add_option("--config", s.config_file, "flat key=value config file (flags win)");
  for (const auto& key : noisylab::config_keys()) {
    if (key == "loss-trace") continue;
    std::string help = "config key '" + key + "'";
    if (matrix && key == "variant") help = "comma-separated variants";
    if (matrix && key == "noise") help = "comma-separated noise rates";
    if (matrix && key == "seed") help = "comma-separated seeds";
    cmd->add_option("--" + key, s.values[key], help);
  }
  cmd->add_flag("--loss-trace", s.loss_trace, "dump per-sample losses every epoch");
}

RunConfig resolve(CLI::App* cmd, const Settings& s, bool matrix) {
  RunConfig c;
  if (const char* env = std::getenv("NOISYLAB_SEED")) noisylab::apply_setting(c, "seed", env);
  if (!s.config_file.empty()) {
    std::ifstream in(s.config_file);
    if (!in) throw noisylab::IoError("cannot read config " + s.config_file);
    std::stringstream text;
    text << in.rdbuf();
    c = noisylab::parse_config(text.str(), c);
  }
  for (const auto& [key, value] : s.values) {
    if (cmd->count("--" + key) == 0) continue;
    std::string target = key;
    if (matrix && key == "variant") target = "variants";
    if (matrix && key == "noise") target = "noise-rates";
    if (matrix && key == "seed") target = "seeds";
    noisylab::apply_setting(c, target, value);
  }
  if (s.loss_trace) c.loss_trace = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label training experiments on tabular and synthetic data"};
  app.require_subcommand(1);

  Settings run_settings;
  Settings matrix_settings;
  auto* run_cmd = app.add_subcommand("run", "train one configuration");
  add_settings(run_cmd, run_settings, false);
  auto* matrix_cmd = app.add_subcommand("matrix", "train every variant x noise x seed combination");
  add_settings(matrix_cmd, matrix_settings, true);

  std::string trace_path;
  int trace_epoch = -1;
  std::size_t bins = 20;
  auto* fit_cmd = app.add_subcommand("fit-trace", "fit beta and Gaussian mixtures to a loss trace");
  fit_cmd->add_option("trace", trace_path, "loss_trace.csv from a run")->required();
  fit_cmd->add_option("--epoch", trace_epoch, "epoch to fit (default: last)");
  fit_cmd->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return noisylab::exit_usage;
  }

  try {
    if (run_cmd->parsed()) {
      return noisylab::cmd_run(resolve(run_cmd, run_settings, false), std::cout, std::cerr);
    }
    if (matrix_cmd->parsed()) {
      return noisylab::cmd_matrix(resolve(matrix_cmd, matrix_settings, true), std::cout, std::cerr);
    }
    std::optional<int> epoch;
    if (trace_epoch >= 0) epoch = trace_epoch;
    return noisylab::cmd_fit_trace(trace_path, epoch, bins, std::cout, std::cerr);
  } catch (const noisylab::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return noisylab::exit_usage;
  } catch (const noisylab::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return noisylab::exit_io;
  }
}
