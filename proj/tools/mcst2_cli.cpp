#include <CLI11.hpp>

#include <mcst2/commands.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

namespace {

// Error output is one line, always of the form "error: <message>".
int report_error(const std::string& message) {
  std::string line = message;
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::fprintf(stderr, "error: %s\n", line.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-dose CT reconstruction with clustered two-layer sparsifying transforms"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the section seed");
    sub->add_option("--out", out, "override the output directory");
    sub->add_option("--threads", threads, "OpenMP thread cap (does not change results)");
  };

  CLI::App* train = app.add_subcommand("train", "learn the transform banks from image patches");
  CLI::App* simulate = app.add_subcommand("simulate", "generate noisy measurements");
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "reconstruct with the configured method");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score reconstructions against the reference");
  CLI::App* report = app.add_subcommand("report", "bundle traces, metrics, and image renderings");
  for (CLI::App* sub : {train, simulate, reconstruct, evaluate, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(e.what());
  }

  try {
    const mcst2::ExperimentConfig config = mcst2::load_experiment_config(config_path);
    const mcst2::CliOverrides overrides{seed, out, threads};
    if (train->parsed()) mcst2::cmd_train(config, overrides);
    if (simulate->parsed()) mcst2::cmd_simulate(config, overrides);
    if (reconstruct->parsed()) mcst2::cmd_reconstruct(config, overrides);
    if (evaluate->parsed()) mcst2::cmd_evaluate(config, overrides);
    if (report->parsed()) mcst2::cmd_report(config, overrides);
  } catch (const std::exception& e) {
    return report_error(e.what());
  }
  return 0;
}
