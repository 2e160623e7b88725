#pragma once

#include <mcst2/config.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace mcst2 {

// Command-line overrides applied on top of the config file. The seed replaces
// the seed of the section the command reads (train or simulate); out replaces
// output_dir; threads caps the OpenMP thread count (results do not depend on
// it).
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

// Each command reads its config section, writes its outputs plus a JSON run
// manifest into the output directory, and throws std::invalid_argument or
// std::runtime_error with a one-line message on failure. Outputs are
// byte-identical across repeated runs with the same config and seed.
//
// File layout under the output directory:
//   train       -> model.mcst2 (+ .json sidecar), train_trace.csv,
//                  train_manifest.json
//   simulate    -> ground_truth.raster, sinogram.sino, weights.sino,
//                  simulate_manifest.json
//   reconstruct -> recon_<method>.raster, recon_<method>_trace.csv and
//                  recon_<method>.codes for the iterative methods,
//                  recon_<method>_manifest.json
//   evaluate    -> metrics.csv (method, rmse_hu, ssim; one row per
//                  reconstruction found)
//   report      -> report/ with 16-bit PGM renderings, copied traces,
//                  metrics.csv, and labels.json carrying per-image metrics

void cmd_train(const ExperimentConfig& config, const CliOverrides& overrides = {});
void cmd_simulate(const ExperimentConfig& config, const CliOverrides& overrides = {});
void cmd_reconstruct(const ExperimentConfig& config, const CliOverrides& overrides = {});
void cmd_evaluate(const ExperimentConfig& config, const CliOverrides& overrides = {});
void cmd_report(const ExperimentConfig& config, const CliOverrides& overrides = {});

}  // namespace mcst2
