#pragma once

#include <mcst2/core.hpp>
#include <mcst2/ct_system.hpp>
#include <mcst2/mcst2.hpp>
#include <mcst2/pwls_recon.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcst2 {

// Experiment configuration, loaded from a JSON file with one object per
// pipeline stage. Unknown keys anywhere are rejected. Every value has a
// default, so sections can be as small as {}.

struct TrainSection {
  // Training images (RASTER64 or binary PGM). Empty means the built-in
  // synthetic slice set below.
  std::vector<std::string> images;
  Index builtin_count = 5;
  Index builtin_size = 128;
  std::uint64_t builtin_seed = 17;

  Index patch_side = 8;
  Index stride = 1;
  TrainConfig train;
};

struct SimulateSection {
  // Ground-truth raster in HU; empty means the built-in head phantom
  // rasterized on the geometry grid.
  std::string ground_truth;
  std::string preset = "desk-parallel";
  CtGeometry geometry;  // preset resolved, overrides applied
  NoiseModel noise;
  std::uint64_t seed = 0;
};

enum class ReconMethod { fbp, ep, mcst2, mrst2 };

std::string method_name(ReconMethod method);
ReconMethod parse_method(const std::string& name);
FbpWindow parse_fbp_window(const std::string& name);

struct ReconstructSection {
  ReconMethod method = ReconMethod::mcst2;
  ReconConfig recon;
  std::string model_path;  // required for mcst2 / mrst2-special-case
  FbpWindow fbp_window = FbpWindow::hann;
  // Explicit measurement paths; empty means the simulate outputs in the run's
  // output directory.
  std::string sinogram;
  std::string weights;
};

struct EvaluateSection {
  double roi_radius = -1.0;  // pixels; nonpositive means 0.48 * min(rows, cols)
  double dynamic_range = 1000.0;
  // Reference raster; empty means the simulated ground truth in the output
  // directory.
  std::string reference;
};

struct ExperimentConfig {
  std::optional<TrainSection> train;
  std::optional<SimulateSection> simulate;
  std::optional<ReconstructSection> reconstruct;
  std::optional<EvaluateSection> evaluate;
  std::string output_dir = "out";
};

// Throws std::invalid_argument with a single-line message naming the bad key
// or value. `context` prefixes messages (usually the file path).
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& context);
ExperimentConfig load_experiment_config(const std::string& path);

// Round-trips a parsed config back to canonical JSON (used by run manifests).
std::string render_experiment_config(const ExperimentConfig& config);

}  // namespace mcst2
