#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcst2/commands.hpp>
#include <mcst2/io.hpp>
#include <mcst2/metrics.hpp>
#include <mcst2/pwls_recon.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

using namespace mcst2;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mcst2_cmd_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(bool(is));
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

// Small but complete pipeline configuration: 48x48 grid, 8x8 patches.
ExperimentConfig desk_mini(const std::string& dir) {
  ExperimentConfig c;
  c.output_dir = dir;

  TrainSection t;
  t.builtin_count = 2;
  t.builtin_size = 48;
  t.patch_side = 8;
  t.stride = 3;
  t.train.num_clusters1 = 2;
  t.train.num_clusters2 = 2;
  t.train.iterations = 3;
  c.train = t;

  SimulateSection s;
  s.geometry.image_rows = 48;
  s.geometry.image_cols = 48;
  s.geometry.num_detectors = 71;
  s.geometry.num_views = 60;
  s.geometry.unit_scale = kHuUnitScale;
  s.seed = 5;
  c.simulate = s;

  ReconstructSection r;
  r.method = ReconMethod::mcst2;
  r.model_path = dir + "/model.mcst2";
  r.recon.beta = 2e4;
  r.recon.gamma1 = 40.0;
  r.recon.gamma2 = 15.0;
  r.recon.outer_iterations = 3;
  r.recon.inner_iterations = 2;
  c.reconstruct = r;

  c.evaluate = EvaluateSection{};
  return c;
}

nlohmann::json manifest_of(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

}  // namespace

TEST_CASE("the full pipeline runs and the manifests are self-consistent") {
  const std::string dir = fresh_dir("pipeline");
  ExperimentConfig config = desk_mini(dir);

  cmd_train(config);
  cmd_simulate(config);
  cmd_reconstruct(config);
  config.reconstruct->method = ReconMethod::fbp;
  cmd_reconstruct(config);
  config.reconstruct->method = ReconMethod::ep;
  config.reconstruct->recon.beta = 100.0;
  cmd_reconstruct(config);
  cmd_evaluate(config);
  cmd_report(config);

  // evaluate wrote one row per method, in the documented order
  const std::string metrics = slurp(dir + "/metrics.csv");
  CHECK(metrics.rfind("method,rmse_hu,ssim\nfbp,", 0) == 0);
  CHECK(metrics.find("\nep,") != std::string::npos);
  CHECK(metrics.find("\nmcst2,") != std::string::npos);

  // metrics rows match direct library calls on the stored rasters
  const Matrix truth = io::read_raster(dir + "/ground_truth.raster").data;
  const Matrix fbp = io::read_raster(dir + "/recon_fbp.raster").data;
  const RoiMask roi = circular_roi(48, 48);
  const std::string fbp_row = "fbp," + io::csv_number(rmse(fbp, truth, roi)) + "," +
                              io::csv_number(ssim(fbp, truth, roi, 1000.0));
  CHECK(metrics.find(fbp_row) != std::string::npos);

  // the mcst2 manifest's final objective equals the objective recomputed
  // from the saved image and codes
  const nlohmann::json manifest = manifest_of(dir + "/recon_mcst2_manifest.json");
  const double reported = manifest.at("final_objective").get<double>();
  const io::ModelFile model = io::read_model(dir + "/model.mcst2");
  const io::SinogramFile sino = io::read_sinogram(dir + "/sinogram.sino");
  const io::SinogramFile weights = io::read_sinogram(dir + "/weights.sino");
  const CtProblem problem{sino.data, weights.data, sino.geometry};
  ReconState state;
  state.image = io::read_raster(dir + "/recon_mcst2.raster").data;
  state.coding = io::read_coding(dir + "/recon_mcst2.codes");
  PatchGeometry geom;
  geom.image_height = 48;
  geom.image_width = 48;
  geom.patch_side = model.patch_side;
  geom.stride = model.stride;
  const Matrix patches = extract_patches(state.image, geom).data;
  refresh_residual(patches, model.model, state.coding);
  const ReconConfig mcst2_cfg = desk_mini(dir).reconstruct->recon;
  CHECK(objective_p1(state, problem, model.model, geom, mcst2_cfg) == reported);

  // same self-consistency for the edge-preserving baseline
  const nlohmann::json ep_manifest = manifest_of(dir + "/recon_ep_manifest.json");
  ReconConfig ep_cfg = config.reconstruct->recon;
  ep_cfg.beta = 100.0;
  const Matrix ep = io::read_raster(dir + "/recon_ep.raster").data;
  CHECK(objective_ep(ep, problem, ep_cfg) == ep_manifest.at("final_objective").get<double>());

  // report bundle: renderings, labels, metrics, and the objective traces
  CHECK(io::read_pgm(dir + "/report/ground_truth.pgm").rows() == 48);
  CHECK(io::read_pgm(dir + "/report/recon_mcst2.pgm").cols() == 48);
  const nlohmann::json labels = manifest_of(dir + "/report/labels.json");
  CHECK(labels.at("images").contains("recon_fbp.pgm"));
  CHECK(labels.at("images").at("recon_mcst2.pgm").at("ssim").get<double>() <= 1.0);
  CHECK(fs::exists(dir + "/report/metrics.csv"));
  CHECK(fs::exists(dir + "/report/recon_mcst2_trace.csv"));
  CHECK(fs::exists(dir + "/report/train_trace.csv"));
}

TEST_CASE("repeated runs with the same config and seed are byte-identical") {
  const std::string dir = fresh_dir("repeat");
  const ExperimentConfig config = desk_mini(dir);

  cmd_simulate(config);
  cmd_train(config);
  cmd_reconstruct(config);
  const std::string sino = slurp(dir + "/sinogram.sino");
  const std::string model = slurp(dir + "/model.mcst2");
  const std::string image = slurp(dir + "/recon_mcst2.raster");
  const std::string manifest = slurp(dir + "/recon_mcst2_manifest.json");

  cmd_simulate(config);
  cmd_train(config);
  cmd_reconstruct(config);
  CHECK(slurp(dir + "/sinogram.sino") == sino);
  CHECK(slurp(dir + "/model.mcst2") == model);
  CHECK(slurp(dir + "/recon_mcst2.raster") == image);
  CHECK(slurp(dir + "/recon_mcst2_manifest.json") == manifest);

  // a different seed changes the measurements
  CliOverrides seeded;
  seeded.seed = 6;
  cmd_simulate(config, seeded);
  CHECK(slurp(dir + "/sinogram.sino") != sino);
}

TEST_CASE("commands reject missing sections and mismatched models") {
  const std::string dir = fresh_dir("errors");
  ExperimentConfig config = desk_mini(dir);

  ExperimentConfig bare;
  bare.output_dir = dir;
  CHECK_THROWS_AS(cmd_train(bare), std::invalid_argument);
  CHECK_THROWS_AS(cmd_simulate(bare), std::invalid_argument);
  CHECK_THROWS_AS(cmd_reconstruct(bare), std::invalid_argument);
  CHECK_THROWS_AS(cmd_evaluate(bare), std::invalid_argument);

  // nothing simulated yet: reconstruction and evaluation have no inputs
  CHECK_THROWS_AS(cmd_reconstruct(config), std::runtime_error);
  cmd_simulate(config);
  CHECK_THROWS_AS(cmd_evaluate(config), std::runtime_error);

  // the special-case method insists on single-transform banks
  cmd_train(config);
  config.reconstruct->method = ReconMethod::mrst2;
  CHECK_THROWS_AS(cmd_reconstruct(config), std::runtime_error);

  // a single-transform model makes it run
  config.train->train.num_clusters1 = 1;
  config.train->train.num_clusters2 = 1;
  cmd_train(config);
  cmd_reconstruct(config);
  CHECK(fs::exists(dir + "/recon_mrst2-special-case.raster"));

  // the seed override flows into the train config echo
  CliOverrides seeded;
  seeded.seed = 42;
  cmd_train(config, seeded);
  const nlohmann::json manifest = manifest_of(dir + "/train_manifest.json");
  CHECK(manifest.at("config").at("train").at("seed").get<std::uint64_t>() == 42);
}
