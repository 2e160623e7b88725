#include <mcst2/commands.hpp>

#include <mcst2/io.hpp>
#include <mcst2/metrics.hpp>
#include <mcst2/phantom.hpp>
#include <mcst2/pwls_recon.hpp>

#include <json.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mcst2 {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string out_dir(const ExperimentConfig& config, const CliOverrides& overrides) {
  const std::string dir = overrides.out.value_or(config.output_dir);
  fs::create_directories(dir);
  return dir;
}

void apply_threads(const CliOverrides& overrides) {
  if (overrides.threads) {
    if (*overrides.threads <= 0) throw std::invalid_argument("threads must be positive");
    omp_set_num_threads(*overrides.threads);
  }
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Training inputs may be RASTER64 or binary PGM; sniff the magic.
Matrix load_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open for reading");
  char magic[2] = {0, 0};
  is.read(magic, 2);
  is.close();
  if (magic[0] == 'P' && magic[1] == '5') return io::read_pgm(path);
  return io::read_raster(path).data;
}

void write_manifest(const std::string& path, const json& manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << manifest.dump(2) << "\n";
  os.flush();
  if (!os) throw std::runtime_error(path + ": write failed");
}

json config_echo(const ExperimentConfig& config) { return json::parse(render_experiment_config(config)); }

struct Measurements {
  CtProblem problem;
  std::string sinogram_path;
  std::string weights_path;
};

Measurements load_measurements(const ReconstructSection& section, const std::string& dir) {
  Measurements m;
  m.sinogram_path = section.sinogram.empty() ? join(dir, "sinogram.sino") : section.sinogram;
  m.weights_path = section.weights.empty() ? join(dir, "weights.sino") : section.weights;
  io::SinogramFile sino = io::read_sinogram(m.sinogram_path);
  io::SinogramFile weights = io::read_sinogram(m.weights_path);
  if (sino.kind != "sinogram") throw std::runtime_error(m.sinogram_path + ": kind is not sinogram");
  if (weights.kind != "weights") throw std::runtime_error(m.weights_path + ": kind is not weights");
  const CtGeometry& a = sino.geometry;
  const CtGeometry& b = weights.geometry;
  if (a.mode != b.mode || a.num_detectors != b.num_detectors || a.num_views != b.num_views ||
      a.detector_spacing != b.detector_spacing || a.source_to_detector != b.source_to_detector ||
      a.source_to_center != b.source_to_center || a.image_pixel_size != b.image_pixel_size ||
      a.image_rows != b.image_rows || a.image_cols != b.image_cols || a.unit_scale != b.unit_scale)
    throw std::runtime_error(m.weights_path + ": geometry disagrees with the sinogram file");
  m.problem.sinogram = std::move(sino.data);
  m.problem.weights = std::move(weights.data);
  m.problem.geometry = a;
  return m;
}

// The reconstructions cmd_evaluate and cmd_report look for, in output order.
constexpr ReconMethod kAllMethods[] = {ReconMethod::fbp, ReconMethod::ep, ReconMethod::mcst2,
                                       ReconMethod::mrst2};

struct MethodMetrics {
  std::string method;
  double rmse = 0.0;
  double ssim = 0.0;
};

std::vector<MethodMetrics> evaluate_methods(const ExperimentConfig& config,
                                            const std::string& dir, Matrix* reference_out) {
  if (!config.evaluate) throw std::invalid_argument("config has no evaluate section");
  const EvaluateSection& section = *config.evaluate;
  const std::string ref_path =
      section.reference.empty() ? join(dir, "ground_truth.raster") : section.reference;
  const Matrix reference = io::read_raster(ref_path).data;
  const RoiMask roi = circular_roi(reference.rows(), reference.cols(), section.roi_radius);

  std::vector<MethodMetrics> rows;
  for (const ReconMethod method : kAllMethods) {
    const std::string name = method_name(method);
    const std::string path = join(dir, "recon_" + name + ".raster");
    if (!fs::exists(path)) continue;
    const Matrix image = io::read_raster(path).data;
    if (image.rows() != reference.rows() || image.cols() != reference.cols())
      throw std::runtime_error(path + ": shape disagrees with the reference image");
    MethodMetrics row;
    row.method = name;
    row.rmse = rmse(image, reference, roi);
    row.ssim = ssim(image, reference, roi, section.dynamic_range);
    rows.push_back(row);
  }
  if (rows.empty())
    throw std::runtime_error(dir + ": no recon_<method>.raster outputs to evaluate");
  if (reference_out) *reference_out = reference;
  return rows;
}

std::vector<std::vector<std::string>> metrics_rows(const std::vector<MethodMetrics>& rows) {
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const MethodMetrics& row : rows)
    out.push_back({row.method, io::csv_number(row.rmse), io::csv_number(row.ssim)});
  return out;
}

}  // namespace

void cmd_train(const ExperimentConfig& config, const CliOverrides& overrides) {
  apply_threads(overrides);
  if (!config.train) throw std::invalid_argument("config has no train section");
  TrainSection section = *config.train;
  if (overrides.seed) section.train.seed = *overrides.seed;
  const std::string dir = out_dir(config, overrides);

  std::vector<Matrix> images;
  if (section.images.empty()) {
    images = builtin_training_slices(section.builtin_count, section.builtin_size,
                                     section.builtin_seed);
  } else {
    for (const std::string& path : section.images) images.push_back(load_image(path));
  }

  Index total = 0;
  std::vector<PatchMatrix> extracted;
  for (const Matrix& image : images) {
    PatchGeometry geom;
    geom.image_height = image.rows();
    geom.image_width = image.cols();
    geom.patch_side = section.patch_side;
    geom.stride = section.stride;
    extracted.push_back(extract_patches(image, geom));
    total += extracted.back().data.cols();
  }
  Matrix patches(section.patch_side * section.patch_side, total);
  Index at = 0;
  for (const PatchMatrix& p : extracted) {
    patches.middleCols(at, p.data.cols()) = p.data;
    at += p.data.cols();
  }

  const TrainResult result = train_mcst2(patches, section.train);

  const std::string model_path = join(dir, "model.mcst2");
  const std::string trace_path = join(dir, "train_trace.csv");
  io::write_model(model_path, result.model, section.train, section.patch_side, section.stride);
  io::write_trace_csv(trace_path, "iteration", "objective", result.objective_trace);

  ExperimentConfig echo = config;
  echo.train = section;
  json manifest;
  manifest["command"] = "train";
  manifest["config"] = config_echo(echo);
  manifest["num_training_images"] = images.size();
  manifest["num_patches"] = total;
  manifest["iterations"] = section.train.iterations;
  manifest["final_objective"] = result.objective_trace.back();
  manifest["outputs"] = {{"model", model_path}, {"trace", trace_path}};
  write_manifest(join(dir, "train_manifest.json"), manifest);
}

void cmd_simulate(const ExperimentConfig& config, const CliOverrides& overrides) {
  apply_threads(overrides);
  if (!config.simulate) throw std::invalid_argument("config has no simulate section");
  SimulateSection section = *config.simulate;
  if (overrides.seed) section.seed = *overrides.seed;
  const std::string dir = out_dir(config, overrides);
  const CtGeometry& geometry = section.geometry;

  Matrix truth;
  if (section.ground_truth.empty()) {
    truth = shepp_logan(geometry.image_rows, geometry.image_cols);
  } else {
    truth = load_image(section.ground_truth);
    if (truth.rows() != geometry.image_rows || truth.cols() != geometry.image_cols)
      throw std::runtime_error(section.ground_truth + ": shape disagrees with the geometry grid");
  }

  const CtProblem problem = simulate_measurements(truth, geometry, section.noise, section.seed);

  const std::string truth_path = join(dir, "ground_truth.raster");
  const std::string sino_path = join(dir, "sinogram.sino");
  const std::string weights_path = join(dir, "weights.sino");
  io::write_raster(truth_path, truth, "HU");
  io::write_sinogram(sino_path, problem.sinogram, geometry, "sinogram");
  io::write_sinogram(weights_path, problem.weights, geometry, "weights");

  ExperimentConfig echo = config;
  echo.simulate = section;
  json manifest;
  manifest["command"] = "simulate";
  manifest["config"] = config_echo(echo);
  manifest["seed"] = section.seed;
  manifest["num_rays"] = geometry.num_rays();
  manifest["outputs"] = {{"ground_truth", truth_path},
                         {"sinogram", sino_path},
                         {"weights", weights_path}};
  write_manifest(join(dir, "simulate_manifest.json"), manifest);
}

void cmd_reconstruct(const ExperimentConfig& config, const CliOverrides& overrides) {
  apply_threads(overrides);
  if (!config.reconstruct) throw std::invalid_argument("config has no reconstruct section");
  const ReconstructSection& section = *config.reconstruct;
  const std::string dir = out_dir(config, overrides);
  const Measurements m = load_measurements(section, dir);
  const std::string name = method_name(section.method);
  const std::string image_path = join(dir, "recon_" + name + ".raster");
  const std::string trace_path = join(dir, "recon_" + name + "_trace.csv");
  const std::string codes_path = join(dir, "recon_" + name + ".codes");

  json manifest;
  manifest["command"] = "reconstruct";
  manifest["method"] = name;
  manifest["config"] = config_echo(config);
  manifest["inputs"] = {{"sinogram", m.sinogram_path}, {"weights", m.weights_path}};
  json outputs;
  outputs["image"] = image_path;

  if (section.method == ReconMethod::fbp) {
    const Matrix image = fbp_reconstruct(m.problem, section.fbp_window);
    io::write_raster(image_path, image, "HU");
  } else if (section.method == ReconMethod::ep) {
    const EpResult result = reconstruct_pwls_ep(m.problem, section.recon);
    io::write_raster(image_path, result.image, "HU");
    io::write_trace_csv(trace_path, "iteration", "objective", result.objective_trace);
    outputs["trace"] = trace_path;
    manifest["iterations"] = {{"outer", section.recon.outer_iterations},
                              {"inner", section.recon.inner_iterations}};
    manifest["final_objective"] = result.objective_trace.back();
  } else {
    const io::ModelFile model = io::read_model(section.model_path);
    if (section.method == ReconMethod::mrst2 &&
        (model.model.num_clusters1() != 1 || model.model.num_clusters2() != 1))
      throw std::runtime_error(section.model_path +
                               ": mrst2-special-case needs a single transform per layer");
    PatchGeometry geom;
    geom.image_height = m.problem.geometry.image_rows;
    geom.image_width = m.problem.geometry.image_cols;
    geom.patch_side = model.patch_side;
    geom.stride = model.stride;
    const ReconState state = reconstruct_pwls_mcst2(m.problem, model.model, geom, section.recon);
    io::write_raster(image_path, state.image, "HU");
    io::write_coding(codes_path, state.coding, model.model.num_clusters1(),
                     model.model.num_clusters2());
    io::write_trace_csv(trace_path, "iteration", "objective", state.objective_trace);
    outputs["trace"] = trace_path;
    outputs["codes"] = codes_path;
    manifest["inputs"]["model"] = section.model_path;
    manifest["iterations"] = {{"outer", section.recon.outer_iterations},
                              {"inner", section.recon.inner_iterations}};
    manifest["final_objective"] = state.objective_trace.back();
  }

  manifest["outputs"] = std::move(outputs);
  write_manifest(join(dir, "recon_" + name + "_manifest.json"), manifest);
}

void cmd_evaluate(const ExperimentConfig& config, const CliOverrides& overrides) {
  apply_threads(overrides);
  const std::string dir = out_dir(config, overrides);
  const std::vector<MethodMetrics> rows = evaluate_methods(config, dir, nullptr);
  io::write_csv(join(dir, "metrics.csv"), {"method", "rmse_hu", "ssim"}, metrics_rows(rows));
}

void cmd_report(const ExperimentConfig& config, const CliOverrides& overrides) {
  apply_threads(overrides);
  const std::string dir = out_dir(config, overrides);
  Matrix reference;
  const std::vector<MethodMetrics> rows = evaluate_methods(config, dir, &reference);
  const std::string report = join(dir, "report");
  fs::create_directories(report);

  const double range = config.evaluate->dynamic_range;
  io::write_pgm16(join(report, "ground_truth.pgm"), reference, 0.0, range);

  json labels;
  labels["display_window"] = {{"lo", 0.0}, {"hi", range}};
  labels["images"]["ground_truth.pgm"] = {{"rmse_hu", 0.0}, {"ssim", 1.0}};
  std::vector<std::vector<std::string>> table;
  for (const MethodMetrics& row : rows) {
    const std::string image_path = join(dir, "recon_" + row.method + ".raster");
    const std::string pgm_name = "recon_" + row.method + ".pgm";
    io::write_pgm16(join(report, pgm_name), io::read_raster(image_path).data, 0.0, range);
    labels["images"][pgm_name] = {{"rmse_hu", row.rmse}, {"ssim", row.ssim}};
    const std::string trace = join(dir, "recon_" + row.method + "_trace.csv");
    if (fs::exists(trace))
      fs::copy_file(trace, join(report, "recon_" + row.method + "_trace.csv"),
                    fs::copy_options::overwrite_existing);
    table.push_back({row.method, io::csv_number(row.rmse), io::csv_number(row.ssim)});
  }
  const std::string train_trace = join(dir, "train_trace.csv");
  if (fs::exists(train_trace))
    fs::copy_file(train_trace, join(report, "train_trace.csv"),
                  fs::copy_options::overwrite_existing);
  io::write_csv(join(report, "metrics.csv"), {"method", "rmse_hu", "ssim"}, table);
  write_manifest(join(report, "labels.json"), labels);
}

}  // namespace mcst2
