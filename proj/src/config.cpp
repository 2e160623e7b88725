#include <mcst2/config.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mcst2 {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& context, const std::string& message) {
  throw std::invalid_argument(context + ": " + message);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& context, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool found = false;
    for (const char* k : known) found = found || it.key() == k;
    if (!found) bad(context, "unknown key " + where + it.key());
  }
}

const json* maybe(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const char* key, double fallback, const std::string& context,
                  const std::string& where) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) bad(context, where + key + " must be a number");
  return v->get<double>();
}

Index get_index(const json& obj, const char* key, Index fallback, const std::string& context,
                const std::string& where) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) bad(context, where + key + " must be an integer");
  return v->get<Index>();
}

std::uint64_t get_seed(const json& obj, const char* key, std::uint64_t fallback,
                       const std::string& context, const std::string& where) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned()) bad(context, where + key + " must be a nonnegative integer");
  return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& context,
              const std::string& where) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) bad(context, where + key + " must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& context, const std::string& where) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) bad(context, where + key + " must be a string");
  return v->get<std::string>();
}

template <typename Fn>
void rewrap(const std::string& context, const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    bad(context, where + e.what());
  }
}

TrainSection parse_train(const json& obj, const std::string& context) {
  const std::string where = "train.";
  reject_unknown(obj,
                 {"images", "builtin_count", "builtin_size", "builtin_seed", "patch_side", "stride",
                  "eta1", "eta2", "num_clusters1", "num_clusters2", "iterations", "seed"},
                 context, where);
  TrainSection t;
  if (const json* v = maybe(obj, "images")) {
    if (!v->is_array()) bad(context, "train.images must be an array of paths");
    for (const json& e : *v) {
      if (!e.is_string()) bad(context, "train.images must be an array of paths");
      t.images.push_back(e.get<std::string>());
    }
  }
  t.builtin_count = get_index(obj, "builtin_count", t.builtin_count, context, where);
  t.builtin_size = get_index(obj, "builtin_size", t.builtin_size, context, where);
  t.builtin_seed = get_seed(obj, "builtin_seed", t.builtin_seed, context, where);
  t.patch_side = get_index(obj, "patch_side", t.patch_side, context, where);
  t.stride = get_index(obj, "stride", t.stride, context, where);
  t.train.eta1 = get_double(obj, "eta1", t.train.eta1, context, where);
  t.train.eta2 = get_double(obj, "eta2", t.train.eta2, context, where);
  t.train.num_clusters1 = get_index(obj, "num_clusters1", t.train.num_clusters1, context, where);
  t.train.num_clusters2 = get_index(obj, "num_clusters2", t.train.num_clusters2, context, where);
  t.train.iterations = get_index(obj, "iterations", t.train.iterations, context, where);
  t.train.seed = get_seed(obj, "seed", t.train.seed, context, where);
  if (t.images.empty() && (t.builtin_count <= 0 || t.builtin_size <= 0))
    bad(context, "train: built-in slice count and size must be positive");
  if (t.patch_side <= 0 || t.stride <= 0)
    bad(context, "train: patch_side and stride must be positive");
  rewrap(context, "train: ", [&] { t.train.validate(); });
  return t;
}

SimulateSection parse_simulate(const json& obj, const std::string& context) {
  const std::string where = "simulate.";
  reject_unknown(obj,
                 {"ground_truth", "preset", "num_detectors", "num_views", "detector_spacing",
                  "source_to_detector", "source_to_center", "image_pixel_size", "image_rows",
                  "image_cols", "unit_scale", "incident_intensity", "gaussian_std", "noiseless",
                  "count_floor", "seed"},
                 context, where);
  SimulateSection s;
  s.ground_truth = get_string(obj, "ground_truth", "", context, where);
  s.preset = get_string(obj, "preset", s.preset, context, where);
  if (s.preset == "desk-parallel")
    s.geometry = CtGeometry{};
  else if (s.preset == "paper-fan")
    s.geometry = paper_fan_geometry();
  else
    bad(context, "simulate.preset must be desk-parallel or paper-fan");
  s.geometry.unit_scale = kHuUnitScale;

  s.geometry.num_detectors = get_index(obj, "num_detectors", s.geometry.num_detectors, context, where);
  s.geometry.num_views = get_index(obj, "num_views", s.geometry.num_views, context, where);
  s.geometry.detector_spacing =
      get_double(obj, "detector_spacing", s.geometry.detector_spacing, context, where);
  s.geometry.source_to_detector =
      get_double(obj, "source_to_detector", s.geometry.source_to_detector, context, where);
  s.geometry.source_to_center =
      get_double(obj, "source_to_center", s.geometry.source_to_center, context, where);
  s.geometry.image_pixel_size =
      get_double(obj, "image_pixel_size", s.geometry.image_pixel_size, context, where);
  s.geometry.image_rows = get_index(obj, "image_rows", s.geometry.image_rows, context, where);
  s.geometry.image_cols = get_index(obj, "image_cols", s.geometry.image_cols, context, where);
  s.geometry.unit_scale = get_double(obj, "unit_scale", s.geometry.unit_scale, context, where);
  rewrap(context, "simulate: ", [&] { s.geometry.validate(); });

  s.noise.incident_intensity =
      get_double(obj, "incident_intensity", s.noise.incident_intensity, context, where);
  s.noise.gaussian_std = get_double(obj, "gaussian_std", s.noise.gaussian_std, context, where);
  s.noise.noiseless = get_bool(obj, "noiseless", s.noise.noiseless, context, where);
  s.noise.count_floor = get_double(obj, "count_floor", s.noise.count_floor, context, where);
  rewrap(context, "simulate: ", [&] { s.noise.validate(); });

  s.seed = get_seed(obj, "seed", s.seed, context, where);
  return s;
}

ReconstructSection parse_reconstruct(const json& obj, const std::string& context) {
  const std::string where = "reconstruct.";
  reject_unknown(obj,
                 {"method", "model", "beta", "gamma1", "gamma2", "outer_iterations",
                  "inner_iterations", "init", "ep_delta", "fbp_window", "sinogram", "weights"},
                 context, where);
  ReconstructSection r;
  const std::string method = get_string(obj, "method", "mcst2", context, where);
  rewrap(context, "reconstruct: ", [&] { r.method = parse_method(method); });
  r.model_path = get_string(obj, "model", "", context, where);
  r.recon.beta = get_double(obj, "beta", r.recon.beta, context, where);
  r.recon.gamma1 = get_double(obj, "gamma1", r.recon.gamma1, context, where);
  r.recon.gamma2 = get_double(obj, "gamma2", r.recon.gamma2, context, where);
  r.recon.outer_iterations =
      get_index(obj, "outer_iterations", r.recon.outer_iterations, context, where);
  r.recon.inner_iterations =
      get_index(obj, "inner_iterations", r.recon.inner_iterations, context, where);
  const std::string init = get_string(obj, "init", "fbp", context, where);
  if (init == "fbp")
    r.recon.init = ReconInit::fbp;
  else if (init == "zeros")
    r.recon.init = ReconInit::zeros;
  else
    bad(context, "reconstruct.init must be fbp or zeros");
  r.recon.ep_delta = get_double(obj, "ep_delta", r.recon.ep_delta, context, where);
  const std::string window = get_string(obj, "fbp_window", "hann", context, where);
  rewrap(context, "reconstruct: ", [&] { r.fbp_window = parse_fbp_window(window); });
  r.sinogram = get_string(obj, "sinogram", "", context, where);
  r.weights = get_string(obj, "weights", "", context, where);
  rewrap(context, "reconstruct: ", [&] { r.recon.validate(); });
  if ((r.method == ReconMethod::mcst2 || r.method == ReconMethod::mrst2) && r.model_path.empty())
    bad(context, "reconstruct: method " + method_name(r.method) + " needs a model path");
  return r;
}

EvaluateSection parse_evaluate(const json& obj, const std::string& context) {
  const std::string where = "evaluate.";
  reject_unknown(obj, {"roi_radius", "dynamic_range", "reference"}, context, where);
  EvaluateSection e;
  e.roi_radius = get_double(obj, "roi_radius", e.roi_radius, context, where);
  e.dynamic_range = get_double(obj, "dynamic_range", e.dynamic_range, context, where);
  e.reference = get_string(obj, "reference", "", context, where);
  if (!(e.dynamic_range > 0.0)) bad(context, "evaluate.dynamic_range must be positive");
  return e;
}

}  // namespace

std::string method_name(ReconMethod method) {
  switch (method) {
    case ReconMethod::fbp: return "fbp";
    case ReconMethod::ep: return "ep";
    case ReconMethod::mcst2: return "mcst2";
    case ReconMethod::mrst2: return "mrst2-special-case";
  }
  throw std::invalid_argument("method_name: unknown method");
}

ReconMethod parse_method(const std::string& name) {
  if (name == "fbp") return ReconMethod::fbp;
  if (name == "ep") return ReconMethod::ep;
  if (name == "mcst2") return ReconMethod::mcst2;
  if (name == "mrst2-special-case") return ReconMethod::mrst2;
  throw std::invalid_argument("method must be one of fbp, ep, mcst2, mrst2-special-case");
}

FbpWindow parse_fbp_window(const std::string& name) {
  if (name == "ramp") return FbpWindow::ramp;
  if (name == "shepp-logan") return FbpWindow::shepp_logan;
  if (name == "cosine") return FbpWindow::cosine;
  if (name == "hann") return FbpWindow::hann;
  throw std::invalid_argument("fbp_window must be one of ramp, shepp-logan, cosine, hann");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& context) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    bad(context, e.what());
  }
  if (!root.is_object()) bad(context, "top level must be an object");
  reject_unknown(root, {"train", "simulate", "reconstruct", "evaluate", "output_dir"}, context, "");

  ExperimentConfig config;
  config.output_dir = get_string(root, "output_dir", config.output_dir, context, "");
  if (config.output_dir.empty()) bad(context, "output_dir must be nonempty");

  if (const json* v = maybe(root, "train")) {
    if (!v->is_object()) bad(context, "train must be an object");
    config.train = parse_train(*v, context);
  }
  if (const json* v = maybe(root, "simulate")) {
    if (!v->is_object()) bad(context, "simulate must be an object");
    config.simulate = parse_simulate(*v, context);
  }
  if (const json* v = maybe(root, "reconstruct")) {
    if (!v->is_object()) bad(context, "reconstruct must be an object");
    config.reconstruct = parse_reconstruct(*v, context);
  }
  if (const json* v = maybe(root, "evaluate")) {
    if (!v->is_object()) bad(context, "evaluate must be an object");
    config.evaluate = parse_evaluate(*v, context);
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_experiment_config(buffer.str(), path);
}

std::string render_experiment_config(const ExperimentConfig& config) {
  json root;
  root["output_dir"] = config.output_dir;
  if (config.train) {
    const TrainSection& t = *config.train;
    json obj;
    obj["images"] = t.images;
    obj["builtin_count"] = t.builtin_count;
    obj["builtin_size"] = t.builtin_size;
    obj["builtin_seed"] = t.builtin_seed;
    obj["patch_side"] = t.patch_side;
    obj["stride"] = t.stride;
    obj["eta1"] = t.train.eta1;
    obj["eta2"] = t.train.eta2;
    obj["num_clusters1"] = t.train.num_clusters1;
    obj["num_clusters2"] = t.train.num_clusters2;
    obj["iterations"] = t.train.iterations;
    obj["seed"] = t.train.seed;
    root["train"] = std::move(obj);
  }
  if (config.simulate) {
    const SimulateSection& s = *config.simulate;
    json obj;
    obj["ground_truth"] = s.ground_truth;
    obj["preset"] = s.preset;
    obj["num_detectors"] = s.geometry.num_detectors;
    obj["num_views"] = s.geometry.num_views;
    obj["detector_spacing"] = s.geometry.detector_spacing;
    obj["source_to_detector"] = s.geometry.source_to_detector;
    obj["source_to_center"] = s.geometry.source_to_center;
    obj["image_pixel_size"] = s.geometry.image_pixel_size;
    obj["image_rows"] = s.geometry.image_rows;
    obj["image_cols"] = s.geometry.image_cols;
    obj["unit_scale"] = s.geometry.unit_scale;
    obj["incident_intensity"] = s.noise.incident_intensity;
    obj["gaussian_std"] = s.noise.gaussian_std;
    obj["noiseless"] = s.noise.noiseless;
    obj["count_floor"] = s.noise.count_floor;
    obj["seed"] = s.seed;
    root["simulate"] = std::move(obj);
  }
  if (config.reconstruct) {
    const ReconstructSection& r = *config.reconstruct;
    json obj;
    obj["method"] = method_name(r.method);
    obj["model"] = r.model_path;
    obj["beta"] = r.recon.beta;
    obj["gamma1"] = r.recon.gamma1;
    obj["gamma2"] = r.recon.gamma2;
    obj["outer_iterations"] = r.recon.outer_iterations;
    obj["inner_iterations"] = r.recon.inner_iterations;
    obj["init"] = r.recon.init == ReconInit::fbp ? "fbp"
                  : r.recon.init == ReconInit::zeros ? "zeros"
                                                     : "provided";
    obj["ep_delta"] = r.recon.ep_delta;
    const char* window = "hann";
    if (r.fbp_window == FbpWindow::ramp) window = "ramp";
    if (r.fbp_window == FbpWindow::shepp_logan) window = "shepp-logan";
    if (r.fbp_window == FbpWindow::cosine) window = "cosine";
    obj["fbp_window"] = window;
    obj["sinogram"] = r.sinogram;
    obj["weights"] = r.weights;
    root["reconstruct"] = std::move(obj);
  }
  if (config.evaluate) {
    const EvaluateSection& e = *config.evaluate;
    json obj;
    obj["roi_radius"] = e.roi_radius;
    obj["dynamic_range"] = e.dynamic_range;
    obj["reference"] = e.reference;
    root["evaluate"] = std::move(obj);
  }
  return root.dump(2) + "\n";
}

}  // namespace mcst2
