#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcst2/config.hpp>

#include <stdexcept>
#include <string>

using namespace mcst2;

namespace {

ExperimentConfig parse(const std::string& text) { return parse_experiment_config(text, "cfg"); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty sections fall back to the documented defaults") {
  const ExperimentConfig c = parse(R"({"simulate": {}, "train": {}, "evaluate": {}})");
  CHECK(c.output_dir == "out");
  CHECK_FALSE(c.reconstruct.has_value());

  REQUIRE(c.simulate.has_value());
  const CtGeometry& g = c.simulate->geometry;
  CHECK(g.mode == CtMode::parallel);
  CHECK(g.num_detectors == 185);
  CHECK(g.num_views == 180);
  CHECK(g.detector_spacing == 2.0);
  CHECK(g.image_rows == 128);
  CHECK(g.unit_scale == kHuUnitScale);
  CHECK(c.simulate->noise.incident_intensity == 1e4);
  CHECK(c.simulate->noise.gaussian_std == 5.0);
  CHECK_FALSE(c.simulate->noise.noiseless);
  CHECK(c.simulate->seed == 0);
  CHECK(c.simulate->ground_truth.empty());

  REQUIRE(c.train.has_value());
  CHECK(c.train->images.empty());
  CHECK(c.train->builtin_count == 5);
  CHECK(c.train->patch_side == 8);
  CHECK(c.train->stride == 1);
  CHECK(c.train->train.eta1 == 125.0);
  CHECK(c.train->train.eta2 == 70.0);
  CHECK(c.train->train.num_clusters1 == 5);
  CHECK(c.train->train.num_clusters2 == 2);
  CHECK(c.train->train.iterations == 1000);

  REQUIRE(c.evaluate.has_value());
  CHECK(c.evaluate->roi_radius == -1.0);
  CHECK(c.evaluate->dynamic_range == 1000.0);
}

TEST_CASE("the fan preset carries the full-scale scanner dimensions") {
  const ExperimentConfig c = parse(R"({"simulate": {"preset": "paper-fan"}})");
  const CtGeometry& g = c.simulate->geometry;
  CHECK(g.mode == CtMode::fan);
  CHECK(g.num_detectors == 888);
  CHECK(g.num_views == 984);
  CHECK(g.detector_spacing == 1.2858);
  CHECK(g.source_to_detector == 1085.6);
  CHECK(g.source_to_center == 595.0);
  CHECK(g.image_rows == 420);
  CHECK(g.unit_scale == kHuUnitScale);

  // overrides win over the preset
  const ExperimentConfig o =
      parse(R"({"simulate": {"preset": "paper-fan", "num_views": 96, "unit_scale": 1.0}})");
  CHECK(o.simulate->geometry.num_views == 96);
  CHECK(o.simulate->geometry.unit_scale == 1.0);
  CHECK(o.simulate->geometry.num_detectors == 888);
}

TEST_CASE("reconstruct section parses every method and its knobs") {
  const ExperimentConfig c = parse(R"({
    "reconstruct": {"method": "mcst2", "model": "m.mcst2", "beta": 45000.0,
                    "gamma1": 25.0, "gamma2": 5.0, "outer_iterations": 7,
                    "inner_iterations": 3, "init": "zeros", "fbp_window": "ramp"}})");
  REQUIRE(c.reconstruct.has_value());
  CHECK(c.reconstruct->method == ReconMethod::mcst2);
  CHECK(c.reconstruct->model_path == "m.mcst2");
  CHECK(c.reconstruct->recon.beta == 45000.0);
  CHECK(c.reconstruct->recon.gamma1 == 25.0);
  CHECK(c.reconstruct->recon.outer_iterations == 7);
  CHECK(c.reconstruct->recon.inner_iterations == 3);
  CHECK(c.reconstruct->recon.init == ReconInit::zeros);
  CHECK(c.reconstruct->fbp_window == FbpWindow::ramp);

  CHECK(parse(R"({"reconstruct": {"method": "fbp"}})").reconstruct->method == ReconMethod::fbp);
  CHECK(parse(R"({"reconstruct": {"method": "ep"}})").reconstruct->method == ReconMethod::ep);
  CHECK(parse(R"({"reconstruct": {"method": "mrst2-special-case", "model": "m"}})")
            .reconstruct->method == ReconMethod::mrst2);

  CHECK(method_name(parse_method("mrst2-special-case")) == "mrst2-special-case");
  CHECK_THROWS_AS(parse_method("art"), std::invalid_argument);
  CHECK_THROWS_AS(parse_fbp_window("hamming"), std::invalid_argument);
}

TEST_CASE("unknown keys and bad values fail with the offending key named") {
  CHECK(error_of(R"({"bogus": 1})") == "cfg: unknown key bogus");
  CHECK(error_of(R"({"train": {"etaX": 1}})") == "cfg: unknown key train.etaX");
  CHECK(error_of(R"({"simulate": {"detectors": 10}})") == "cfg: unknown key simulate.detectors");
  CHECK(error_of(R"({"reconstruct": {"method": "fbp", "window": "hann"}})") ==
        "cfg: unknown key reconstruct.window");
  CHECK(error_of(R"({"evaluate": {"radius": 3}})") == "cfg: unknown key evaluate.radius");

  CHECK(error_of(R"({"train": {"eta1": "big"}})") == "cfg: train.eta1 must be a number");
  CHECK(error_of(R"({"simulate": {"seed": -4}})") ==
        "cfg: simulate.seed must be a nonnegative integer");
  CHECK(error_of(R"({"train": {"iterations": 2.5}})") ==
        "cfg: train.iterations must be an integer");
  CHECK(error_of(R"({"simulate": {"noiseless": 1}})") ==
        "cfg: simulate.noiseless must be a boolean");
  CHECK(error_of(R"({"train": 3})") == "cfg: train must be an object");
  CHECK(error_of("[1,2]") == "cfg: top level must be an object");
  CHECK(error_of("{") != "");

  // domain validation still applies after parsing
  CHECK(error_of(R"({"train": {"num_clusters1": 0}})") != "");
  CHECK(error_of(R"({"simulate": {"num_detectors": 0}})") != "");
  CHECK(error_of(R"({"simulate": {"incident_intensity": -1}})") != "");
  CHECK(error_of(R"({"reconstruct": {"method": "mcst2"}})") ==
        "cfg: reconstruct: method mcst2 needs a model path");
  CHECK(error_of(R"({"reconstruct": {"method": "fbp", "init": "warm"}})") ==
        "cfg: reconstruct.init must be fbp or zeros");
  CHECK(error_of(R"({"evaluate": {"dynamic_range": 0}})") ==
        "cfg: evaluate.dynamic_range must be positive");
}

TEST_CASE("rendering a parsed config is a fixed point") {
  const std::string text = R"({
    "output_dir": "runs/demo",
    "train": {"builtin_count": 2, "builtin_size": 64, "iterations": 10},
    "simulate": {"num_views": 90, "seed": 11, "noiseless": true},
    "reconstruct": {"method": "ep", "beta": 32768.0, "ep_delta": 12.0},
    "evaluate": {"roi_radius": 30.0}
  })";
  const std::string once = render_experiment_config(parse(text));
  const std::string twice = render_experiment_config(parse_experiment_config(once, "cfg"));
  CHECK(once == twice);
  CHECK(once.find("\"preset\": \"desk-parallel\"") != std::string::npos);
  CHECK(once.find("\"method\": \"ep\"") != std::string::npos);
}
