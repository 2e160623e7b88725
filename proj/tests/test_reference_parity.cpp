#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcst2/reference.hpp>

#include "oracles.hpp"

#include <random>

using namespace mcst2;

namespace {

Matrix random_image(Index h, Index w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix m(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) m(r, c) = dist(rng);
  return m;
}

double max_rel(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return (a - b).cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("patch kernels agree with the serial reference") {
  for (const Boundary boundary : {Boundary::wrap, Boundary::trim}) {
    PatchGeometry geom;
    geom.image_height = 37;
    geom.image_width = 29;
    geom.patch_side = 5;
    geom.stride = 3;
    geom.boundary = boundary;
    const Matrix image = random_image(37, 29, 1);

    const Matrix fast = extract_patches(image, geom).data;
    const Matrix slow = reference::extract_patches(image, geom);
    CHECK((fast.array() == slow.array()).all());

    const Matrix patches = random_image(geom.patch_dim(), geom.num_patches(), 2);
    const AggregateResult a = aggregate_patches(patches, geom);
    const AggregateResult b = reference::aggregate_patches(patches, geom);
    CHECK((a.count.array() == b.count.array()).all());
    CHECK(max_rel(a.sum, b.sum) <= 1e-12);
  }
}

TEST_CASE("projectors agree with the crossing-list reference") {
  for (const CtMode mode : {CtMode::parallel, CtMode::fan}) {
    CtGeometry g;
    g.mode = mode;
    g.image_rows = 33;
    g.image_cols = 27;
    g.image_pixel_size = 1.7;
    g.num_detectors = 51;
    g.num_views = 40;
    g.detector_spacing = 1.3;
    g.unit_scale = 0.7;

    const Matrix image = random_image(33, 27, 3);
    const Vector fast = forward_project(image, g);
    const Vector slow = reference::forward_project(image, g);
    const double fscale = fast.cwiseAbs().maxCoeff();
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12 * fscale);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> dist;
    Vector sino(g.num_rays());
    for (Index i = 0; i < sino.size(); ++i) sino(i) = dist(rng);
    const Matrix back_fast = back_project(sino, g);
    const Matrix back_slow = reference::back_project(sino, g);
    CHECK(max_rel(back_fast, back_slow) <= 1e-12);
  }
}

TEST_CASE("projectors agree on detector offsets aligned with pixel boundaries") {
  CtGeometry g;
  g.image_rows = 32;
  g.image_cols = 32;
  g.image_pixel_size = 2.0;
  g.num_detectors = 37;
  g.num_views = 24;
  g.detector_spacing = 2.0;

  const Matrix image = random_image(32, 32, 6);
  const Vector fast = forward_project(image, g);
  const Vector slow = reference::forward_project(image, g);
  CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12 * fast.cwiseAbs().maxCoeff());

  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  Vector sino(g.num_rays());
  for (Index i = 0; i < sino.size(); ++i) sino(i) = dist(rng);
  CHECK(max_rel(back_project(sino, g), reference::back_project(sino, g)) <= 1e-12);
}

TEST_CASE("coding kernels agree with the per-column scalar reference") {
  std::mt19937_64 rng(5);
  const Index p = 16;
  Mcst2Model model;
  model.patch_dim = p;
  for (int k = 0; k < 3; ++k) model.layer1.push_back(oracle::random_orthonormal(p, rng));
  for (int l = 0; l < 2; ++l) model.layer2.push_back(oracle::random_orthonormal(p, rng));
  // Thresholds sized so the coefficient supports come out partial on unit
  // gaussian data: a support that is entirely kept or entirely dropped for
  // every cluster makes the per-column costs tie exactly, and the argmin
  // label then depends on summation order.
  TrainConfig cfg;
  cfg.num_clusters1 = 3;
  cfg.num_clusters2 = 2;
  cfg.eta1 = 0.95;
  cfg.eta2 = 0.19;

  const Matrix patches = oracle::random_matrix(p, 300, rng);
  const CodingState start = make_initial_state(patches, model, cfg);

  const CodingState fast1 = update_layer1_codes_clusters(patches, model, start, cfg);
  const CodingState slow1 = reference::update_layer1_codes_clusters(patches, model, start, cfg);
  CHECK(fast1.labels1 == slow1.labels1);
  CHECK(max_rel(fast1.z1, slow1.z1) <= 1e-12);
  CHECK(max_rel(fast1.r2, slow1.r2) <= 1e-12);
  CHECK(objective_p0(patches, model, fast1, cfg) ==
        doctest::Approx(objective_p0(patches, model, slow1, cfg)).epsilon(1e-12));

  const CodingState fast2 = update_layer2_codes_clusters(fast1, model, cfg);
  const CodingState slow2 = reference::update_layer2_codes_clusters(fast1, model, cfg);
  CHECK(fast2.labels2 == slow2.labels2);
  CHECK(max_rel(fast2.z2, slow2.z2) <= 1e-12);
  CHECK(objective_p0(patches, model, fast2, cfg) ==
        doctest::Approx(objective_p0(patches, model, slow2, cfg)).epsilon(1e-12));
}
