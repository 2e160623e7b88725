// Times the OpenMP kernels against their serial reference implementations
// and reports the largest relative disagreement for each pair.
#include <mcst2/mcst2.hpp>
#include <mcst2/patch_ops.hpp>
#include <mcst2/ct_system.hpp>
#include <mcst2/reference.hpp>

#include <omp.h>

#include <cstdio>
#include <random>

using namespace mcst2;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return (a - b).cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

template <typename F>
auto time_call(F&& f, double* ms) {
  const double t0 = omp_get_wtime();
  auto result = f();
  *ms = (omp_get_wtime() - t0) * 1e3;
  return result;
}

void report(const char* name, double parallel_ms, double serial_ms, double diff) {
  std::printf("%-18s %10.1f %10.1f %8.2fx   %.3g\n", name, parallel_ms, serial_ms,
              serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-18s %10s %10s %9s   %s\n", "kernel", "omp ms", "serial ms", "speedup",
              "max rel diff");

  {
    PatchGeometry geom;
    geom.image_height = 256;
    geom.image_width = 256;
    geom.patch_side = 8;
    geom.stride = 1;
    geom.boundary = Boundary::wrap;
    const Matrix image = random_matrix(256, 256, 1);

    double par_ms = 0.0, ser_ms = 0.0;
    const PatchMatrix fast = time_call([&] { return extract_patches(image, geom); }, &par_ms);
    const Matrix slow = time_call([&] { return reference::extract_patches(image, geom); }, &ser_ms);
    report("extract_patches", par_ms, ser_ms, rel_diff(fast.data, slow));

    const Matrix patches = random_matrix(geom.patch_dim(), geom.num_patches(), 2);
    const AggregateResult agg_fast =
        time_call([&] { return aggregate_patches(patches, geom); }, &par_ms);
    const AggregateResult agg_slow =
        time_call([&] { return reference::aggregate_patches(patches, geom); }, &ser_ms);
    report("aggregate_patches", par_ms, ser_ms, rel_diff(agg_fast.sum, agg_slow.sum));
  }

  {
    CtGeometry g;
    g.image_rows = 128;
    g.image_cols = 128;
    g.image_pixel_size = 2.0;
    g.num_detectors = 185;
    g.num_views = 180;
    g.detector_spacing = 2.0;
    const Matrix image = random_matrix(128, 128, 3);

    double par_ms = 0.0, ser_ms = 0.0;
    const Vector fast = time_call([&] { return forward_project(image, g); }, &par_ms);
    const Vector slow = time_call([&] { return reference::forward_project(image, g); }, &ser_ms);
    report("forward_project", par_ms, ser_ms, rel_diff(fast, slow));

    const Vector sino = random_matrix(g.num_rays(), 1, 4);
    const Matrix back_fast = time_call([&] { return back_project(sino, g); }, &par_ms);
    const Matrix back_slow =
        time_call([&] { return reference::back_project(sino, g); }, &ser_ms);
    report("back_project", par_ms, ser_ms, rel_diff(back_fast, back_slow));
  }

  {
    std::mt19937_64 rng(5);
    TrainConfig cfg;
    cfg.num_clusters1 = 5;
    cfg.num_clusters2 = 2;
    cfg.eta1 = 0.6;
    cfg.eta2 = 0.4;
    Mcst2Model model = make_initial_model(8, cfg);
    const Matrix patches = random_matrix(64, 20000, 6);
    const CodingState start = make_initial_state(patches, model, cfg);

    double par_ms = 0.0, ser_ms = 0.0;
    const CodingState fast1 =
        time_call([&] { return update_layer1_codes_clusters(patches, model, start, cfg); },
                  &par_ms);
    const CodingState slow1 = time_call(
        [&] { return reference::update_layer1_codes_clusters(patches, model, start, cfg); },
        &ser_ms);
    report("layer1_coding", par_ms, ser_ms,
           std::max(rel_diff(fast1.z1, slow1.z1), rel_diff(fast1.r2, slow1.r2)));

    const CodingState fast2 =
        time_call([&] { return update_layer2_codes_clusters(fast1, model, cfg); }, &par_ms);
    const CodingState slow2 = time_call(
        [&] { return reference::update_layer2_codes_clusters(fast1, model, cfg); }, &ser_ms);
    report("layer2_coding", par_ms, ser_ms, rel_diff(fast2.z2, slow2.z2));
  }

  return 0;
}
