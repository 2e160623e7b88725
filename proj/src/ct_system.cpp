#include <mcst2/ct_system.hpp>

#include "ray_trace.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace mcst2 {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_sinogram(const Vector& sino, const CtGeometry& g, const char* what) {
  if (sino.size() != g.num_rays())
    throw std::invalid_argument(std::string(what) + ": sinogram length disagrees with geometry");
}

void check_image(const Matrix& image, const CtGeometry& g, const char* what) {
  if (image.rows() != g.image_rows || image.cols() != g.image_cols)
    throw std::invalid_argument(std::string(what) + ": image shape disagrees with geometry");
}

// Windowed ramp kernel by inverse DFT: g[n] = (1/M) sum_k |f_k| w(f_k)
// cos(2 pi k n / M) with f_k on the length-M frequency grid for the given
// sample spacing. Returns lags 0..num_lags-1; filtering is then the plain
// symmetric convolution sum q[d] = sum_d' p[d'] g[|d - d'|], which equals the
// classic zero-padded frequency-domain filtering for M >= 2 * num_lags.
std::vector<double> ramp_kernel(Index num_lags, double spacing, FbpWindow window) {
  Index m = 1;
  while (m < 4 * num_lags) m *= 2;
  const double nyquist = 1.0 / (2.0 * spacing);
  std::vector<double> kernel(static_cast<size_t>(num_lags), 0.0);
  for (Index n = 0; n < num_lags; ++n) {
    double acc = 0.0;
    for (Index k = 0; k < m; ++k) {
      const Index signed_k = k <= m / 2 ? k : k - m;
      const double freq = static_cast<double>(signed_k) / (static_cast<double>(m) * spacing);
      double gain = std::abs(freq);
      const double half = 0.5 * kPi * freq / nyquist;
      if (window == FbpWindow::shepp_logan && freq != 0.0) gain *= std::sin(half) / half;
      if (window == FbpWindow::cosine) gain *= std::cos(half);
      if (window == FbpWindow::hann)
        gain *= 0.5 * (1.0 + std::cos(kPi * freq / nyquist));
      acc += gain * std::cos(2.0 * kPi * static_cast<double>(k) * static_cast<double>(n) /
                             static_cast<double>(m));
    }
    kernel[static_cast<size_t>(n)] = acc / static_cast<double>(m);
  }
  return kernel;
}

// Samples one filtered view at fractional detector position. Catmull-Rom in
// the interior, linear next to the edges, zero outside.
double sample_view(const Matrix& filtered, Index v, double pos) {
  const Index nd = filtered.rows();
  const Index d0 = static_cast<Index>(std::floor(pos));
  if (d0 < 0 || d0 + 1 >= nd) return 0.0;
  const double t = pos - static_cast<double>(d0);
  const double p1 = filtered(d0, v), p2 = filtered(d0 + 1, v);
  if (d0 == 0 || d0 + 2 >= nd) return (1.0 - t) * p1 + t * p2;
  const double p0 = filtered(d0 - 1, v), p3 = filtered(d0 + 2, v);
  return p1 + 0.5 * t * (p2 - p0 +
                         t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                              t * (3.0 * (p1 - p2) + p3 - p0)));
}

// Filters every view of the sinogram with the symmetric kernel.
Matrix filter_views(const Vector& sino, const CtGeometry& g, const std::vector<double>& kernel) {
  const Index nd = g.num_detectors, nv = g.num_views;
  Matrix filtered(nd, nv);
#pragma omp parallel for schedule(static)
  for (Index v = 0; v < nv; ++v) {
    for (Index d = 0; d < nd; ++d) {
      double acc = 0.0;
      for (Index dp = 0; dp < nd; ++dp)
        acc += sino(g.ray_index(v, dp)) * kernel[static_cast<size_t>(std::abs(d - dp))];
      filtered(d, v) = acc;
    }
  }
  return filtered;
}

}  // namespace

void CtGeometry::validate() const {
  if (num_detectors < 1 || num_views < 1)
    throw std::invalid_argument("geometry: detector and view counts must be positive");
  if (detector_spacing <= 0.0 || image_pixel_size <= 0.0)
    throw std::invalid_argument("geometry: lengths must be positive");
  if (image_rows < 1 || image_cols < 1)
    throw std::invalid_argument("geometry: image dimensions must be positive");
  if (unit_scale <= 0.0) throw std::invalid_argument("geometry: unit_scale must be positive");
  if (mode == CtMode::fan) {
    if (source_to_detector <= 0.0 || source_to_center <= 0.0)
      throw std::invalid_argument("geometry: fan distances must be positive");
    if (source_to_center >= source_to_detector)
      throw std::invalid_argument("geometry: fan mode needs source_to_center < source_to_detector");
    const double half_diag = 0.5 * image_pixel_size *
                             std::hypot(static_cast<double>(image_rows),
                                        static_cast<double>(image_cols));
    if (source_to_center <= half_diag)
      throw std::invalid_argument("geometry: source path intersects the image grid");
  }
}

CtGeometry paper_fan_geometry(Index image_rows, Index image_cols, double image_pixel_size) {
  CtGeometry g;
  g.mode = CtMode::fan;
  g.num_detectors = 888;
  g.num_views = 984;
  g.detector_spacing = 1.2858;
  g.source_to_detector = 1085.6;
  g.source_to_center = 595.0;
  g.image_rows = image_rows;
  g.image_cols = image_cols;
  g.image_pixel_size = image_pixel_size;
  return g;
}

void NoiseModel::validate() const {
  if (incident_intensity <= 0.0)
    throw std::invalid_argument("noise: incident intensity must be positive");
  if (gaussian_std < 0.0) throw std::invalid_argument("noise: gaussian_std must be nonnegative");
  if (count_floor <= 0.0) throw std::invalid_argument("noise: count floor must be positive");
}

Vector forward_project(const Matrix& image, const CtGeometry& geometry) {
  geometry.validate();
  check_image(image, geometry, "forward_project");
  const Index nrays = geometry.num_rays();
  Vector sino(nrays);

#pragma omp parallel for schedule(static)
  for (Index r = 0; r < nrays; ++r) {
    const Index view = r / geometry.num_detectors;
    const Index det = r % geometry.num_detectors;
    double acc = 0.0;
    detail::trace_ray(detail::ray_for(geometry, view, det), geometry,
                      [&](Index row, Index col, double len) { acc += len * image(row, col); });
    sino(r) = acc * geometry.unit_scale;
  }
  return sino;
}

Matrix back_project(const Vector& sinogram, const CtGeometry& geometry) {
  geometry.validate();
  check_sinogram(sinogram, geometry, "back_project");
  const Index nrays = geometry.num_rays();
  const Index rows = geometry.image_rows, cols = geometry.image_cols;

  // Rays scatter into per-chunk accumulator images merged in chunk order, so
  // the result is independent of the thread count.
  const Index chunks = std::min<Index>(kScatterChunks, std::max<Index>(nrays, 1));
  const Index per = num_chunks(nrays, chunks);
  std::vector<Matrix> partial(static_cast<size_t>(chunks), Matrix::Zero(rows, cols));

#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    Matrix& img = partial[static_cast<size_t>(ch)];
    const Index lo = ch * per;
    const Index hi = std::min(nrays, lo + per);
    for (Index r = lo; r < hi; ++r) {
      const double value = sinogram(r) * geometry.unit_scale;
      if (value == 0.0) continue;
      const Index view = r / geometry.num_detectors;
      const Index det = r % geometry.num_detectors;
      detail::trace_ray(detail::ray_for(geometry, view, det), geometry,
                        [&](Index row, Index col, double len) { img(row, col) += len * value; });
    }
  }

  Matrix out = Matrix::Zero(rows, cols);
  for (Index ch = 0; ch < chunks; ++ch) out += partial[static_cast<size_t>(ch)];
  return out;
}

CtProblem simulate_measurements(const Matrix& ground_truth, const CtGeometry& geometry,
                                const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  geometry.validate();
  check_image(ground_truth, geometry, "simulate_measurements");
  if (!(ground_truth.array() >= 0.0).all())
    throw std::invalid_argument("simulate_measurements: ground truth must be nonnegative");

  const Vector line_integrals = forward_project(ground_truth, geometry);
  const Index nrays = geometry.num_rays();

  CtProblem problem;
  problem.geometry = geometry;
  problem.sinogram.resize(nrays);
  problem.weights.resize(nrays);

  if (noise.noiseless) {
    for (Index r = 0; r < nrays; ++r) {
      const double counts = noise.incident_intensity * std::exp(-line_integrals(r));
      problem.sinogram(r) = line_integrals(r);
      problem.weights(r) = counts;
    }
    return problem;
  }

  const double var = noise.gaussian_std * noise.gaussian_std;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index r = 0; r < nrays; ++r) {
    const double mean = noise.incident_intensity * std::exp(-line_integrals(r));
    std::poisson_distribution<long long> poisson(mean);
    double counts = static_cast<double>(poisson(rng));
    if (noise.gaussian_std > 0.0) counts += noise.gaussian_std * gauss(rng);
    const double floored = std::max(counts, noise.count_floor);
    problem.sinogram(r) = std::log(noise.incident_intensity / floored);
    problem.weights(r) = floored * floored / (floored + var);
  }
  return problem;
}

Matrix fbp_reconstruct(const CtProblem& problem, FbpWindow window) {
  const CtGeometry& g = problem.geometry;
  g.validate();
  check_sinogram(problem.sinogram, g, "fbp_reconstruct");
  if (g.num_views < 2) throw std::invalid_argument("fbp_reconstruct: needs at least 2 views");

  const Index rows = g.image_rows, cols = g.image_cols;
  const Index nd = g.num_detectors;
  const double center = 0.5 * static_cast<double>(nd - 1);
  Matrix image(rows, cols);

  if (g.mode == CtMode::parallel) {
    const std::vector<double> kernel = ramp_kernel(nd, g.detector_spacing, window);
    const Matrix filtered = filter_views(problem.sinogram, g, kernel);
    const double scale = kPi / static_cast<double>(g.num_views) / g.unit_scale;

#pragma omp parallel for schedule(static)
    for (Index r = 0; r < rows; ++r) {
      const double y = (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) *
                       g.image_pixel_size;
      for (Index c = 0; c < cols; ++c) {
        const double x = (static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) *
                         g.image_pixel_size;
        double acc = 0.0;
        for (Index v = 0; v < g.num_views; ++v) {
          const double theta = static_cast<double>(v) * kPi / static_cast<double>(g.num_views);
          const double t = x * std::cos(theta) + y * std::sin(theta);
          acc += sample_view(filtered, v, t / g.detector_spacing + center);
        }
        image(r, c) = acc * scale;
      }
    }
    return image;
  }

  // Flat-detector fan beam: rescale samples onto the virtual detector through
  // the rotation center, cosine-weight, ramp-filter there, and backproject
  // with the inverse-square distance weight.
  const double rescale = g.source_to_center / g.source_to_detector;
  const double vspacing = g.detector_spacing * rescale;
  const double dso = g.source_to_center;
  Vector weighted(problem.sinogram.size());
  for (Index v = 0; v < g.num_views; ++v)
    for (Index d = 0; d < nd; ++d) {
      const double s = (static_cast<double>(d) - center) * vspacing;
      weighted(g.ray_index(v, d)) =
          problem.sinogram(g.ray_index(v, d)) * dso / std::sqrt(dso * dso + s * s);
    }
  const std::vector<double> kernel = ramp_kernel(nd, vspacing, window);
  const Matrix filtered = filter_views(weighted, g, kernel);
  const double scale = 2.0 * kPi / static_cast<double>(g.num_views) / 2.0 / g.unit_scale;

#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const double y = (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) *
                     g.image_pixel_size;
    for (Index c = 0; c < cols; ++c) {
      const double x = (static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) *
                       g.image_pixel_size;
      double acc = 0.0;
      for (Index v = 0; v < g.num_views; ++v) {
        const double beta = static_cast<double>(v) * 2.0 * kPi /
                            static_cast<double>(g.num_views);
        const double sx = std::cos(beta), sy = std::sin(beta);
        const double u = (dso - (x * sx + y * sy)) / dso;
        if (u <= 0.0) continue;
        const double s = (x * -sy + y * sx) / u;
        acc += sample_view(filtered, v, s / vspacing + center) / (u * u);
      }
      image(r, c) = acc * scale;
    }
  }
  return image;
}

}  // namespace mcst2
