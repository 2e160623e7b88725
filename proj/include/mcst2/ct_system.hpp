#pragma once

#include <mcst2/core.hpp>

#include <cstdint>

namespace mcst2 {

enum class CtMode { parallel, fan };

// 2D acquisition geometry plus the image grid it measures. Physical
// coordinates are in mm with the origin at the image center; pixel (r, c) is
// centered at ((c - (W-1)/2) * px, (r - (H-1)/2) * px).
//
// Parallel mode: view a uses angle theta = a * pi / num_views; the detector
// axis is (cos theta, sin theta), rays run along (-sin theta, cos theta), and
// element d sits at signed offset (d - (N-1)/2) * detector_spacing.
// Fan mode: view a uses beta = a * 2 pi / num_views; the source sits at
// source_to_center * (cos beta, sin beta) and a flat detector of the same
// element layout sits source_to_detector away from it, perpendicular to the
// central ray.
//
// unit_scale converts image values to attenuation per mm, so the forward
// projection of an image is unit_scale * (intersection length in mm weighted
// by pixel values). 1.0 means image values are already attenuation per mm.
struct CtGeometry {
  CtMode mode = CtMode::parallel;
  Index num_detectors = 185;
  Index num_views = 180;
  double detector_spacing = 2.0;
  double source_to_detector = 1085.6;
  double source_to_center = 595.0;
  double image_pixel_size = 2.0;
  Index image_rows = 128;
  Index image_cols = 128;
  double unit_scale = 1.0;

  Index num_rays() const { return num_detectors * num_views; }
  Index ray_index(Index view, Index det) const { return view * num_detectors + det; }
  void validate() const;  // throws std::invalid_argument
};

// The full-scale fan geometry used by the reference experiments: 888 detector
// columns of 1.2858 mm over 984 views.
CtGeometry paper_fan_geometry(Index image_rows = 420, Index image_cols = 420,
                              double image_pixel_size = 1.0);

struct NoiseModel {
  double incident_intensity = 1e4;
  double gaussian_std = 5.0;
  // Deterministic limit: exact line integrals, weights from noise-free counts
  // (gaussian_std plays no role when set).
  bool noiseless = false;
  // Counts are clamped to at least this before the log.
  double count_floor = 0.1;

  void validate() const;
};

struct CtProblem {
  Vector sinogram;  // ray_index layout: view-major, detector-minor
  Vector weights;   // diagonal statistical weights, same layout
  CtGeometry geometry;
};

// Exact ray-pixel intersection lengths (Siddon traversal), scaled by
// unit_scale. Linear in the image.
Vector forward_project(const Matrix& image, const CtGeometry& geometry);

// Exact adjoint of forward_project.
Matrix back_project(const Vector& sinogram, const CtGeometry& geometry);

// Transmission counts Poisson(I0 * exp(-l)) plus additive Gaussian detector
// noise, floored, post-log. Weight per ray is yhat^2 / (yhat + sigma^2) with
// yhat the floored count. Bit-reproducible for a fixed seed.
CtProblem simulate_measurements(const Matrix& ground_truth, const CtGeometry& geometry,
                                const NoiseModel& noise, std::uint64_t seed);

// Apodization applied on top of the ramp gain, from sharpest to smoothest:
// plain ramp, Shepp-Logan (sinc), cosine, Hann.
enum class FbpWindow { ramp, shepp_logan, cosine, hann };

// Filtered back-projection: windowed ramp filtering per view, pixel-driven
// backprojection with Catmull-Rom detector interpolation (fan mode uses the
// flat-detector weighted variant). Output is divided by unit_scale, so it is
// in image units.
Matrix fbp_reconstruct(const CtProblem& problem, FbpWindow window = FbpWindow::hann);

}  // namespace mcst2
