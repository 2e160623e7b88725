#include <mcst2/reference.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mcst2::reference {

namespace {

constexpr double kPi = 3.14159265358979323846;

Index wrap_index(Index v, Index n) { return v >= n ? v - n : v; }

struct Line {
  double px, py;
  double dx, dy;
};

// The documented element layout: offsets centered on the detector array,
// parallel views over half a turn, fan views over a full turn with a flat
// detector perpendicular to the central ray.
Line line_for(const CtGeometry& g, Index view, Index det) {
  const double t = (static_cast<double>(det) - 0.5 * static_cast<double>(g.num_detectors - 1)) *
                   g.detector_spacing;
  Line line;
  if (g.mode == CtMode::parallel) {
    const double theta = static_cast<double>(view) * kPi / static_cast<double>(g.num_views);
    line.px = t * std::cos(theta);
    line.py = t * std::sin(theta);
    line.dx = -std::sin(theta);
    line.dy = std::cos(theta);
  } else {
    const double beta = static_cast<double>(view) * 2.0 * kPi / static_cast<double>(g.num_views);
    const double cx = std::cos(beta), cy = std::sin(beta);
    line.px = g.source_to_center * cx;
    line.py = g.source_to_center * cy;
    const double ex = (g.source_to_center - g.source_to_detector) * cx - t * cy - line.px;
    const double ey = (g.source_to_center - g.source_to_detector) * cy + t * cx - line.py;
    const double len = std::hypot(ex, ey);
    line.dx = ex / len;
    line.dy = ey / len;
  }
  return line;
}

// Collects every grid-plane crossing parameter inside the clip interval,
// sorts, and classifies each segment by its midpoint.
template <typename Visit>
void walk_cells(const Line& line, const CtGeometry& g, Visit&& visit) {
  const Index rows = g.image_rows, cols = g.image_cols;
  const double cell = g.image_pixel_size;
  const double xmin = -0.5 * static_cast<double>(cols) * cell;
  const double ymin = -0.5 * static_cast<double>(rows) * cell;
  constexpr double kAxisEps = 1e-12;
  // Near-axis directions are snapped to exact zero so a ray riding a grid
  // line keeps a constant cross-coordinate over its whole length.
  const double dx = std::abs(line.dx) < kAxisEps ? 0.0 : line.dx;
  const double dy = std::abs(line.dy) < kAxisEps ? 0.0 : line.dy;

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const auto clip = [&](double p, double d, double lim0, double lim1) {
    if (d == 0.0) return p >= lim0 && p < lim1;
    const double a = (lim0 - p) / d;
    const double b = (lim1 - p) / d;
    lo = std::max(lo, std::min(a, b));
    hi = std::min(hi, std::max(a, b));
    return true;
  };
  if (!clip(line.px, dx, xmin, -xmin)) return;
  if (!clip(line.py, dy, ymin, -ymin)) return;
  if (!(lo < hi)) return;

  std::vector<double> stops;
  stops.reserve(static_cast<std::size_t>(rows + cols + 2));
  stops.push_back(lo);
  stops.push_back(hi);
  if (dx != 0.0)
    for (Index j = 0; j <= cols; ++j) {
      const double s = (xmin + static_cast<double>(j) * cell - line.px) / dx;
      if (s > lo && s < hi) stops.push_back(s);
    }
  if (dy != 0.0)
    for (Index j = 0; j <= rows; ++j) {
      const double s = (ymin + static_cast<double>(j) * cell - line.py) / dy;
      if (s > lo && s < hi) stops.push_back(s);
    }
  std::sort(stops.begin(), stops.end());

  for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
    const double len = stops[i + 1] - stops[i];
    if (!(len > 0.0)) continue;
    const double mid = 0.5 * (stops[i] + stops[i + 1]);
    const double x = line.px + mid * dx;
    const double y = line.py + mid * dy;
    const Index col = static_cast<Index>(std::floor((x - xmin) / cell));
    const Index row = static_cast<Index>(std::floor((y - ymin) / cell));
    if (row < 0 || row >= rows || col < 0 || col >= cols) continue;
    visit(row, col, len);
  }
}

Vector scalar_matvec(const Matrix& m, const Vector& v) {
  Vector out(m.rows());
  for (Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Index c = 0; c < m.cols(); ++c) acc += m(r, c) * v(c);
    out(r) = acc;
  }
  return out;
}

Vector scalar_matvec_transposed(const Matrix& m, const Vector& v) {
  Vector out(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    double acc = 0.0;
    for (Index r = 0; r < m.rows(); ++r) acc += m(r, c) * v(r);
    out(c) = acc;
  }
  return out;
}

}  // namespace

Matrix extract_patches(const Matrix& image, const PatchGeometry& geometry) {
  geometry.validate();
  if (image.rows() != geometry.image_height || image.cols() != geometry.image_width)
    throw std::invalid_argument("reference extract_patches: image shape disagrees with geometry");
  const Index b = geometry.patch_side;
  const bool wrap = geometry.boundary == Boundary::wrap;
  Matrix out(geometry.patch_dim(), geometry.num_patches());
  for (Index i = 0; i < out.cols(); ++i)
    for (Index dr = 0; dr < b; ++dr)
      for (Index dc = 0; dc < b; ++dc) {
        const Index r = wrap ? wrap_index(geometry.corner_row(i) + dr, geometry.image_height)
                             : geometry.corner_row(i) + dr;
        const Index c = wrap ? wrap_index(geometry.corner_col(i) + dc, geometry.image_width)
                             : geometry.corner_col(i) + dc;
        out(dr * b + dc, i) = image(r, c);
      }
  return out;
}

AggregateResult aggregate_patches(const Matrix& patches, const PatchGeometry& geometry) {
  geometry.validate();
  if (patches.rows() != geometry.patch_dim() || patches.cols() != geometry.num_patches())
    throw std::invalid_argument("reference aggregate_patches: patch shape disagrees with geometry");
  const Index b = geometry.patch_side;
  const bool wrap = geometry.boundary == Boundary::wrap;
  AggregateResult out;
  out.sum = Matrix::Zero(geometry.image_height, geometry.image_width);
  out.count = Matrix::Zero(geometry.image_height, geometry.image_width);
  for (Index i = 0; i < patches.cols(); ++i)
    for (Index dr = 0; dr < b; ++dr)
      for (Index dc = 0; dc < b; ++dc) {
        const Index r = wrap ? wrap_index(geometry.corner_row(i) + dr, geometry.image_height)
                             : geometry.corner_row(i) + dr;
        const Index c = wrap ? wrap_index(geometry.corner_col(i) + dc, geometry.image_width)
                             : geometry.corner_col(i) + dc;
        out.sum(r, c) += patches(dr * b + dc, i);
        out.count(r, c) += 1.0;
      }
  return out;
}

Vector forward_project(const Matrix& image, const CtGeometry& geometry) {
  geometry.validate();
  if (image.rows() != geometry.image_rows || image.cols() != geometry.image_cols)
    throw std::invalid_argument("reference forward_project: image shape disagrees with geometry");
  Vector sino = Vector::Zero(geometry.num_rays());
  for (Index view = 0; view < geometry.num_views; ++view)
    for (Index det = 0; det < geometry.num_detectors; ++det) {
      double acc = 0.0;
      walk_cells(line_for(geometry, view, det), geometry,
                 [&](Index row, Index col, double len) { acc += len * image(row, col); });
      sino(geometry.ray_index(view, det)) = acc * geometry.unit_scale;
    }
  return sino;
}

Matrix back_project(const Vector& sinogram, const CtGeometry& geometry) {
  geometry.validate();
  if (sinogram.size() != geometry.num_rays())
    throw std::invalid_argument("reference back_project: sinogram length disagrees with geometry");
  Matrix image = Matrix::Zero(geometry.image_rows, geometry.image_cols);
  for (Index view = 0; view < geometry.num_views; ++view)
    for (Index det = 0; det < geometry.num_detectors; ++det) {
      const double value = sinogram(geometry.ray_index(view, det)) * geometry.unit_scale;
      walk_cells(line_for(geometry, view, det), geometry,
                 [&](Index row, Index col, double len) { image(row, col) += len * value; });
    }
  return image;
}

CodingState update_layer1_codes_clusters(const Matrix& patches, const Mcst2Model& model,
                                         CodingState state, const TrainConfig& cfg) {
  const double thr = cfg.eta1 / std::sqrt(2.0);
  const Index p = model.patch_dim;
  for (Index i = 0; i < patches.cols(); ++i) {
    const Matrix& w2 = model.layer2[static_cast<std::size_t>(state.labels2[i])];
    const Vector coupling = scalar_matvec_transposed(w2, state.z2.col(i));
    double best_cost = std::numeric_limits<double>::infinity();
    Index best_k = 0;
    Vector best_a, best_z;
    for (Index k = 0; k < model.num_clusters1(); ++k) {
      const Vector a = scalar_matvec(model.layer1[static_cast<std::size_t>(k)], patches.col(i));
      Vector z(p);
      Index nnz = 0;
      for (Index t = 0; t < p; ++t) {
        const double m = a(t) - 0.5 * coupling(t);
        if (std::abs(m) >= thr) {
          z(t) = m;
          if (m != 0.0) ++nnz;
        } else {
          z(t) = 0.0;
        }
      }
      const Vector residual = a - z;
      const Vector second = scalar_matvec(w2, residual);
      double cost = cfg.eta1 * cfg.eta1 * static_cast<double>(nnz);
      for (Index t = 0; t < p; ++t) {
        cost += residual(t) * residual(t);
        const double d = second(t) - state.z2(t, i);
        cost += d * d;
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_k = k;
        best_a = a;
        best_z = z;
      }
    }
    state.labels1[i] = best_k;
    state.z1.col(i) = best_z;
    state.r2.col(i) = best_a - best_z;
  }
  return state;
}

CodingState update_layer2_codes_clusters(CodingState state, const Mcst2Model& model,
                                         const TrainConfig& cfg) {
  const Index p = model.patch_dim;
  for (Index i = 0; i < state.r2.cols(); ++i) {
    double best_cost = std::numeric_limits<double>::infinity();
    Index best_l = 0;
    Vector best_z;
    for (Index l = 0; l < model.num_clusters2(); ++l) {
      const Vector b = scalar_matvec(model.layer2[static_cast<std::size_t>(l)], state.r2.col(i));
      Vector z(p);
      double cost = 0.0;
      for (Index t = 0; t < p; ++t) {
        if (std::abs(b(t)) >= cfg.eta2) {
          z(t) = b(t);
          if (b(t) != 0.0) cost += cfg.eta2 * cfg.eta2;
        } else {
          z(t) = 0.0;
          cost += b(t) * b(t);
        }
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_l = l;
        best_z = z;
      }
    }
    state.labels2[i] = best_l;
    state.z2.col(i) = best_z;
  }
  return state;
}

}  // namespace mcst2::reference
