#pragma once

#include <mcst2/ct_system.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcst2::detail {

struct Ray {
  double px, py;  // a point on the line, mm
  double dx, dy;  // unit direction
};

inline Ray ray_for(const CtGeometry& g, Index view, Index det) {
  const double t = (static_cast<double>(det) - 0.5 * static_cast<double>(g.num_detectors - 1)) *
                   g.detector_spacing;
  Ray ray;
  if (g.mode == CtMode::parallel) {
    const double theta = static_cast<double>(view) * 3.14159265358979323846 /
                         static_cast<double>(g.num_views);
    const double ux = std::cos(theta), uy = std::sin(theta);
    ray.px = t * ux;
    ray.py = t * uy;
    ray.dx = -uy;
    ray.dy = ux;
  } else {
    const double beta = static_cast<double>(view) * 2.0 * 3.14159265358979323846 /
                        static_cast<double>(g.num_views);
    const double sx = std::cos(beta), sy = std::sin(beta);
    const double sourcex = g.source_to_center * sx;
    const double sourcey = g.source_to_center * sy;
    // Flat detector perpendicular to the central ray, on the far side of the
    // rotation center.
    const double centerx = (g.source_to_center - g.source_to_detector) * sx;
    const double centery = (g.source_to_center - g.source_to_detector) * sy;
    const double ex = -sy, ey = sx;
    const double qx = centerx + t * ex;
    const double qy = centery + t * ey;
    const double len = std::hypot(qx - sourcex, qy - sourcey);
    ray.px = sourcex;
    ray.py = sourcey;
    ray.dx = (qx - sourcex) / len;
    ray.dy = (qy - sourcey) / len;
  }
  return ray;
}

// Walks the pixel grid along the ray, calling visit(row, col, length_mm) for
// every intersected pixel. Exact Siddon-style traversal; rays that lie on a
// grid line are attributed to the higher-index side by the floor convention.
template <typename Visit>
void trace_ray(const Ray& ray, const CtGeometry& g, Visit&& visit) {
  const Index rows = g.image_rows, cols = g.image_cols;
  const double px = g.image_pixel_size;
  const double xmin = -0.5 * static_cast<double>(cols) * px;
  const double ymin = -0.5 * static_cast<double>(rows) * px;
  const double xmax = -xmin, ymax = -ymin;
  constexpr double kParallelEps = 1e-12;
  // Snap near-axis directions to exact zero so a ray riding a grid line
  // keeps a constant cross-coordinate and lands on the higher-index side
  // everywhere, instead of drifting across the line at fp resolution.
  const double dx = std::abs(ray.dx) < kParallelEps ? 0.0 : ray.dx;
  const double dy = std::abs(ray.dy) < kParallelEps ? 0.0 : ray.dy;

  double s0 = -std::numeric_limits<double>::infinity();
  double s1 = std::numeric_limits<double>::infinity();
  if (dx == 0.0) {
    if (ray.px < xmin || ray.px >= xmax) return;
  } else {
    const double a = (xmin - ray.px) / dx;
    const double b = (xmax - ray.px) / dx;
    s0 = std::max(s0, std::min(a, b));
    s1 = std::min(s1, std::max(a, b));
  }
  if (dy == 0.0) {
    if (ray.py < ymin || ray.py >= ymax) return;
  } else {
    const double a = (ymin - ray.py) / dy;
    const double b = (ymax - ray.py) / dy;
    s0 = std::max(s0, std::min(a, b));
    s1 = std::min(s1, std::max(a, b));
  }
  if (!(s0 < s1)) return;

  const double startx = ray.px + s0 * dx;
  const double starty = ray.py + s0 * dy;
  Index col = static_cast<Index>(std::floor((startx - xmin) / px));
  Index row = static_cast<Index>(std::floor((starty - ymin) / px));
  col = std::clamp<Index>(col, 0, cols - 1);
  row = std::clamp<Index>(row, 0, rows - 1);

  const Index stepc = dx > 0 ? 1 : -1;
  const Index stepr = dy > 0 ? 1 : -1;
  double s = s0;
  const Index max_steps = rows + cols + 4;
  for (Index step = 0; step < max_steps; ++step) {
    double next_x = std::numeric_limits<double>::infinity();
    double next_y = std::numeric_limits<double>::infinity();
    if (dx != 0.0) {
      const double bx = xmin + static_cast<double>(col + (stepc > 0 ? 1 : 0)) * px;
      next_x = (bx - ray.px) / dx;
    }
    if (dy != 0.0) {
      const double by = ymin + static_cast<double>(row + (stepr > 0 ? 1 : 0)) * px;
      next_y = (by - ray.py) / dy;
    }
    const double snext = std::min({next_x, next_y, s1});
    // A crossing at (or fractionally before) the current parameter happens
    // when the ray enters exactly at a cell corner; skip the empty segment
    // but keep stepping, progress is guaranteed by the index increments.
    if (snext > s) {
      visit(row, col, snext - s);
      s = snext;
    }
    if (snext >= s1) return;
    if (next_x <= next_y) {
      col += stepc;
      if (col < 0 || col >= cols) return;
    }
    if (next_y <= next_x) {
      row += stepr;
      if (row < 0 || row >= rows) return;
    }
  }
}

}  // namespace mcst2::detail
