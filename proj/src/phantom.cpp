#include <mcst2/phantom.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace mcst2 {

namespace {

struct Ellipse {
  double value;
  double a, b;       // semi-axes in [-1, 1] coordinates
  double x0, y0;     // center
  double phi_deg;    // counterclockwise rotation
};

// Sums antialiased ellipse contributions onto the grid. The [-1, 1] square
// maps onto the pixel grid with x rightward along columns and y upward along
// decreasing row index.
Matrix rasterize(Index rows, Index cols, const std::vector<Ellipse>& ellipses, double scale,
                 Index supersample) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("phantom: dimensions must be positive");
  if (supersample < 1) throw std::invalid_argument("phantom: supersample must be positive");
  const double sx = 2.0 / static_cast<double>(cols);
  const double sy = 2.0 / static_cast<double>(rows);
  const Index ss = supersample;
  const double sub = 1.0 / static_cast<double>(ss);

  struct Prepared {
    double value, cphi, sphi, x0, y0, inva2, invb2;
  };
  std::vector<Prepared> prep;
  prep.reserve(ellipses.size());
  for (const Ellipse& e : ellipses) {
    const double rad = e.phi_deg * 3.14159265358979323846 / 180.0;
    prep.push_back({e.value * scale, std::cos(rad), std::sin(rad), e.x0, e.y0,
                    1.0 / (e.a * e.a), 1.0 / (e.b * e.b)});
  }

  Matrix img(rows, cols);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Index i = 0; i < ss; ++i) {
        for (Index j = 0; j < ss; ++j) {
          const double x = (static_cast<double>(c) + (static_cast<double>(j) + 0.5) * sub) * sx -
                           1.0;
          const double y = 1.0 - (static_cast<double>(r) + (static_cast<double>(i) + 0.5) * sub) *
                                     sy;
          for (const Prepared& e : prep) {
            const double dx = x - e.x0;
            const double dy = y - e.y0;
            const double u = e.cphi * dx + e.sphi * dy;
            const double v = -e.sphi * dx + e.cphi * dy;
            if (u * u * e.inva2 + v * v * e.invb2 <= 1.0) acc += e.value;
          }
        }
      }
      img(r, c) = acc / static_cast<double>(ss * ss);
    }
  }
  return img;
}

}  // namespace

Matrix shepp_logan(Index rows, Index cols, double scale, Index supersample) {
  const std::vector<Ellipse> ellipses = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  return rasterize(rows, cols, ellipses, scale, supersample);
}

Matrix disk_phantom(Index rows, Index cols, double radius_pixels, double value,
                    Index supersample) {
  // Radius is given in pixels; the rasterizer works in the [-1, 1] frame, so
  // the disk becomes an ellipse with per-axis normalized semi-axes.
  const double rx = 2.0 * radius_pixels / static_cast<double>(cols);
  const double ry = 2.0 * radius_pixels / static_cast<double>(rows);
  return rasterize(rows, cols, {{1.0, rx, ry, 0.0, 0.0, 0.0}}, value, supersample);
}

Matrix random_ellipse_phantom(Index rows, Index cols, std::uint64_t seed, Index num_inserts,
                              double body_value, Index supersample) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Ellipse> ellipses;
  const double body_a = 0.82 + 0.1 * unit(rng);
  const double body_b = 0.82 + 0.1 * unit(rng);
  ellipses.push_back({1.0, body_a, body_b, 0.0, 0.0, 360.0 * unit(rng)});
  for (Index i = 0; i < num_inserts; ++i) {
    Ellipse e;
    e.value = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.35 * unit(rng));
    e.a = 0.04 + 0.3 * unit(rng);
    e.b = 0.04 + 0.3 * unit(rng);
    const double rad = 0.55 * unit(rng);
    const double ang = 2.0 * 3.14159265358979323846 * unit(rng);
    e.x0 = rad * std::cos(ang);
    e.y0 = rad * std::sin(ang);
    e.phi_deg = 360.0 * unit(rng);
    ellipses.push_back(e);
  }
  Matrix img = rasterize(rows, cols, ellipses, body_value, supersample);
  return img.cwiseMax(0.0);
}

std::vector<Matrix> builtin_training_slices(Index count, Index size, std::uint64_t seed) {
  std::vector<Matrix> slices;
  slices.reserve(static_cast<size_t>(count));
  for (Index i = 0; i < count; ++i)
    slices.push_back(random_ellipse_phantom(size, size, seed + static_cast<std::uint64_t>(i)));
  return slices;
}

}  // namespace mcst2
