#include <mcst2/metrics.hpp>

#include <cmath>
#include <stdexcept>

namespace mcst2 {

namespace {

void check_pair(const Matrix& a, const Matrix& b, const RoiMask& roi) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("metrics: image shapes disagree");
  if (roi.mask.rows() != a.rows() || roi.mask.cols() != a.cols())
    throw std::invalid_argument("metrics: mask shape disagrees with images");
}

Matrix gaussian_window(Index side, double sigma) {
  Matrix w(side, side);
  const double center = 0.5 * static_cast<double>(side - 1);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      const double dr = static_cast<double>(r) - center;
      const double dc = static_cast<double>(c) - center;
      w(r, c) = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
    }
  return w / w.sum();
}

}  // namespace

RoiMask circular_roi(Index rows, Index cols, double radius) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("circular_roi: image dimensions must be positive");
  RoiMask roi;
  roi.center_row = 0.5 * static_cast<double>(rows - 1);
  roi.center_col = 0.5 * static_cast<double>(cols - 1);
  roi.radius = radius > 0.0 ? radius : 0.48 * static_cast<double>(std::min(rows, cols));
  roi.mask.resize(rows, cols);
  const double r2 = roi.radius * roi.radius;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double dr = static_cast<double>(r) - roi.center_row;
      const double dc = static_cast<double>(c) - roi.center_col;
      roi.mask(r, c) = dr * dr + dc * dc <= r2;
    }
  return roi;
}

double rmse(const Matrix& a, const Matrix& b, const RoiMask& roi) {
  check_pair(a, b, roi);
  double acc = 0.0;
  Index n = 0;
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < a.cols(); ++c) {
      if (!roi.mask(r, c)) continue;
      const double d = a(r, c) - b(r, c);
      acc += d * d;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("rmse: empty mask");
  return std::sqrt(acc / static_cast<double>(n));
}

double ssim(const Matrix& a, const Matrix& b, const RoiMask& roi, double dynamic_range,
            const SsimOptions& options) {
  check_pair(a, b, roi);
  if (dynamic_range <= 0.0) throw std::invalid_argument("ssim: dynamic range must be positive");
  if (options.window < 1 || options.window % 2 == 0)
    throw std::invalid_argument("ssim: window must be a positive odd size");
  if (options.sigma <= 0.0) throw std::invalid_argument("ssim: sigma must be positive");

  const Matrix w = gaussian_window(options.window, options.sigma);
  const Index half = options.window / 2;
  const double c1 = options.k1 * dynamic_range * options.k1 * dynamic_range;
  const double c2 = options.k2 * dynamic_range * options.k2 * dynamic_range;

  double total = 0.0;
  Index n = 0;
  for (Index r = half; r < a.rows() - half; ++r)
    for (Index c = half; c < a.cols() - half; ++c) {
      if (!roi.mask(r, c)) continue;
      double mu_a = 0.0, mu_b = 0.0;
      for (Index dr = 0; dr < options.window; ++dr)
        for (Index dc = 0; dc < options.window; ++dc) {
          mu_a += w(dr, dc) * a(r - half + dr, c - half + dc);
          mu_b += w(dr, dc) * b(r - half + dr, c - half + dc);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (Index dr = 0; dr < options.window; ++dr)
        for (Index dc = 0; dc < options.window; ++dc) {
          const double da = a(r - half + dr, c - half + dc) - mu_a;
          const double db = b(r - half + dr, c - half + dc) - mu_b;
          var_a += w(dr, dc) * (da * da);
          var_b += w(dr, dc) * (db * db);
          cov += w(dr, dc) * (da * db);
        }
      const double mean_prod = mu_a * mu_b;
      const double mean_sq_a = mu_a * mu_a;
      const double mean_sq_b = mu_b * mu_b;
      total += ((2.0 * mean_prod + c1) * (2.0 * cov + c2)) /
               ((mean_sq_a + mean_sq_b + c1) * (var_a + var_b + c2));
      ++n;
    }
  if (n == 0) throw std::invalid_argument("ssim: no full window fits inside the mask");
  return total / static_cast<double>(n);
}

}  // namespace mcst2
