#pragma once

#include <mcst2/core.hpp>

namespace mcst2 {

// Circular evaluation region. mask(r, c) is true exactly where
// (r - center_row)^2 + (c - center_col)^2 <= radius^2.
struct RoiMask {
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 0.0;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  Index count() const { return static_cast<Index>(mask.count()); }
};

// Centered circular region; radius <= 0 picks the default 0.48 * min(rows,
// cols), which covers all tissue in the test phantoms.
RoiMask circular_roi(Index rows, Index cols, double radius = -1.0);

// sqrt of the mean squared difference over masked pixels.
double rmse(const Matrix& a, const Matrix& b, const RoiMask& roi);

struct SsimOptions {
  Index window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean local structural similarity with Gaussian-weighted window statistics
// and stabilizers (k1 * dynamic_range)^2, (k2 * dynamic_range)^2. Windows are
// centered on masked pixels and must lie fully inside the image; centers too
// close to the border for a full window are skipped.
double ssim(const Matrix& a, const Matrix& b, const RoiMask& roi, double dynamic_range,
            const SsimOptions& options = {});

}  // namespace mcst2
