#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcst2/metrics.hpp>

#include <cmath>
#include <random>

using namespace mcst2;

namespace {

Matrix random_image(Index h, Index w, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) m(r, c) = dist(rng);
  return m;
}

// Separate scalar-loop SSIM with its own window construction, for comparison.
double ssim_oracle(const Matrix& a, const Matrix& b, const RoiMask& roi, double dr) {
  const double c1 = (0.01 * dr) * (0.01 * dr);
  const double c2 = (0.03 * dr) * (0.03 * dr);
  double weights[11][11];
  double wsum = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      const double di = i - 5.0, dj = j - 5.0;
      weights[i][j] = std::exp(-(di * di + dj * dj) / 4.5);
      wsum += weights[i][j];
    }
  double total = 0.0;
  long count = 0;
  for (Index r = 5; r + 5 < a.rows(); ++r)
    for (Index c = 5; c + 5 < a.cols(); ++c) {
      if (!roi.mask(r, c)) continue;
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double wij = weights[i][j] / wsum;
          const double va = a(r + i - 5, c + j - 5);
          const double vb = b(r + i - 5, c + j - 5);
          ma += wij * va;
          mb += wij * vb;
          saa += wij * va * va;
          sbb += wij * vb * vb;
          sab += wij * va * vb;
        }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("circular roi geometry") {
  const RoiMask roi = circular_roi(128, 128);
  CHECK(roi.radius == doctest::Approx(0.48 * 128.0));
  CHECK(roi.mask(64, 64));
  CHECK_FALSE(roi.mask(0, 0));
  for (Index r = 0; r < 128; ++r)
    for (Index c = 0; c < 128; ++c) {
      const double dr = r - roi.center_row, dc = c - roi.center_col;
      CHECK(roi.mask(r, c) == (dr * dr + dc * dc <= roi.radius * roi.radius));
    }

  const RoiMask small = circular_roi(31, 64, 4.0);
  CHECK(small.radius == 4.0);
  CHECK(small.center_row == 15.0);
  CHECK(small.center_col == 31.5);
}

TEST_CASE("rmse basics and the independent loop") {
  const Matrix a = random_image(32, 32, 1);
  const RoiMask roi = circular_roi(32, 32);
  CHECK(rmse(a, a, roi) == 0.0);

  Matrix shifted = a;
  shifted.array() += 10.0;
  CHECK(rmse(a, shifted, roi) == doctest::Approx(10.0).epsilon(1e-14));

  const Matrix b = random_image(32, 32, 2);
  double acc = 0.0;
  long n = 0;
  for (Index r = 0; r < 32; ++r)
    for (Index c = 0; c < 32; ++c)
      if (roi.mask(r, c)) {
        acc += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
        ++n;
      }
  CHECK(rmse(a, b, roi) == doctest::Approx(std::sqrt(acc / n)).epsilon(1e-14));
  CHECK(rmse(a, b, roi) == rmse(b, a, roi));

  RoiMask empty = circular_roi(32, 32, 1.0);
  empty.mask.setConstant(false);
  CHECK_THROWS_AS(rmse(a, b, empty), std::invalid_argument);
  CHECK_THROWS_AS(rmse(a, random_image(16, 16, 3), roi), std::invalid_argument);
}

TEST_CASE("ssim identity, symmetry, and the independent oracle") {
  const Matrix a = random_image(24, 24, 5, 0.0, 100.0);
  const Matrix b = random_image(24, 24, 6, 0.0, 100.0);
  const RoiMask roi = circular_roi(24, 24);

  CHECK(ssim(a, a, roi, 100.0) == 1.0);
  CHECK(ssim(a, b, roi, 100.0) == ssim(b, a, roi, 100.0));
  CHECK(std::abs(ssim(a, b, roi, 100.0) - ssim_oracle(a, b, roi, 100.0)) <= 1e-12);
}

TEST_CASE("ssim of constant images matches the closed form") {
  const double va = 40.0, vb = 55.0, dr = 100.0;
  const Matrix a = Matrix::Constant(20, 20, va);
  const Matrix b = Matrix::Constant(20, 20, vb);
  const RoiMask roi = circular_roi(20, 20);
  const double c1 = (0.01 * dr) * (0.01 * dr);
  const double want = (2.0 * va * vb + c1) / (va * va + vb * vb + c1);
  CHECK(ssim(a, b, roi, dr) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("ssim is negative for anti-correlated zero-mean signals") {
  // Checkerboard windows have weighted means near zero (alternating sums of a
  // symmetric kernel nearly cancel), so negation leaves the mean term close to
  // +1 while the covariance term sits near -1.
  Matrix a(24, 24);
  for (Index r = 0; r < 24; ++r)
    for (Index c = 0; c < 24; ++c) a(r, c) = ((r + c) % 2 == 0) ? 1.0 : -1.0;
  const Matrix b = -a;
  const RoiMask roi = circular_roi(24, 24);
  const double v = ssim(a, b, roi, 1.0);
  CHECK(v < -0.9);
  CHECK(v >= -1.0);
  CHECK(std::abs(v - ssim_oracle(a, b, roi, 1.0)) <= 1e-12);
}

TEST_CASE("ssim rejects degenerate inputs") {
  const Matrix a = random_image(16, 16, 8);
  const RoiMask roi = circular_roi(16, 16);
  CHECK_THROWS_AS(ssim(a, a, roi, 0.0), std::invalid_argument);

  // mask present but no full 11x11 window fits around any masked center
  RoiMask corner = circular_roi(16, 16, 2.0);
  corner.mask.setConstant(false);
  corner.mask(0, 0) = true;
  CHECK_THROWS_AS(ssim(a, a, corner, 1.0), std::invalid_argument);

  SsimOptions bad;
  bad.window = 10;
  CHECK_THROWS_AS(ssim(a, a, roi, 1.0, bad), std::invalid_argument);
}
