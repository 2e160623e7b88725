#pragma once

#include <mcst2/core.hpp>

#include <cstdint>
#include <vector>

namespace mcst2 {

// Modified Shepp-Logan head phantom rasterized onto rows x cols with
// area-antialiasing (supersample^2 subsamples per pixel). Values are the
// classic [0, 1] ellipse sums times `scale`.
Matrix shepp_logan(Index rows, Index cols, double scale = 1000.0, Index supersample = 4);

// Centered uniform disk of the given value; radius in pixels.
Matrix disk_phantom(Index rows, Index cols, double radius_pixels, double value,
                    Index supersample = 8);

// Random smooth anatomy-like slice: an elliptical body of roughly water value
// containing random elliptical inserts, clipped to be nonnegative.
Matrix random_ellipse_phantom(Index rows, Index cols, std::uint64_t seed,
                              Index num_inserts = 8, double body_value = 1000.0,
                              Index supersample = 4);

// Deterministic training set built from random_ellipse_phantom.
std::vector<Matrix> builtin_training_slices(Index count, Index size, std::uint64_t seed);

}  // namespace mcst2
