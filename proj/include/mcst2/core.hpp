#pragma once

#include <Eigen/Dense>

namespace mcst2 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Fixed work-partitioning constants. Parallel loops split their domain into
// blocks derived from these (never from the runtime thread count), and any
// reduction merges block results in block order, so results are bit-identical
// for every thread count.
inline constexpr Index kColumnChunk = 1024;   // patch-column block size
inline constexpr Index kScatterChunks = 32;   // accumulator images for scatter kernels

inline Index num_chunks(Index n, Index chunk) { return (n + chunk - 1) / chunk; }

// Water attenuation at ~70 keV, used to relate water-normalized HU images
// (air 0, water 1000) to line-integral attenuation.
inline constexpr double kWaterAttenuationPerMm = 0.0192;

// unit_scale for CtGeometry when images are in water-normalized HU.
inline constexpr double kHuUnitScale = kWaterAttenuationPerMm / 1000.0;

}  // namespace mcst2
