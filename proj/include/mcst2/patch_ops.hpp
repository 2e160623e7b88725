#pragma once

#include <mcst2/core.hpp>

namespace mcst2 {

enum class Boundary { wrap, trim };

// Grid of b x b patches taken from an image with a fixed stride.
// "wrap" tiles the image periodically so every stride offset yields a patch;
// "trim" keeps only patches that fit entirely inside the image.
struct PatchGeometry {
  Index image_height = 0;
  Index image_width = 0;
  Index patch_side = 8;
  Index stride = 1;
  Boundary boundary = Boundary::wrap;

  Index patch_dim() const { return patch_side * patch_side; }
  Index patches_down() const;
  Index patches_across() const;
  Index num_patches() const { return patches_down() * patches_across(); }

  // Top-left corner of patch i (row, col), before any wrapping.
  Index corner_row(Index i) const { return stride * (i / patches_across()); }
  Index corner_col(Index i) const { return stride * (i % patches_across()); }

  void validate() const;  // throws std::invalid_argument
};

// Column i holds patch i, vectorized row-major within the patch
// (entry dr * patch_side + dc is image pixel (corner_row+dr, corner_col+dc)).
struct PatchMatrix {
  Matrix data;
  PatchGeometry geometry;
};

PatchMatrix extract_patches(const Matrix& image, const PatchGeometry& geometry);

// Transpose of extraction: scatters patch columns back into an image.
// sum(r,c) accumulates every patch entry that reads pixel (r,c);
// count(r,c) is how many patches cover pixel (r,c).
struct AggregateResult {
  Matrix sum;
  Matrix count;
};

AggregateResult aggregate_patches(const Matrix& patches, const PatchGeometry& geometry);

}  // namespace mcst2
