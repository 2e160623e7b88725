#include <mcst2/patch_ops.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace mcst2 {

Index PatchGeometry::patches_down() const {
  if (boundary == Boundary::wrap) return (image_height + stride - 1) / stride;
  return (image_height - patch_side) / stride + 1;
}

Index PatchGeometry::patches_across() const {
  if (boundary == Boundary::wrap) return (image_width + stride - 1) / stride;
  return (image_width - patch_side) / stride + 1;
}

void PatchGeometry::validate() const {
  if (image_height <= 0 || image_width <= 0)
    throw std::invalid_argument("patch geometry: image dimensions must be positive");
  if (patch_side <= 0) throw std::invalid_argument("patch geometry: patch_side must be positive");
  if (stride <= 0) throw std::invalid_argument("patch geometry: stride must be positive");
  if (patch_side > image_height || patch_side > image_width)
    throw std::invalid_argument("patch geometry: patch_side " + std::to_string(patch_side) +
                                " exceeds image " + std::to_string(image_height) + "x" +
                                std::to_string(image_width));
}

PatchMatrix extract_patches(const Matrix& image, const PatchGeometry& geometry) {
  geometry.validate();
  if (image.rows() != geometry.image_height || image.cols() != geometry.image_width)
    throw std::invalid_argument("extract_patches: image shape disagrees with geometry");

  const Index b = geometry.patch_side;
  const Index n = geometry.num_patches();
  const Index h = geometry.image_height;
  const Index w = geometry.image_width;
  const bool wrap = geometry.boundary == Boundary::wrap;

  PatchMatrix out;
  out.geometry = geometry;
  out.data.resize(geometry.patch_dim(), n);
  Matrix& p = out.data;

#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const Index r0 = geometry.corner_row(i);
    const Index c0 = geometry.corner_col(i);
    for (Index dr = 0; dr < b; ++dr) {
      Index r = r0 + dr;
      if (wrap && r >= h) r -= h;
      for (Index dc = 0; dc < b; ++dc) {
        Index c = c0 + dc;
        if (wrap && c >= w) c -= w;
        p(dr * b + dc, i) = image(r, c);
      }
    }
  }
  return out;
}

AggregateResult aggregate_patches(const Matrix& patches, const PatchGeometry& geometry) {
  geometry.validate();
  const Index b = geometry.patch_side;
  const Index n = geometry.num_patches();
  if (patches.rows() != geometry.patch_dim() || patches.cols() != n)
    throw std::invalid_argument("aggregate_patches: patch matrix shape disagrees with geometry");

  const Index h = geometry.image_height;
  const Index w = geometry.image_width;
  const bool wrap = geometry.boundary == Boundary::wrap;

  // Each chunk scatters into its own pair of accumulators; the chunks are then
  // combined in index order so the output never depends on thread scheduling.
  const Index chunks = std::min<Index>(kScatterChunks, std::max<Index>(n, 1));
  const Index per = num_chunks(n, chunks);
  std::vector<Matrix> sums(static_cast<size_t>(chunks), Matrix::Zero(h, w));
  std::vector<Matrix> counts(static_cast<size_t>(chunks), Matrix::Zero(h, w));

#pragma omp parallel for schedule(static)
  for (Index chunk = 0; chunk < chunks; ++chunk) {
    Matrix& sum = sums[static_cast<size_t>(chunk)];
    Matrix& count = counts[static_cast<size_t>(chunk)];
    const Index lo = chunk * per;
    const Index hi = std::min(n, lo + per);
    for (Index i = lo; i < hi; ++i) {
      const Index r0 = geometry.corner_row(i);
      const Index c0 = geometry.corner_col(i);
      for (Index dr = 0; dr < b; ++dr) {
        Index r = r0 + dr;
        if (wrap && r >= h) r -= h;
        for (Index dc = 0; dc < b; ++dc) {
          Index c = c0 + dc;
          if (wrap && c >= w) c -= w;
          sum(r, c) += patches(dr * b + dc, i);
          count(r, c) += 1.0;
        }
      }
    }
  }

  AggregateResult out;
  out.sum = Matrix::Zero(h, w);
  out.count = Matrix::Zero(h, w);
  for (Index chunk = 0; chunk < chunks; ++chunk) {
    out.sum += sums[static_cast<size_t>(chunk)];
    out.count += counts[static_cast<size_t>(chunk)];
  }
  return out;
}

}  // namespace mcst2
