#pragma once

#include <mcst2/core.hpp>
#include <mcst2/patch_ops.hpp>

#include <cstdint>
#include <vector>

namespace mcst2 {

// Two banks of square orthonormal analysis transforms. layer1[k] sparsifies
// patch columns directly; layer2[l] sparsifies the first layer's residual.
struct Mcst2Model {
  std::vector<Matrix> layer1;
  std::vector<Matrix> layer2;
  Index patch_dim = 0;

  Index num_clusters1() const { return static_cast<Index>(layer1.size()); }
  Index num_clusters2() const { return static_cast<Index>(layer2.size()); }

  // Largest ||W W^T - I||_F over both banks.
  double max_orthonormality_defect() const;

  // Shape and orthonormality (defect <= 1e-10); throws std::invalid_argument.
  void validate() const;
};

// Per-column coding variables. Column i of r2 is the second-layer input
// residual layer1[labels1[i]] * patch_i - z1_i. Labels are 0-based indices
// into the transform banks.
struct CodingState {
  Matrix z1;
  Matrix z2;
  Matrix r2;
  std::vector<Index> labels1;
  std::vector<Index> labels2;
};

struct TrainConfig {
  double eta1 = 125.0;
  double eta2 = 70.0;
  Index num_clusters1 = 5;
  Index num_clusters2 = 2;
  Index iterations = 1000;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Keeps entries with |v| >= eta, zeroes the rest (the boundary is kept).
double hard_threshold(double v, double eta);
Vector hard_threshold(const Vector& v, double eta);
void hard_threshold_in_place(Matrix& m, double eta);

Index count_nonzero(const Eigen::Ref<const Vector>& v);

// Orthonormal 2D DCT on side x side patches vectorized row-major.
Matrix dct_transform(Index patch_side);

// Sum over columns of first-layer residual energy + eta1^2 * nnz(z1) plus
// second-layer residual energy + eta2^2 * nnz(z2). Rejects states whose r2
// disagrees with the stored labels/codes.
double objective_p0(const Matrix& patches, const Mcst2Model& model, const CodingState& state,
                    const TrainConfig& cfg);

// For each column: picks the first-layer cluster and code minimizing
//   |a - z|^2 + eta1^2 |z|_0 + |W2 (a - z) - z2|^2,   a = layer1[k] * patch,
// with the column's second-layer membership and z2 held fixed; the minimizing
// code is the hard threshold at eta1/sqrt(2) of a - 0.5 * W2^T z2. Ties go to
// the lowest cluster index. Refreshes r2.
CodingState update_layer1_codes_clusters(const Matrix& patches, const Mcst2Model& model,
                                         CodingState state, const TrainConfig& cfg);

// Per nonempty cluster k, sets layer1[k] = V U^T from the full SVD U S V^T of
//   sum over its columns of patch_i * (z1_i + 0.5 * W2^T z2_i)^T.
// Empty clusters and exactly-zero products keep the previous transform.
// Refreshes state.r2 against the new transforms.
Mcst2Model update_layer1_transforms(const Matrix& patches, Mcst2Model model, CodingState& state);

// Recomputes r2 = layer1[labels1] * patch - z1 column by column. Needed when
// the underlying patches change while the codes stay fixed.
void refresh_residual(const Matrix& patches, const Mcst2Model& model, CodingState& state);

// For each column: picks the second-layer cluster minimizing
//   |b - z|^2 + eta2^2 |z|_0,   b = layer2[l] * r2_col,  z = hard_threshold(b, eta2),
// ties to the lowest index, and stores the minimizing code.
CodingState update_layer2_codes_clusters(CodingState state, const Mcst2Model& model,
                                         const TrainConfig& cfg);

// Per nonempty cluster l, sets layer2[l] = V U^T from the full SVD of
// r2_cols * z2_cols^T; empty clusters and zero products keep the previous
// transform.
Mcst2Model update_layer2_transforms(const CodingState& state, Mcst2Model model);

// Both banks initialized to the 2D DCT.
Mcst2Model make_initial_model(Index patch_side, const TrainConfig& cfg);

// Labels start at column mod cluster-count, codes at zero, then one
// code/cluster pass per layer fixes up codes, labels, and r2.
CodingState make_initial_state(const Matrix& patches, const Mcst2Model& model,
                               const TrainConfig& cfg);

struct TrainResult {
  Mcst2Model model;
  CodingState state;
  // objective_trace[0] is the post-initialization objective; one more entry
  // per completed iteration.
  std::vector<double> objective_trace;
};

// Exact block coordinate descent: layer-1 codes/clusters, layer-1 transforms,
// layer-2 codes/clusters, layer-2 transforms, repeated cfg.iterations times.
// The objective trace is non-increasing.
TrainResult train_mcst2(const Matrix& patches, const TrainConfig& cfg);

}  // namespace mcst2
