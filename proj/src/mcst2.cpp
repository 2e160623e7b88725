#include <mcst2/mcst2.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcst2 {

namespace {

void check_bank(const std::vector<Matrix>& bank, Index p, const char* name) {
  if (bank.empty()) throw std::invalid_argument(std::string(name) + ": needs at least one transform");
  for (const Matrix& w : bank)
    if (w.rows() != p || w.cols() != p)
      throw std::invalid_argument(std::string(name) + ": transform shape disagrees with patch_dim");
}

void check_state(const Matrix& patches, const Mcst2Model& model, const CodingState& state) {
  const Index p = model.patch_dim;
  const Index n = patches.cols();
  if (patches.rows() != p) throw std::invalid_argument("coding: patch rows disagree with patch_dim");
  if (state.z1.rows() != p || state.z1.cols() != n || state.z2.rows() != p ||
      state.z2.cols() != n || state.r2.rows() != p || state.r2.cols() != n)
    throw std::invalid_argument("coding: state matrices disagree with patches");
  if (static_cast<Index>(state.labels1.size()) != n ||
      static_cast<Index>(state.labels2.size()) != n)
    throw std::invalid_argument("coding: label count disagrees with patches");
  for (Index i = 0; i < n; ++i) {
    if (state.labels1[i] < 0 || state.labels1[i] >= model.num_clusters1() ||
        state.labels2[i] < 0 || state.labels2[i] >= model.num_clusters2())
      throw std::invalid_argument("coding: label out of range at column " + std::to_string(i));
  }
}

// Candidate code z for a target m: threshold at thr, counting survivors.
Index threshold_into(const Eigen::Ref<const Vector>& m, double thr, Vector& z) {
  Index nnz = 0;
  for (Index t = 0; t < m.size(); ++t) {
    const double v = m(t);
    if (std::abs(v) >= thr) {
      z(t) = v;
      if (v != 0.0) ++nnz;
    } else {
      z(t) = 0.0;
    }
  }
  return nnz;
}

Matrix closest_orthonormal(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().transpose();
}

}  // namespace

double Mcst2Model::max_orthonormality_defect() const {
  double worst = 0.0;
  const Matrix eye = Matrix::Identity(patch_dim, patch_dim);
  for (const std::vector<Matrix>* bank : {&layer1, &layer2})
    for (const Matrix& w : *bank)
      worst = std::max(worst, (w * w.transpose() - eye).norm());
  return worst;
}

void Mcst2Model::validate() const {
  if (patch_dim <= 0) throw std::invalid_argument("model: patch_dim must be positive");
  check_bank(layer1, patch_dim, "model layer1");
  check_bank(layer2, patch_dim, "model layer2");
  const double defect = max_orthonormality_defect();
  if (defect > 1e-10)
    throw std::invalid_argument("model: transform orthonormality defect " +
                                std::to_string(defect) + " exceeds 1e-10");
}

void TrainConfig::validate() const {
  if (eta1 < 0.0 || eta2 < 0.0)
    throw std::invalid_argument("train config: sparsity parameters must be nonnegative");
  if (num_clusters1 < 1 || num_clusters2 < 1)
    throw std::invalid_argument("train config: cluster counts must be at least 1");
  if (iterations < 1) throw std::invalid_argument("train config: iterations must be at least 1");
}

double hard_threshold(double v, double eta) { return std::abs(v) >= eta ? v : 0.0; }

Vector hard_threshold(const Vector& v, double eta) {
  Vector out(v.size());
  for (Index t = 0; t < v.size(); ++t) out(t) = hard_threshold(v(t), eta);
  return out;
}

void hard_threshold_in_place(Matrix& m, double eta) {
  double* d = m.data();
  const Index size = m.size();
  for (Index t = 0; t < size; ++t)
    if (std::abs(d[t]) < eta) d[t] = 0.0;
}

Index count_nonzero(const Eigen::Ref<const Vector>& v) {
  Index nnz = 0;
  for (Index t = 0; t < v.size(); ++t)
    if (v(t) != 0.0) ++nnz;
  return nnz;
}

Matrix dct_transform(Index patch_side) {
  if (patch_side <= 0) throw std::invalid_argument("dct_transform: patch_side must be positive");
  const Index b = patch_side;
  Matrix d(b, b);
  for (Index k = 0; k < b; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(b));
    for (Index m = 0; m < b; ++m)
      d(k, m) = scale * std::cos(std::numbers::pi * (2.0 * m + 1.0) * k / (2.0 * b));
  }
  // Row-major patch vectorization turns the separable 2D transform D P D^T
  // into the Kronecker product acting on vectorized patches.
  Matrix w(b * b, b * b);
  for (Index i1 = 0; i1 < b; ++i1)
    for (Index i2 = 0; i2 < b; ++i2)
      for (Index j1 = 0; j1 < b; ++j1)
        for (Index j2 = 0; j2 < b; ++j2) w(i1 * b + i2, j1 * b + j2) = d(i1, j1) * d(i2, j2);
  return w;
}

double objective_p0(const Matrix& patches, const Mcst2Model& model, const CodingState& state,
                    const TrainConfig& cfg) {
  check_state(patches, model, state);
  const Index n = patches.cols();
  const double eta1sq = cfg.eta1 * cfg.eta1;
  const double eta2sq = cfg.eta2 * cfg.eta2;

  const Index chunks = num_chunks(n, kColumnChunk);
  std::vector<double> partial(static_cast<size_t>(std::max<Index>(chunks, 1)), 0.0);
  std::vector<unsigned char> consistent(partial.size(), 1);

#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    double acc = 0.0;
    Vector t(model.patch_dim);
    for (Index i = lo; i < hi; ++i) {
      t.noalias() = model.layer1[static_cast<size_t>(state.labels1[i])] * patches.col(i);
      t -= state.z1.col(i);
      const double scale = 1.0 + state.r2.col(i).lpNorm<Eigen::Infinity>();
      if ((t - state.r2.col(i)).lpNorm<Eigen::Infinity>() > 1e-9 * scale)
        consistent[static_cast<size_t>(ch)] = 0;
      acc += state.r2.col(i).squaredNorm() + eta1sq * static_cast<double>(count_nonzero(state.z1.col(i)));
      t.noalias() = model.layer2[static_cast<size_t>(state.labels2[i])] * state.r2.col(i);
      t -= state.z2.col(i);
      acc += t.squaredNorm() + eta2sq * static_cast<double>(count_nonzero(state.z2.col(i)));
    }
    partial[static_cast<size_t>(ch)] = acc;
  }

  double total = 0.0;
  for (Index ch = 0; ch < chunks; ++ch) {
    if (!consistent[static_cast<size_t>(ch)])
      throw std::invalid_argument("objective: r2 disagrees with transforms, labels, and codes");
    total += partial[static_cast<size_t>(ch)];
  }
  return total;
}

CodingState update_layer1_codes_clusters(const Matrix& patches, const Mcst2Model& model,
                                         CodingState state, const TrainConfig& cfg) {
  check_state(patches, model, state);
  const Index p = model.patch_dim;
  const Index n = patches.cols();
  const Index num_k = model.num_clusters1();
  const double thr = cfg.eta1 / std::numbers::sqrt2;
  const double eta1sq = cfg.eta1 * cfg.eta1;

  const Index chunks = num_chunks(n, kColumnChunk);

#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    const Index w = hi - lo;

    Matrix corr(p, w);
    for (Index i = lo; i < hi; ++i)
      corr.col(i - lo).noalias() =
          model.layer2[static_cast<size_t>(state.labels2[i])].transpose() * state.z2.col(i);

    std::vector<Matrix> cand(static_cast<size_t>(num_k));
    for (Index k = 0; k < num_k; ++k)
      cand[static_cast<size_t>(k)].noalias() =
          model.layer1[static_cast<size_t>(k)] * patches.middleCols(lo, w);

    Vector m(p), z(p), resid(p), best_z(p), best_a(p);
    for (Index i = lo; i < hi; ++i) {
      const Index col = i - lo;
      const double z2_norm2 = state.z2.col(i).squaredNorm();
      double best_cost = std::numeric_limits<double>::infinity();
      Index best_k = 0;
      for (Index k = 0; k < num_k; ++k) {
        const auto a = cand[static_cast<size_t>(k)].col(col);
        m.noalias() = a - 0.5 * corr.col(col);
        const Index nnz = threshold_into(m, thr, z);
        resid = a - z;
        // Third term of the cluster cost, expanded through the orthonormal
        // second-layer transform: |W2 resid - z2|^2 = |resid|^2
        // - 2 <resid, W2^T z2> + |z2|^2.
        const double r2norm = resid.squaredNorm();
        const double cost = r2norm + eta1sq * static_cast<double>(nnz) + r2norm -
                            2.0 * resid.dot(corr.col(col)) + z2_norm2;
        if (cost < best_cost) {
          best_cost = cost;
          best_k = k;
          best_z = z;
          best_a = a;
        }
      }
      state.labels1[i] = best_k;
      state.z1.col(i) = best_z;
      state.r2.col(i) = best_a - best_z;
    }
  }
  return state;
}

Mcst2Model update_layer1_transforms(const Matrix& patches, Mcst2Model model, CodingState& state) {
  check_state(patches, model, state);
  const Index p = model.patch_dim;
  const Index n = patches.cols();
  const Index num_k = model.num_clusters1();
  const Index chunks = num_chunks(n, kColumnChunk);

  // Per-column targets z1 + 0.5 * W2^T z2; the transform for cluster k is the
  // orthonormal matrix closest (in trace inner product) to the cluster's
  // patch-by-target cross matrix.
  Matrix target(p, n);
#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    for (Index i = lo; i < hi; ++i) {
      target.col(i).noalias() =
          model.layer2[static_cast<size_t>(state.labels2[i])].transpose() * state.z2.col(i);
      target.col(i) = state.z1.col(i) + 0.5 * target.col(i);
    }
  }

  std::vector<std::vector<Index>> members(static_cast<size_t>(num_k));
  for (Index i = 0; i < n; ++i) members[static_cast<size_t>(state.labels1[i])].push_back(i);

#pragma omp parallel for schedule(dynamic)
  for (Index k = 0; k < num_k; ++k) {
    const std::vector<Index>& cols = members[static_cast<size_t>(k)];
    if (cols.empty()) continue;
    const Index nk = static_cast<Index>(cols.size());
    Matrix rsel(p, nk), tsel(p, nk);
    for (Index j = 0; j < nk; ++j) {
      rsel.col(j) = patches.col(cols[static_cast<size_t>(j)]);
      tsel.col(j) = target.col(cols[static_cast<size_t>(j)]);
    }
    Matrix g = rsel * tsel.transpose();
    if (g.isZero(0.0)) continue;
    model.layer1[static_cast<size_t>(k)] = closest_orthonormal(g);
  }

  refresh_residual(patches, model, state);
  return model;
}

void refresh_residual(const Matrix& patches, const Mcst2Model& model, CodingState& state) {
  check_state(patches, model, state);
  const Index n = patches.cols();
  const Index chunks = num_chunks(n, kColumnChunk);
#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    for (Index i = lo; i < hi; ++i) {
      state.r2.col(i).noalias() =
          model.layer1[static_cast<size_t>(state.labels1[i])] * patches.col(i);
      state.r2.col(i) -= state.z1.col(i);
    }
  }
}

CodingState update_layer2_codes_clusters(CodingState state, const Mcst2Model& model,
                                         const TrainConfig& cfg) {
  const Index p = model.patch_dim;
  const Index n = state.r2.cols();
  if (state.r2.rows() != p) throw std::invalid_argument("coding: r2 rows disagree with patch_dim");
  if (state.z2.rows() != p || state.z2.cols() != n ||
      static_cast<Index>(state.labels2.size()) != n)
    throw std::invalid_argument("coding: state matrices disagree with r2");
  const Index num_l = model.num_clusters2();
  const double eta2sq = cfg.eta2 * cfg.eta2;
  const Index chunks = num_chunks(n, kColumnChunk);

#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    const Index w = hi - lo;

    std::vector<Matrix> cand(static_cast<size_t>(num_l));
    for (Index l = 0; l < num_l; ++l)
      cand[static_cast<size_t>(l)].noalias() =
          model.layer2[static_cast<size_t>(l)] * state.r2.middleCols(lo, w);

    Vector z(p), best_z(p);
    for (Index j = lo; j < hi; ++j) {
      const Index col = j - lo;
      double best_cost = std::numeric_limits<double>::infinity();
      Index best_l = 0;
      for (Index l = 0; l < num_l; ++l) {
        const auto b = cand[static_cast<size_t>(l)].col(col);
        const Index nnz = threshold_into(b, cfg.eta2, z);
        const double cost = (b - z).squaredNorm() + eta2sq * static_cast<double>(nnz);
        if (cost < best_cost) {
          best_cost = cost;
          best_l = l;
          best_z = z;
        }
      }
      state.labels2[j] = best_l;
      state.z2.col(j) = best_z;
    }
  }
  return state;
}

Mcst2Model update_layer2_transforms(const CodingState& state, Mcst2Model model) {
  const Index p = model.patch_dim;
  const Index n = state.r2.cols();
  if (state.r2.rows() != p || state.z2.rows() != p || state.z2.cols() != n ||
      static_cast<Index>(state.labels2.size()) != n)
    throw std::invalid_argument("coding: state matrices disagree with patch_dim");
  const Index num_l = model.num_clusters2();

  std::vector<std::vector<Index>> members(static_cast<size_t>(num_l));
  for (Index j = 0; j < n; ++j) members[static_cast<size_t>(state.labels2[j])].push_back(j);

#pragma omp parallel for schedule(dynamic)
  for (Index l = 0; l < num_l; ++l) {
    const std::vector<Index>& cols = members[static_cast<size_t>(l)];
    if (cols.empty()) continue;
    const Index nl = static_cast<Index>(cols.size());
    Matrix rsel(p, nl), zsel(p, nl);
    for (Index j = 0; j < nl; ++j) {
      rsel.col(j) = state.r2.col(cols[static_cast<size_t>(j)]);
      zsel.col(j) = state.z2.col(cols[static_cast<size_t>(j)]);
    }
    Matrix g = rsel * zsel.transpose();
    if (g.isZero(0.0)) continue;
    model.layer2[static_cast<size_t>(l)] = closest_orthonormal(g);
  }
  return model;
}

Mcst2Model make_initial_model(Index patch_side, const TrainConfig& cfg) {
  cfg.validate();
  Mcst2Model model;
  model.patch_dim = patch_side * patch_side;
  const Matrix dct = dct_transform(patch_side);
  model.layer1.assign(static_cast<size_t>(cfg.num_clusters1), dct);
  model.layer2.assign(static_cast<size_t>(cfg.num_clusters2), dct);
  return model;
}

CodingState make_initial_state(const Matrix& patches, const Mcst2Model& model,
                               const TrainConfig& cfg) {
  const Index p = model.patch_dim;
  const Index n = patches.cols();
  if (patches.rows() != p)
    throw std::invalid_argument("initial state: patch rows disagree with patch_dim");

  CodingState state;
  state.z1 = Matrix::Zero(p, n);
  state.z2 = Matrix::Zero(p, n);
  state.labels1.resize(static_cast<size_t>(n));
  state.labels2.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    state.labels1[static_cast<size_t>(i)] = i % model.num_clusters1();
    state.labels2[static_cast<size_t>(i)] = i % model.num_clusters2();
  }
  state.r2.resize(p, n);
  const Index chunks = num_chunks(n, kColumnChunk);
#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    for (Index i = lo; i < hi; ++i)
      state.r2.col(i).noalias() =
          model.layer1[static_cast<size_t>(state.labels1[i])] * patches.col(i);
  }

  state = update_layer1_codes_clusters(patches, model, std::move(state), cfg);
  state = update_layer2_codes_clusters(std::move(state), model, cfg);
  return state;
}

TrainResult train_mcst2(const Matrix& patches, const TrainConfig& cfg) {
  cfg.validate();
  const Index n = patches.cols();
  if (n < std::max(cfg.num_clusters1, cfg.num_clusters2))
    throw std::invalid_argument("train: need at least as many patches as clusters");
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(patches.rows()))));
  if (side * side != patches.rows())
    throw std::invalid_argument("train: patch dimension must be a perfect square");

  TrainResult result;
  result.model = make_initial_model(side, cfg);
  result.state = make_initial_state(patches, result.model, cfg);
  result.objective_trace.reserve(static_cast<size_t>(cfg.iterations) + 1);
  result.objective_trace.push_back(objective_p0(patches, result.model, result.state, cfg));

  for (Index it = 0; it < cfg.iterations; ++it) {
    result.state = update_layer1_codes_clusters(patches, result.model, std::move(result.state), cfg);
    result.model = update_layer1_transforms(patches, std::move(result.model), result.state);
    result.state = update_layer2_codes_clusters(std::move(result.state), result.model, cfg);
    result.model = update_layer2_transforms(result.state, std::move(result.model));
    result.objective_trace.push_back(objective_p0(patches, result.model, result.state, cfg));
  }
  return result;
}

}  // namespace mcst2
