#include <mcst2/pwls_recon.hpp>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mcst2 {

namespace {

TrainConfig gamma_config(const Mcst2Model& model, const ReconConfig& cfg) {
  TrainConfig t;
  t.eta1 = cfg.gamma1;
  t.eta2 = cfg.gamma2;
  t.num_clusters1 = model.num_clusters1();
  t.num_clusters2 = model.num_clusters2();
  t.iterations = 1;
  return t;
}

void check_problem(const CtProblem& problem) {
  problem.geometry.validate();
  if (problem.sinogram.size() != problem.geometry.num_rays() ||
      problem.weights.size() != problem.geometry.num_rays())
    throw std::invalid_argument("recon: sinogram or weights disagree with geometry");
  if (!(problem.weights.array() >= 0.0).all())
    throw std::invalid_argument("recon: weights must be nonnegative");
}

void check_grid(const CtProblem& problem, const PatchGeometry& geom) {
  geom.validate();
  if (geom.image_height != problem.geometry.image_rows ||
      geom.image_width != problem.geometry.image_cols)
    throw std::invalid_argument("recon: patch grid disagrees with scan geometry");
}

void check_image(const Matrix& image, const CtProblem& problem) {
  if (image.rows() != problem.geometry.image_rows ||
      image.cols() != problem.geometry.image_cols)
    throw std::invalid_argument("recon: image shape disagrees with geometry");
}

double data_term(const Matrix& image, const CtProblem& problem) {
  const Vector resid = forward_project(image, problem.geometry) - problem.sinogram;
  double acc = 0.0;
  for (Index r = 0; r < resid.size(); ++r) acc += problem.weights(r) * resid(r) * resid(r);
  return 0.5 * acc;
}

Matrix data_gradient(const Matrix& image, const CtProblem& problem) {
  Vector resid = forward_project(image, problem.geometry) - problem.sinogram;
  resid.array() *= problem.weights.array();
  return back_project(resid, problem.geometry);
}

// Per-patch gradient of the two residual energies with codes fixed:
//   d/dp [ |W1 p - z1|^2 + |W2 (W1 p - z1) - z2|^2 ] = 2 W1^T (2 r2 - W2^T z2)
// using orthonormality of W2, with r2 = W1 p - z1 at the current image.
Matrix coding_gradient_raster(const Matrix& patches, const CodingState& coding,
                              const Mcst2Model& model, const PatchGeometry& geom) {
  const Index p = model.patch_dim;
  const Index n = patches.cols();
  Matrix grad(p, n);
  const Index chunks = num_chunks(n, kColumnChunk);

#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < chunks; ++ch) {
    const Index lo = ch * kColumnChunk;
    const Index hi = std::min(n, lo + kColumnChunk);
    Vector r2(p), t(p);
    for (Index i = lo; i < hi; ++i) {
      const Matrix& w1 = model.layer1[static_cast<size_t>(coding.labels1[i])];
      const Matrix& w2 = model.layer2[static_cast<size_t>(coding.labels2[i])];
      r2.noalias() = w1 * patches.col(i);
      r2 -= coding.z1.col(i);
      t.noalias() = w2.transpose() * coding.z2.col(i);
      t = 2.0 * r2 - t;
      grad.col(i).noalias() = 2.0 * (w1.transpose() * t);
    }
  }
  return aggregate_patches(grad, geom).sum;
}

// One projected step on the separable quadratic surrogate. Pixels the
// majorizer does not touch (zero diagonal) keep their value.
void surrogate_step(Matrix& image, const Matrix& grad, const Matrix& diag) {
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const double d = diag(r, c);
      if (d <= 0.0) continue;
      image(r, c) = std::max(0.0, image(r, c) - grad(r, c) / d);
    }
}

Matrix initial_image(const CtProblem& problem, ReconInit init, const Matrix* provided) {
  if (init == ReconInit::provided) {
    if (provided == nullptr)
      throw std::invalid_argument("recon: provided initialization needs an image");
    check_image(*provided, problem);
    return provided->cwiseMax(0.0);
  }
  if (init == ReconInit::zeros)
    return Matrix::Zero(problem.geometry.image_rows, problem.geometry.image_cols);
  return fbp_reconstruct(problem).cwiseMax(0.0);
}

}  // namespace

void ReconConfig::validate() const {
  if (beta < 0.0 || gamma1 < 0.0 || gamma2 < 0.0)
    throw std::invalid_argument("recon config: beta and gammas must be nonnegative");
  if (outer_iterations < 1)
    throw std::invalid_argument("recon config: outer_iterations must be at least 1");
  if (inner_iterations < 0)
    throw std::invalid_argument("recon config: inner_iterations must be nonnegative");
  if (ep_delta <= 0.0) throw std::invalid_argument("recon config: ep_delta must be positive");
}

double objective_p1(const ReconState& state, const CtProblem& problem, const Mcst2Model& model,
                    const PatchGeometry& geom, const ReconConfig& cfg) {
  check_problem(problem);
  check_grid(problem, geom);
  check_image(state.image, problem);
  const PatchMatrix patches = extract_patches(state.image, geom);
  return data_term(state.image, problem) +
         cfg.beta * objective_p0(patches.data, model, state.coding, gamma_config(model, cfg));
}

Matrix smooth_objective_gradient(const Matrix& image, const CodingState& coding,
                                 const CtProblem& problem, const Mcst2Model& model,
                                 const PatchGeometry& geom, const ReconConfig& cfg) {
  check_problem(problem);
  check_grid(problem, geom);
  check_image(image, problem);
  const PatchMatrix patches = extract_patches(image, geom);
  Matrix grad = data_gradient(image, problem);
  grad += cfg.beta * coding_gradient_raster(patches.data, coding, model, geom);
  return grad;
}

Matrix pwls_majorizer_diag(const CtProblem& problem, const PatchGeometry& geom, double beta) {
  check_problem(problem);
  check_grid(problem, geom);
  const CtGeometry& g = problem.geometry;
  const Vector row_sums = forward_project(Matrix::Ones(g.image_rows, g.image_cols), g);
  Matrix diag = back_project(row_sums.cwiseProduct(problem.weights), g);
  const PatchMatrix ones = extract_patches(Matrix::Ones(g.image_rows, g.image_cols), geom);
  diag += 4.0 * beta * aggregate_patches(ones.data, geom).count;
  return diag;
}

ReconState image_update(ReconState state, const CtProblem& problem, const Mcst2Model& model,
                        const PatchGeometry& geom, const ReconConfig& cfg,
                        const Matrix* majorizer) {
  cfg.validate();
  if (cfg.inner_iterations == 0) return state;
  check_problem(problem);
  check_grid(problem, geom);
  check_image(state.image, problem);

  Matrix diag;
  if (majorizer == nullptr) diag = pwls_majorizer_diag(problem, geom, cfg.beta);
  const Matrix& d = majorizer ? *majorizer : diag;

  for (Index pass = 0; pass < cfg.inner_iterations; ++pass) {
    const Matrix grad = smooth_objective_gradient(state.image, state.coding, problem, model,
                                                  geom, cfg);
    surrogate_step(state.image, grad, d);
  }

  const PatchMatrix patches = extract_patches(state.image, geom);
  refresh_residual(patches.data, model, state.coding);
  state.objective_trace.push_back(objective_p1(state, problem, model, geom, cfg));
  return state;
}

ReconState sparse_code_and_cluster(ReconState state, const CtProblem& problem,
                                   const Mcst2Model& model, const PatchGeometry& geom,
                                   const ReconConfig& cfg) {
  cfg.validate();
  check_problem(problem);
  check_grid(problem, geom);
  check_image(state.image, problem);
  const PatchMatrix patches = extract_patches(state.image, geom);
  const TrainConfig gcfg = gamma_config(model, cfg);
  state.coding = update_layer1_codes_clusters(patches.data, model, std::move(state.coding), gcfg);
  state.coding = update_layer2_codes_clusters(std::move(state.coding), model, gcfg);
  state.objective_trace.push_back(objective_p1(state, problem, model, geom, cfg));
  return state;
}

ReconState reconstruct_pwls_mcst2(const CtProblem& problem, const Mcst2Model& model,
                                  const PatchGeometry& geom, const ReconConfig& cfg,
                                  const Matrix* initial) {
  cfg.validate();
  check_problem(problem);
  check_grid(problem, geom);
  model.validate();

  ReconState state;
  state.image = initial_image(problem, cfg.init, initial);
  const PatchMatrix patches = extract_patches(state.image, geom);
  state.coding = make_initial_state(patches.data, model, gamma_config(model, cfg));
  state.objective_trace.push_back(objective_p1(state, problem, model, geom, cfg));

  const Matrix diag = pwls_majorizer_diag(problem, geom, cfg.beta);
  for (Index it = 0; it < cfg.outer_iterations; ++it) {
    state = image_update(std::move(state), problem, model, geom, cfg, &diag);
    state = sparse_code_and_cluster(std::move(state), problem, model, geom, cfg);
  }
  return state;
}

namespace {

double hyperbola(double d, double delta) {
  const double s = d / delta;
  return delta * delta * (std::sqrt(1.0 + s * s) - 1.0);
}

double hyperbola_slope(double d, double delta) {
  const double s = d / delta;
  return d / std::sqrt(1.0 + s * s);
}

// The four in-bounds offsets generating every 8-neighbor pair exactly once.
struct PairOffset {
  Index row0, col0, row1, col1, height_cut, width_cut;
};
constexpr PairOffset kPairs[] = {
    {0, 0, 0, 1, 0, 1},  // east
    {0, 0, 1, 0, 1, 0},  // south
    {0, 0, 1, 1, 1, 1},  // southeast
    {0, 1, 1, 0, 1, 1},  // southwest
};

}  // namespace

double objective_ep(const Matrix& image, const CtProblem& problem, const ReconConfig& cfg) {
  cfg.validate();
  check_problem(problem);
  check_image(image, problem);
  double reg = 0.0;
  for (const PairOffset& o : kPairs) {
    const Index h = image.rows() - o.height_cut;
    const Index w = image.cols() - o.width_cut;
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c)
        reg += hyperbola(image(r + o.row0, c + o.col0) - image(r + o.row1, c + o.col1),
                         cfg.ep_delta);
  }
  return data_term(image, problem) + cfg.beta * reg;
}

EpResult reconstruct_pwls_ep(const CtProblem& problem, const ReconConfig& cfg,
                             const Matrix* initial) {
  cfg.validate();
  check_problem(problem);
  const Index rows = problem.geometry.image_rows, cols = problem.geometry.image_cols;

  // Majorizer: data row sums plus 2 beta times the pair degree of each pixel
  // (the hyperbola curvature is at most 1).
  const Vector row_sums = forward_project(Matrix::Ones(rows, cols), problem.geometry);
  Matrix diag = back_project(row_sums.cwiseProduct(problem.weights), problem.geometry);
  Matrix degree = Matrix::Zero(rows, cols);
  for (const PairOffset& o : kPairs) {
    const Index h = rows - o.height_cut;
    const Index w = cols - o.width_cut;
    degree.block(o.row0, o.col0, h, w).array() += 1.0;
    degree.block(o.row1, o.col1, h, w).array() += 1.0;
  }
  diag += 2.0 * cfg.beta * degree;

  EpResult result;
  result.image = initial_image(problem, cfg.init, initial);
  result.objective_trace.push_back(objective_ep(result.image, problem, cfg));

  Matrix grad(rows, cols);
  for (Index it = 0; it < cfg.outer_iterations; ++it) {
    for (Index pass = 0; pass < cfg.inner_iterations; ++pass) {
      grad = data_gradient(result.image, problem);
      for (const PairOffset& o : kPairs) {
        const Index h = rows - o.height_cut;
        const Index w = cols - o.width_cut;
        for (Index r = 0; r < h; ++r)
          for (Index c = 0; c < w; ++c) {
            const double slope = cfg.beta * hyperbola_slope(result.image(r + o.row0, c + o.col0) -
                                                                result.image(r + o.row1, c + o.col1),
                                                            cfg.ep_delta);
            grad(r + o.row0, c + o.col0) += slope;
            grad(r + o.row1, c + o.col1) -= slope;
          }
      }
      surrogate_step(result.image, grad, diag);
    }
    result.objective_trace.push_back(objective_ep(result.image, problem, cfg));
  }
  return result;
}

}  // namespace mcst2
