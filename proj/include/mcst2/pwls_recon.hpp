#pragma once

#include <mcst2/ct_system.hpp>
#include <mcst2/mcst2.hpp>
#include <mcst2/patch_ops.hpp>

#include <vector>

namespace mcst2 {

enum class ReconInit { fbp, zeros, provided };

struct ReconConfig {
  double beta = 1.5e5;
  double gamma1 = 20.0;
  double gamma2 = 5.0;
  Index outer_iterations = 100;
  // Majorize-minimize passes inside each image update.
  Index inner_iterations = 5;
  ReconInit init = ReconInit::fbp;
  // Knee of the edge-preserving hyperbola penalty, in image units.
  double ep_delta = 10.0;

  void validate() const;  // throws std::invalid_argument
};

// Image iterate plus the patch coding variables tied to it. coding.r2 always
// refers to patches of the stored image.
struct ReconState {
  Matrix image;
  CodingState coding;
  std::vector<double> objective_trace;
};

// 1/2 ||y - A x||^2_W plus beta times the two-layer coding objective (residual
// energies plus gamma^2-weighted code counts) at the stored coding variables.
// Rejects states whose r2 disagrees with the image and codes.
double objective_p1(const ReconState& state, const CtProblem& problem, const Mcst2Model& model,
                    const PatchGeometry& geom, const ReconConfig& cfg);

// Gradient of the smooth part (data term plus beta times both residual
// energies) with respect to the image, at fixed codes and labels.
Matrix smooth_objective_gradient(const Matrix& image, const CodingState& coding,
                                 const CtProblem& problem, const Mcst2Model& model,
                                 const PatchGeometry& geom, const ReconConfig& cfg);

// Separable majorizer diagonal for the image update: A^T W A 1 row sums plus
// 4 beta times the per-pixel patch coverage count.
Matrix pwls_majorizer_diag(const CtProblem& problem, const PatchGeometry& geom, double beta);

// cfg.inner_iterations projected diagonal-surrogate descent steps on the
// image with codes fixed, then r2 refresh and one objective append. The
// objective never increases. inner_iterations = 0 returns the input verbatim.
// majorizer, when given, must equal pwls_majorizer_diag(problem, geom, beta).
ReconState image_update(ReconState state, const CtProblem& problem, const Mcst2Model& model,
                        const PatchGeometry& geom, const ReconConfig& cfg,
                        const Matrix* majorizer = nullptr);

// Re-extracts patches of the image and runs both exact code/cluster updates
// with thresholds gamma1/sqrt(2) and gamma2; appends the objective.
ReconState sparse_code_and_cluster(ReconState state, const CtProblem& problem,
                                   const Mcst2Model& model, const PatchGeometry& geom,
                                   const ReconConfig& cfg);

// Block coordinate descent on the penalized weighted least squares problem:
// initializes the image (FBP clipped to >= 0 by default), initializes codes
// with one exact coding pass, then alternates image_update and
// sparse_code_and_cluster cfg.outer_iterations times. The trace starts at the
// post-initialization objective and is non-increasing.
ReconState reconstruct_pwls_mcst2(const CtProblem& problem, const Mcst2Model& model,
                                  const PatchGeometry& geom, const ReconConfig& cfg,
                                  const Matrix* initial = nullptr);

struct EpResult {
  Matrix image;
  std::vector<double> objective_trace;
};

// 1/2 ||y - A x||^2_W + beta * sum over 8-neighbor pixel pairs of
// delta^2 (sqrt(1 + (d/delta)^2) - 1).
double objective_ep(const Matrix& image, const CtProblem& problem, const ReconConfig& cfg);

// Penalized weighted least squares with the edge-preserving hyperbola
// penalty, solved by the same projected majorize-minimize scheme
// (cfg.outer_iterations x cfg.inner_iterations passes). Monotone trace.
EpResult reconstruct_pwls_ep(const CtProblem& problem, const ReconConfig& cfg,
                             const Matrix* initial = nullptr);

}  // namespace mcst2
