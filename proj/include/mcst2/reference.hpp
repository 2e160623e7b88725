#pragma once

#include <mcst2/ct_system.hpp>
#include <mcst2/mcst2.hpp>
#include <mcst2/patch_ops.hpp>

namespace mcst2::reference {

// Plain serial re-implementations of the parallel kernels, written
// independently against the same documented contracts: scalar loops instead
// of chunked OpenMP scatter, and a sorted crossing-parameter walk instead of
// the incremental grid traversal. They exist to pin the production kernels
// down in the parity tests and to give the kernel benchmark a baseline;
// nothing in the library calls them.

Matrix extract_patches(const Matrix& image, const PatchGeometry& geometry);
AggregateResult aggregate_patches(const Matrix& patches, const PatchGeometry& geometry);

Vector forward_project(const Matrix& image, const CtGeometry& geometry);
Matrix back_project(const Vector& sinogram, const CtGeometry& geometry);

CodingState update_layer1_codes_clusters(const Matrix& patches, const Mcst2Model& model,
                                         CodingState state, const TrainConfig& cfg);
CodingState update_layer2_codes_clusters(CodingState state, const Mcst2Model& model,
                                         const TrainConfig& cfg);

}  // namespace mcst2::reference
