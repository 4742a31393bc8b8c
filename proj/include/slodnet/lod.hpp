#pragma once

#include "slodnet/mesh.hpp"
#include "slodnet/slod.hpp"

#include <vector>

namespace slodnet {

/// Constrained energy minimizer on a patch: argmin (Kv, v) over V_omega with Pi_H v = 1_T.
struct LodBasisFunction {
  Index element = -1;
  int order = 0;
  std::vector<Index> elements;
  SparseNodal phi;
  PiecewiseConstant multiplier; ///< over `elements`
  double constraint_residual = 0.0; ///< max |Pi_H phi - 1_T| over `elements`
};

LodBasisFunction build_lod_basis(const SpatialNetwork& net, const EdgeWeights& w,
                                 const ElementPartition& part, Index t, int ell,
                                 const SolverOptions& options = {});
/// Same, reusing an assembled K.
LodBasisFunction build_lod_basis(const SpatialNetwork& net, const SparseOperator& K,
                                 const ElementPartition& part, Index t, int ell,
                                 const SolverOptions& options = {});

std::vector<LodBasisFunction> build_lod_space(const SpatialNetwork& net, const EdgeWeights& w,
                                              const ElementPartition& part, int ell,
                                              const SolverOptions& options = {});

NodalFunction lod_galerkin_solve(const SpatialNetwork& net, const EdgeWeights& w,
                                 const std::vector<LodBasisFunction>& basis,
                                 const NodalFunction& f);

} // namespace slodnet
