#include "slodnet/lod.hpp"

#include "slodnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace slodnet {

LodBasisFunction build_lod_basis(const SpatialNetwork& net, const SparseOperator& K,
                                 const ElementPartition& part, Index t, int ell,
                                 const SolverOptions& options) {
  const Patch patch = make_patch(part, net, t, ell);
  std::vector<Index> free;
  for (Index i : patch.nodes)
    if (!net.is_dirichlet(i)) free.push_back(i);
  if (free.empty()) throw SolverError("patch around element " + std::to_string(t) + " has no free node");
  const DirichletSolver solver(K, free, options);

  const Index N = static_cast<Index>(patch.elements.size());
  const Index nf = static_cast<Index>(free.size());
  std::vector<Index> slot(part.mesh().num_elements(), -1);
  for (Index j = 0; j < N; ++j) slot[patch.elements[j]] = j;
  const auto& m = part.node_mass();

  // constraint rows: (Pi_H v)(T_j) = sum_{x in T_j} m_x v_x / |T_j|_M
  Eigen::MatrixXd Ct = Eigen::MatrixXd::Zero(nf, N);
  for (Index k = 0; k < nf; ++k) {
    const Index e = part.element_of_node(free[k]);
    Ct(k, slot[e]) = m[free[k]] / part.element_mass(e);
  }
  const Eigen::MatrixXd X = solver.solve_compact(Ct);
  const Eigen::MatrixXd S = Ct.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success)
    throw SolverError("saddle point system of element " + std::to_string(t) +
                      " is singular (an element of the patch has no free node)");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
  e[slot[t]] = 1.0;
  const Eigen::VectorXd lambda = llt.solve(e);
  const Eigen::VectorXd v = X * lambda;

  LodBasisFunction out;
  out.element = t;
  out.order = ell;
  out.elements = patch.elements;
  out.multiplier = lambda;
  out.constraint_residual = (Ct.transpose() * v - e).lpNorm<Eigen::Infinity>();
  out.phi.resize(net.num_nodes());
  for (Index k = 0; k < nf; ++k)
    if (v[k] != 0.0) out.phi.insert(free[k]) = v[k];
  return out;
}

LodBasisFunction build_lod_basis(const SpatialNetwork& net, const EdgeWeights& w,
                                 const ElementPartition& part, Index t, int ell,
                                 const SolverOptions& options) {
  return build_lod_basis(net, assemble_weighted(net, w), part, t, ell, options);
}

std::vector<LodBasisFunction> build_lod_space(const SpatialNetwork& net, const EdgeWeights& w,
                                              const ElementPartition& part, int ell,
                                              const SolverOptions& options) {
  const SparseOperator K = assemble_weighted(net, w);
  std::vector<LodBasisFunction> out;
  out.reserve(part.mesh().num_elements());
  for (Index t = 0; t < part.mesh().num_elements(); ++t)
    out.push_back(build_lod_basis(net, K, part, t, ell, options));
  return out;
}

NodalFunction lod_galerkin_solve(const SpatialNetwork& net, const EdgeWeights& w,
                                 const std::vector<LodBasisFunction>& basis,
                                 const NodalFunction& f) {
  const SparseOperator K = assemble_weighted(net, w);
  std::vector<SparseNodal> phis;
  phis.reserve(basis.size());
  for (const auto& b : basis) phis.push_back(b.phi);
  return galerkin_solve(phis, coarse_stiffness(phis, K), mass_diagonal(net), f).u;
}

} // namespace slodnet
