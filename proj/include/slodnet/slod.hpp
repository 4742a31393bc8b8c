#pragma once

#include "slodnet/mesh.hpp"
#include "slodnet/operators.hpp"
#include "slodnet/solver.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <vector>

namespace slodnet {

using SparseNodal = Eigen::SparseVector<double, Eigen::ColMajor, Index>;

/// Response of the patch-local solution operator to a piecewise constant load.
struct ResponsePair {
  Eigen::VectorXd g;  ///< coefficients over patch.elements
  NodalFunction phi;  ///< K_omega^{-1} g, zero outside N(omega)
  NodalFunction tau;  ///< Riesz representative of B_omega phi in the extended patch space
  NodalFunction conormal; ///< B_omega phi as a functional on the free extended nodes
  double sigma = 0.0; ///< |tau|_{L+M,omega}
};

/// Factorized local problems of one patch (or union of patches).
///
/// Holds K_omega on the free nodes of N(omega) and L_omega + M_omega on the
/// free nodes of N(omega) and their neighbors.
class PatchProblem {
public:
  PatchProblem(const SpatialNetwork& net, const EdgeWeights& w, const SparseOperator& K,
               const ElementPartition& part, Patch patch, SolverOptions options = {});

  const Patch& patch() const noexcept { return patch_; }
  Index num_elements() const noexcept { return static_cast<Index>(patch_.elements.size()); }

  /// Fresh solves for the load q (coefficients over patch().elements).
  ResponsePair response(const Eigen::VectorXd& q) const;

  /// Pencil (A, C) with A = F^T F; F whitens the conormal derivatives of the indicator responses.
  EigenPencil pencil() const;

  /// Local response phi for coefficients q, from the stored indicator responses.
  NodalFunction combine_phi(const Eigen::VectorXd& q) const;

private:
  const SpatialNetwork& net_;
  const EdgeWeights& w_;
  const SparseOperator& K_;
  const ElementPartition& part_;
  Patch patch_;
  std::unique_ptr<DirichletSolver> local_;    // K_omega on V_omega
  std::unique_ptr<DirichletSolver> riesz_;    // L_omega + M_omega on the extended space
  Eigen::MatrixXd phis_;     // indicator responses on local_->free()
  Eigen::MatrixXd conormals_; // B_omega phi_j on riesz_->free()

  Eigen::VectorXd load(const Eigen::VectorXd& q, const std::vector<Index>& rows) const;
  Eigen::VectorXd conormal_of(const NodalFunction& phi, const Eigen::VectorXd& q) const;
};

ResponsePair response_map(const SpatialNetwork& net, const EdgeWeights& w,
                          const ElementPartition& part, const Patch& patch,
                          const Eigen::VectorXd& q);

EigenPencil assemble_patch_evp(const SpatialNetwork& net, const EdgeWeights& w,
                               const ElementPartition& part, const Patch& patch);

struct StabilizationPolicy {
  bool enabled = true;
  /// Patches with lambda_2 / lambda_1 below this are treated as ties.
  double tie_ratio = 1.0 + 1e-6;
  /// Grouping is triggered while lambda_min(G) < riesz_floor * lambda_max(G).
  double riesz_floor = 1e-5;
  /// Elements within ell layers of the boundary are solved jointly with the
  /// element ell layers inward before any Gram check.
  bool boundary_groups = true;
  int max_rounds = 16;
};

struct RhsSelection {
  Eigen::VectorXd g;        ///< M-normalized, largest-magnitude coefficient positive
  double sigma = 0.0;       ///< sqrt(lambda_min)
  double lambda_min = 0.0;
  double gap_ratio = 0.0;   ///< lambda_2 / lambda_1 (inf for 1x1 pencils)
  bool tie = false;
  Eigen::VectorXd spectrum; ///< all eigenvalues, ascending
  double condition = 0.0;
  bool ill_conditioned = false; ///< condition >= 1e14
};

RhsSelection select_rhs(const EigenPencil& pencil, const StabilizationPolicy& policy = {});

/// Sign convention for eigenvectors: largest-magnitude entry positive (first on ties).
void canonicalize_sign(Eigen::VectorXd& v);

struct SlodBasisFunction {
  Index element = -1;
  int order = 0;
  std::vector<Index> elements; ///< patch elements (g is indexed like this)
  Eigen::VectorXd g;
  SparseNodal phi;
  double sigma = 0.0;
  /// |R g|_{L+M,omega} recomputed from fresh local solves.
  double sigma_recomputed = 0.0;
  Index group = -1; ///< stabilization group, -1 if selected individually
};

/// |sigma - sigma_recomputed| / (1e-8 sigma_recomputed + 1e-11); at most 1 when consistent.
double sigma_mismatch(const SlodBasisFunction& b);

struct SlodSpace {
  double H = 1.0;
  int dimension = 2;
  int order = 1;
  std::vector<SlodBasisFunction> basis;
  Eigen::MatrixXd gram;
  double gram_min = 0.0;
  double gram_max = 0.0;
  double riesz_constant = 1.0;
  Eigen::MatrixXd stiffness; ///< (K phi_j, phi_i)
  Eigen::VectorXd node_mass;
  std::vector<std::vector<Index>> groups;
  int rounds = 0; ///< stabilization rounds performed

  double sigma_max() const;
};

struct BuildOptions {
  StabilizationPolicy policy;
  SolverOptions solver;
};

SlodSpace build_space(const SpatialNetwork& net, const EdgeWeights& w,
                      const ElementPartition& part, int ell, const BuildOptions& options = {});

struct GalerkinResult {
  NodalFunction u;
  Eigen::VectorXd coefficients;
};

/// Galerkin solve in span{phi_i}; `stiffness` must be (K phi_j, phi_i).
GalerkinResult galerkin_solve(std::span<const SparseNodal> phis, const Eigen::MatrixXd& stiffness,
                              const Eigen::VectorXd& node_mass, const NodalFunction& f);
GalerkinResult galerkin_solve(const SlodSpace& space, const NodalFunction& f);

/// Dense (K phi_j, phi_i) for sparse basis functions.
Eigen::MatrixXd coarse_stiffness(std::span<const SparseNodal> phis, const SparseOperator& K);

/// C_r^{1/2} ell^{d/2} sigma with sigma = max_T sigma_T.
double estimator(const SlodSpace& space);

/// Galerkin solution in K^{-1} P0(T_H), computed from one global solve per element.
NodalFunction prototypical_solve(const SpatialNetwork& net, const EdgeWeights& w,
                                 const ElementPartition& part, const NodalFunction& f,
                                 std::span<const Index> element_order = {});

/// Reference solution of K u = M f with homogeneous Dirichlet conditions.
NodalFunction fine_solve(const SpatialNetwork& net, const EdgeWeights& w, const NodalFunction& f,
                         double tol = 1e-12);

/// |u - v|_L / |u|_L
double relative_l_error(const SpatialNetwork& net, const NodalFunction& u, const NodalFunction& v);

/// Per-basis-function record (element, patch, g, sigma) as JSON text.
std::string basis_to_json(const SlodSpace& space);

} // namespace slodnet
