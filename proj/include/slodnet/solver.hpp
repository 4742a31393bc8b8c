#pragma once

#include "slodnet/operators.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace slodnet {

struct SolverOptions {
  /// Target relative residual on the free set.
  double tol = 1e-12;
  /// Above this many unknowns the solver switches to diagonally preconditioned CG.
  Index max_direct_unknowns = 4'000'000;
  int max_cg_iterations = 50'000;
  int refinement_steps = 3;
};

struct SolveStats {
  bool direct = true;
  int iterations = 0;
  double residual = 0.0;       ///< ||b - A x|| / ||b|| on the free set
  double backward_error = 0.0; ///< ||b - A x||_inf / (||A||_inf ||x||_inf + ||b||_inf)
};

/// Free nodes of a Dirichlet problem: active and not on Gamma, ascending.
std::vector<Index> free_nodes(const SpatialNetwork& net, const std::vector<bool>& active);

/// SPD solver for an operator restricted to a free node set.
///
/// The factorization is built once; solve() is const and may be called
/// concurrently. Right-hand sides are functionals (e.g. M f), given and
/// returned at global dimension.
class DirichletSolver {
public:
  DirichletSolver(const SparseOperator& op, std::vector<Index> free, SolverOptions options = {});
  /// `compact` is the operator already restricted to `free` (rows/cols in that order).
  DirichletSolver(ColSparseMatrix compact, std::vector<Index> free, Index global_size,
                  SolverOptions options = {});

  NodalFunction solve(const NodalFunction& rhs, SolveStats* stats = nullptr) const;
  /// Solves for several compact right-hand sides at once (columns ordered like free()).
  Eigen::MatrixXd solve_compact(const Eigen::MatrixXd& rhs) const;
  /// W = D^{-1/2} L^{-1} P B for the factorization P^T L D L^T P, so that W^T W = B^T A^{-1} B.
  /// Direct factorizations only.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& rhs) const;

  const std::vector<Index>& free() const noexcept { return free_; }
  Index global_size() const noexcept { return global_size_; }
  const ColSparseMatrix& matrix() const noexcept { return matrix_; }
  bool direct() const noexcept { return static_cast<bool>(ldlt_); }

private:
  void factor();
  Eigen::VectorXd solve_vector(const Eigen::VectorXd& b, SolveStats* stats) const;

  ColSparseMatrix matrix_;
  std::vector<Index> free_;
  Index global_size_;
  SolverOptions options_;
  double norm_inf_ = 0.0;
  std::shared_ptr<Eigen::SimplicialLDLT<ColSparseMatrix>> ldlt_;
};

/// Dirichlet-constrained system: operator, admissible (free) node mask, functional rhs.
struct LinearSystem {
  const SparseOperator* op = nullptr;
  std::vector<bool> free; ///< true for unknowns; other nodes are held at zero
  NodalFunction rhs;
};

NodalFunction solve_dirichlet(const LinearSystem& sys, double tol = 1e-12,
                              SolveStats* stats = nullptr);

/// Symmetric pencil A x = lambda C x. When `factor` F is present, A = F^T F and the
/// smallest pairs are obtained from a singular value decomposition of F, which
/// resolves eigenvalues far below eps * lambda_max.
struct EigenPencil {
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  std::optional<Eigen::MatrixXd> factor;

  Index dimension() const { return static_cast<Index>(C.rows()); }
};

struct EigenPairs {
  Eigen::VectorXd values;  ///< ascending
  Eigen::MatrixXd vectors; ///< C-orthonormal columns
  /// Eigenvalues below 1e-14 * lambda_max; these carry no significant digits.
  bool below_conditioning_floor = false;
  double condition = 0.0; ///< lambda_max / lambda_min (inf if lambda_min <= 0)
  double lambda_max = 0.0;
};

/// The k smallest pairs (all when k >= dimension). Throws SolverError if C is not SPD.
EigenPairs smallest_generalized_eigenpairs(const EigenPencil& p, Index k);

/// Same pencil, dense Cholesky reduction of C to a standard symmetric problem (ignores `factor`).
EigenPairs dense_generalized_eigenpairs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// Second eigenvalue of a graph pencil (A singular with the constants as kernel).
/// The C-constant direction is projected out. Throws SolverError when the
/// result is not positive (disconnected graph).
double second_eigenvalue(const EigenPencil& p);

/// Sparse variant for large graphs: A sparse Laplacian, C = diag(mass).
double second_eigenvalue_sparse(const ColSparseMatrix& A, const Eigen::VectorXd& mass);

std::pair<double, double> extremal_eigenvalues(const Eigen::MatrixXd& sym);

} // namespace slodnet
