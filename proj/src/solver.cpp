#include "slodnet/solver.hpp"

#include "slodnet/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slodnet {

std::vector<Index> free_nodes(const SpatialNetwork& net, const std::vector<bool>& active) {
  std::vector<Index> out;
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (active[i] && !net.is_dirichlet(i)) out.push_back(i);
  return out;
}

namespace {

ColSparseMatrix restrict_rows_cols(const SparseMatrix& A, const std::vector<Index>& free) {
  std::vector<Index> local(A.rows(), -1);
  for (std::size_t k = 0; k < free.size(); ++k) local[free[k]] = static_cast<Index>(k);
  std::vector<Eigen::Triplet<double, Index>> trip;
  for (std::size_t k = 0; k < free.size(); ++k) {
    for (SparseMatrix::InnerIterator it(A, free[k]); it; ++it) {
      const Index c = local[it.col()];
      if (c >= 0) trip.emplace_back(static_cast<Index>(k), c, it.value());
    }
  }
  const auto n = static_cast<Index>(free.size());
  ColSparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double inf_norm(const ColSparseMatrix& A) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (Index c = 0; c < A.outerSize(); ++c)
    for (ColSparseMatrix::InnerIterator it(A, c); it; ++it) rows[it.row()] += std::abs(it.value());
  return A.rows() ? rows.maxCoeff() : 0.0;
}

} // namespace

DirichletSolver::DirichletSolver(const SparseOperator& op, std::vector<Index> free,
                                 SolverOptions options)
    : DirichletSolver(restrict_rows_cols(op.matrix, free), free, op.size(), options) {}

DirichletSolver::DirichletSolver(ColSparseMatrix compact, std::vector<Index> free,
                                 Index global_size, SolverOptions options)
    : matrix_(std::move(compact)), free_(std::move(free)), global_size_(global_size),
      options_(options) {
  if (free_.empty()) throw SolverError("Dirichlet problem has no free node");
  if (matrix_.rows() != static_cast<Index>(free_.size()))
    throw SolverError("compact operator does not match the free node set");
  norm_inf_ = inf_norm(matrix_);
  factor();
}

void DirichletSolver::factor() {
  if (static_cast<Index>(free_.size()) > options_.max_direct_unknowns) return;
  auto f = std::make_shared<Eigen::SimplicialLDLT<ColSparseMatrix>>();
  f->compute(matrix_);
  if (f->info() != Eigen::Success) throw SolverError("sparse factorization failed");
  if ((f->vectorD().array() <= 0.0).any())
    throw SolverError("operator is not positive definite on the free nodes");
  ldlt_ = std::move(f);
}

Eigen::VectorXd DirichletSolver::solve_vector(const Eigen::VectorXd& b, SolveStats* stats) const {
  const double bnorm = b.norm();
  SolveStats st;
  st.direct = static_cast<bool>(ldlt_);
  if (bnorm == 0.0) {
    if (stats) *stats = st;
    return Eigen::VectorXd::Zero(b.size());
  }
  Eigen::VectorXd x;
  if (ldlt_) {
    x = ldlt_->solve(b);
    Eigen::VectorXd r = b - matrix_ * x;
    for (int k = 0; k < options_.refinement_steps && r.norm() > options_.tol * bnorm; ++k) {
      x += ldlt_->solve(r);
      r = b - matrix_ * x;
      ++st.iterations;
    }
    st.residual = r.norm() / bnorm;
    st.backward_error =
        r.lpNorm<Eigen::Infinity>() / (norm_inf_ * x.lpNorm<Eigen::Infinity>() +
                                       b.lpNorm<Eigen::Infinity>());
  } else {
    Eigen::ConjugateGradient<ColSparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options_.tol);
    cg.setMaxIterations(options_.max_cg_iterations);
    cg.compute(matrix_);
    x = cg.solve(b);
    st.iterations = static_cast<int>(cg.iterations());
    const Eigen::VectorXd r = b - matrix_ * x;
    st.residual = r.norm() / bnorm;
    st.backward_error =
        r.lpNorm<Eigen::Infinity>() / (norm_inf_ * x.lpNorm<Eigen::Infinity>() +
                                       b.lpNorm<Eigen::Infinity>());
    if (cg.info() != Eigen::Success && st.residual > options_.tol)
      throw SolverError("conjugate gradients did not converge", st.residual);
  }
  // direct solves are accepted on normwise backward error; the relative
  // residual alone is unattainable for high-contrast operators
  if (st.residual > options_.tol && st.backward_error > options_.tol)
    throw SolverError("linear solve missed tolerance", st.residual);
  if (stats) *stats = st;
  return x;
}

NodalFunction DirichletSolver::solve(const NodalFunction& rhs, SolveStats* stats) const {
  if (rhs.size() != global_size_) throw SolverError("right-hand side has wrong dimension");
  Eigen::VectorXd b(free_.size());
  for (std::size_t k = 0; k < free_.size(); ++k) b[k] = rhs[free_[k]];
  const Eigen::VectorXd x = solve_vector(b, stats);
  NodalFunction out = NodalFunction::Zero(global_size_);
  for (std::size_t k = 0; k < free_.size(); ++k) out[free_[k]] = x[k];
  return out;
}

Eigen::MatrixXd DirichletSolver::solve_compact(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  for (Index j = 0; j < rhs.cols(); ++j) out.col(j) = solve_vector(rhs.col(j), nullptr);
  return out;
}

Eigen::MatrixXd DirichletSolver::whiten(const Eigen::MatrixXd& rhs) const {
  if (!ldlt_) throw SolverError("whitening needs a direct factorization");
  Eigen::MatrixXd y = ldlt_->permutationP() * rhs;
  ldlt_->matrixL().solveInPlace(y);
  y = ldlt_->vectorD().cwiseSqrt().cwiseInverse().asDiagonal() * y;
  return y;
}

NodalFunction solve_dirichlet(const LinearSystem& sys, double tol, SolveStats* stats) {
  if (!sys.op) throw SolverError("linear system without operator");
  std::vector<Index> free;
  for (std::size_t i = 0; i < sys.free.size(); ++i)
    if (sys.free[i]) free.push_back(static_cast<Index>(i));
  SolverOptions opt;
  opt.tol = tol;
  DirichletSolver solver(*sys.op, std::move(free), opt);
  return solver.solve(sys.rhs, stats);
}

// Eigenvalue problems ---------------------------------------------------------------------

namespace {

void finish(EigenPairs& out) {
  const Index n = out.values.size();
  if (n == 0) return;
  const double lmin = out.values[0];
  const double lmax = out.values[n - 1];
  out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  out.below_conditioning_floor = lmin < 1e-14 * std::abs(lmax);
  out.lambda_max = lmax;
}

Eigen::LLT<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& C) {
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw SolverError("mass matrix of the pencil is not SPD");
  return llt;
}

} // namespace

EigenPairs dense_generalized_eigenpairs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows())
    throw SolverError("pencil matrices must be square and of equal size");
  const auto llt = cholesky(C);
  // B = R^{-T} A R^{-1} with C = R^T R
  Eigen::MatrixXd B = llt.matrixL().solve(A);
  B = llt.matrixL().solve(B.transpose()).transpose();
  B = 0.5 * (B + B.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  if (es.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed");
  EigenPairs out;
  out.values = es.eigenvalues();
  out.vectors = llt.matrixU().solve(es.eigenvectors());
  finish(out);
  return out;
}

EigenPairs smallest_generalized_eigenpairs(const EigenPencil& p, Index k) {
  const Index n = p.dimension();
  k = std::min(k, n);
  EigenPairs all;
  if (p.factor) {
    const auto& F = *p.factor;
    if (F.cols() != n) throw SolverError("pencil factor has wrong column count");
    const auto llt = cholesky(p.C);
    // Y = F R^{-1}; singular values of Y are the square roots of the eigenvalues
    const Eigen::MatrixXd Y = llt.matrixU().solve<Eigen::OnTheRight>(F);
    Eigen::MatrixXd R;
    if (Y.rows() > Y.cols()) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    } else {
      R = Y;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    const Eigen::VectorXd s = svd.singularValues(); // descending
    const Index r = s.size();
    all.values.resize(n);
    all.vectors.resize(n, n);
    const Eigen::MatrixXd V = llt.matrixU().solve(svd.matrixV());
    for (Index i = 0; i < n; ++i) {
      const Index src = n - 1 - i;
      all.values[i] = src < r ? s[src] * s[src] : 0.0;
      all.vectors.col(i) = V.col(src);
    }
  } else {
    all = dense_generalized_eigenpairs(p.A, p.C);
  }
  finish(all);
  EigenPairs out;
  out.values = all.values.head(k);
  out.vectors = all.vectors.leftCols(k);
  out.condition = all.condition;
  out.below_conditioning_floor = all.below_conditioning_floor;
  out.lambda_max = all.lambda_max;
  return out;
}

double second_eigenvalue(const EigenPencil& p) {
  const Index n = p.dimension();
  if (n < 2) throw SolverError("second eigenvalue needs at least two unknowns");
  const auto llt = cholesky(p.C);
  Eigen::MatrixXd B = llt.matrixL().solve(p.A);
  B = llt.matrixL().solve(B.transpose()).transpose();
  B = 0.5 * (B + B.transpose()).eval();
  // image of the constant vector under R, then a Householder basis whose first
  // column spans it; the trailing block is the deflated operator
  Eigen::VectorXd u = llt.matrixU() * Eigen::VectorXd::Ones(n);
  u.normalize();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd D = (Q.transpose() * B * Q).bottomRightCorner(n - 1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (D + D.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double l2 = es.eigenvalues()[0];
  const double scale = std::max(std::abs(es.eigenvalues()[n - 2]), B.diagonal().cwiseAbs().maxCoeff());
  if (!(l2 > 1e-14 * scale)) throw SolverError("disconnected subgraph: lambda_2 vanishes");
  return l2;
}

double second_eigenvalue_sparse(const ColSparseMatrix& A, const Eigen::VectorXd& mass) {
  const Index n = A.rows();
  if (n < 2) throw SolverError("second eigenvalue needs at least two unknowns");
  const Index block = std::min<Index>(8, n - 1);
  const double shift = 1e-8 * A.diagonal().sum() / mass.sum();
  ColSparseMatrix S = A;
  for (Index i = 0; i < n; ++i) S.coeffRef(i, i) += shift * mass[i];
  Eigen::SimplicialLDLT<ColSparseMatrix> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw SolverError("shifted Laplacian factorization failed");

  const double total = mass.sum();
  auto deflate = [&](Eigen::MatrixXd& X) {
    // remove the M-projection onto constants
    for (Index j = 0; j < X.cols(); ++j) X.col(j).array() -= mass.dot(X.col(j)) / total;
  };
  auto m_orthonormalize = [&](Eigen::MatrixXd& X) {
    Eigen::MatrixXd G = X.transpose() * mass.asDiagonal() * X;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (G + G.transpose()));
    if (llt.info() != Eigen::Success) throw SolverError("subspace iteration lost rank");
    X = llt.matrixU().solve<Eigen::OnTheRight>(X);
  };

  Rng rng(0x5eed);
  Eigen::MatrixXd X(n, block);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < block; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
  deflate(X);
  m_orthonormalize(X);

  double previous = std::numeric_limits<double>::infinity();
  double l2 = previous;
  for (int it = 0; it < 1000; ++it) {
    Eigen::MatrixXd Y = ldlt.solve(mass.asDiagonal() * X);
    deflate(Y);
    m_orthonormalize(Y);
    const Eigen::MatrixXd Ar = Y.transpose() * (A * Y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Ar + Ar.transpose()));
    X = Y * es.eigenvectors();
    l2 = es.eigenvalues()[0];
    if (std::abs(l2 - previous) <= 1e-13 * std::abs(l2)) break;
    previous = l2;
  }
  const double scale = A.diagonal().maxCoeff() / mass.minCoeff();
  if (!(l2 > 1e-14 * scale)) throw SolverError("disconnected subgraph: lambda_2 vanishes");
  return l2;
}

std::pair<double, double> extremal_eigenvalues(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 0) throw SolverError("empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed");
  return {es.eigenvalues()[0], es.eigenvalues()[sym.rows() - 1]};
}

} // namespace slodnet
