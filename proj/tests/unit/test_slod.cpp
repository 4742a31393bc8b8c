#include "../fixtures.hpp"

#include "slodnet/error.hpp"
#include "slodnet/slod.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace slodnet;

namespace {

struct Setup {
  SpatialNetwork net;
  EdgeWeights w;
  CartesianMesh mesh;
  ElementPartition part;
  SparseOperator K;
  Setup(std::uint64_t seed, double H, std::int64_t lines = 150)
      : net(fixture::micro(seed, lines)), w(sample_uniform_weights(net, 0.01, 1.0, seed + 1)),
        mesh(H, 2), part(mesh, net), K(assemble_weighted(net, w)) {}
};

std::vector<Index> free_of(const SpatialNetwork& net, const std::vector<Index>& nodes) {
  std::vector<Index> out;
  for (Index i : nodes)
    if (!net.is_dirichlet(i)) out.push_back(i);
  return out;
}

// dense (L + M) restricted to omega, with mass only at nodes of omega
Eigen::MatrixXd dense_riesz(const SpatialNetwork& net, const std::vector<bool>& omega) {
  Eigen::MatrixXd A = fixture::dense_laplacian(net, {}, omega);
  const Eigen::VectorXd m = fixture::dense_mass(net);
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (omega[i]) A(i, i) += m[i];
  return A;
}

NodalFunction load(const Setup& s, const Patch& p, const Eigen::VectorXd& q) {
  NodalFunction g = NodalFunction::Zero(s.net.num_nodes());
  for (std::size_t j = 0; j < p.elements.size(); ++j)
    for (Index i : s.part.nodes_of(p.elements[j])) g[i] = q[Index(j)];
  return g;
}

}

TEST_SUITE("slod") {

TEST_CASE("patch responses match dense oracles") {
  const Setup s(41, 0.25);
  const Patch p = make_patch(s.part, s.net, 5, 1);
  const Eigen::VectorXd m = fixture::dense_mass(s.net);
  const Eigen::MatrixXd Kd = fixture::dense_laplacian(s.net, s.w.gamma);
  const Eigen::MatrixXd Kw = fixture::dense_laplacian(s.net, s.w.gamma, p.node_mask);
  const Eigen::MatrixXd R = dense_riesz(s.net, p.node_mask);
  const auto local = free_of(s.net, p.nodes);
  const auto ext = free_of(s.net, p.extended);

  const Eigen::VectorXd q = fixture::random_vector(Index(p.elements.size()), 3);
  const auto r = response_map(s.net, s.w, s.part, p, q);
  const NodalFunction g = load(s, p, q);
  NodalFunction mg = m.cwiseProduct(g);
  for (Index i = 0; i < s.net.num_nodes(); ++i)
    if (!p.node_mask[i]) mg[i] = 0.0;

  const NodalFunction phi = fixture::dense_solve(Kw, mg, local);
  CHECK((r.phi - phi).cwiseAbs().maxCoeff() <= 1e-10 * phi.cwiseAbs().maxCoeff());

  // conormal derivative in residual form against the Riesz representative
  const NodalFunction b = Kd * phi - mg;
  const NodalFunction tau = fixture::dense_solve(R, b, ext);
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    NodalFunction v = NodalFunction::Zero(s.net.num_nodes());
    for (Index i : ext) v[i] = rng.uniform(-1.0, 1.0);
    const double residual_form = v.dot(Kd * r.phi) - v.dot(mg);
    const double riesz_form = v.dot(R * r.tau);
    CHECK(std::abs(residual_form - riesz_form) <= 1e-10 * std::max(1.0, std::abs(residual_form)));
    CHECK(r.conormal.dot(v) == doctest::Approx(residual_form).epsilon(1e-10).scale(1e-6));
  }
  CHECK((r.tau - tau).cwiseAbs().maxCoeff() <= 1e-9 * tau.cwiseAbs().maxCoeff());
  CHECK(r.sigma == doctest::Approx(std::sqrt(tau.dot(R * tau))).epsilon(1e-9));
}

TEST_CASE("patch pencil matches the dense Gram of conormal derivatives") {
  const Setup s(42, 0.25);
  const Patch p = make_patch(s.part, s.net, 6, 1);
  const EigenPencil pen = assemble_patch_evp(s.net, s.w, s.part, p);
  const Index N = Index(p.elements.size());
  Eigen::MatrixXd A(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      const auto ri = response_map(s.net, s.w, s.part, p, Eigen::VectorXd::Unit(N, i));
      const auto rj = response_map(s.net, s.w, s.part, p, Eigen::VectorXd::Unit(N, j));
      A(i, j) = ri.conormal.dot(rj.tau);
    }
  CHECK((pen.A - A).cwiseAbs().maxCoeff() <= 1e-9 * A.cwiseAbs().maxCoeff());
  for (Index j = 0; j < N; ++j) CHECK(pen.C(j, j) == doctest::Approx(s.part.element_mass(p.elements[j])));
  REQUIRE(pen.factor.has_value());
  CHECK((pen.factor->transpose() * *pen.factor - pen.A).norm() <= 1e-12 * pen.A.norm());
}

TEST_CASE("right-hand side selection") {
  const Setup s(43, 0.25);
  const Patch p = make_patch(s.part, s.net, 5, 1);
  const EigenPencil pen = assemble_patch_evp(s.net, s.w, s.part, p);
  const RhsSelection sel = select_rhs(pen);
  CHECK(sel.g.dot(pen.C * sel.g) == doctest::Approx(1.0).epsilon(1e-12));
  const double rq = sel.g.dot(pen.A * sel.g) / sel.g.dot(pen.C * sel.g);
  CHECK(std::abs(rq - sel.lambda_min) <= 1e-10 * std::max(sel.lambda_min, pen.A.norm() * 1e-6));
  CHECK(sel.sigma == doctest::Approx(std::sqrt(sel.lambda_min)));
  Index big = 0;
  sel.g.cwiseAbs().maxCoeff(&big);
  CHECK(sel.g[big] > 0.0);
  CHECK(sel.spectrum.size() == Index(p.elements.size()));
  CHECK(std::is_sorted(sel.spectrum.begin(), sel.spectrum.end()));
  CHECK(sel.gap_ratio >= 1.0);
  const auto r = response_map(s.net, s.w, s.part, p, sel.g);
  CHECK(r.sigma == doctest::Approx(sel.sigma).epsilon(1e-8));

  Eigen::VectorXd v(3);
  v << 0.5, -2.0, 1.0;
  canonicalize_sign(v);
  CHECK(v[1] == 2.0);
}

TEST_CASE("degenerate pencils are flagged as ties") {
  EigenPencil p{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3), std::nullopt};
  CHECK(select_rhs(p).tie);
  p.A(2, 2) = 4.0;
  p.A(1, 1) = 2.0;
  CHECK_FALSE(select_rhs(p).tie);
}

TEST_CASE("coarse stiffness, Gram matrix and Galerkin solve") {
  const Setup s(44, 0.25);
  const SlodSpace space = build_space(s.net, s.w, s.part, 1);
  const Index M = Index(space.basis.size());
  REQUIRE(M == s.mesh.num_elements());
  Eigen::MatrixXd Phi(s.net.num_nodes(), M);
  for (Index j = 0; j < M; ++j) Phi.col(j) = Eigen::VectorXd(space.basis[j].phi);
  const Eigen::MatrixXd Kd = fixture::dense_laplacian(s.net, s.w.gamma);
  const Eigen::MatrixXd S = Phi.transpose() * Kd * Phi;
  CHECK((space.stiffness - S).cwiseAbs().maxCoeff() <= 1e-10 * S.cwiseAbs().maxCoeff());

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  for (Index i = 0; i < M; ++i)
    for (Index j = 0; j < M; ++j) {
      const NodalFunction gi = load(s, make_patch_from_elements(s.part, s.net, space.basis[i].elements),
                                    space.basis[i].g);
      const NodalFunction gj = load(s, make_patch_from_elements(s.part, s.net, space.basis[j].elements),
                                    space.basis[j].g);
      G(i, j) = gi.dot(s.part.node_mass().asDiagonal() * gj);
    }
  CHECK((space.gram - G).cwiseAbs().maxCoeff() <= 1e-12);
  for (Index i = 0; i < M; ++i) CHECK(space.gram(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(space.riesz_constant == doctest::Approx(std::max(space.gram_max, 1.0 / space.gram_min)));
  CHECK(estimator(space) == doctest::Approx(std::sqrt(space.riesz_constant) * space.sigma_max()));

  const NodalFunction f = fixture::random_vector(s.net.num_nodes(), 77);
  const auto gal = galerkin_solve(space, f);
  const Eigen::VectorXd rhs = Phi.transpose() * s.part.node_mass().asDiagonal() * f;
  const Eigen::VectorXd c = S.llt().solve(rhs);
  CHECK((gal.coefficients - c).cwiseAbs().maxCoeff() <= 1e-9 * c.cwiseAbs().maxCoeff());
  CHECK((gal.u - Phi * c).cwiseAbs().maxCoeff() <= 1e-9 * (Phi * c).cwiseAbs().maxCoeff());
  for (const auto& b : space.basis) CHECK(sigma_mismatch(b) <= 1.0);
}

TEST_CASE("fine solve and error measure") {
  const Setup s(45, 0.25);
  const NodalFunction f = fixture::random_vector(s.net.num_nodes(), 4);
  const NodalFunction u = fine_solve(s.net, s.w, f);
  const NodalFunction ref = fixture::dense_solve(fixture::dense_laplacian(s.net, s.w.gamma),
                                                 fixture::dense_mass(s.net).cwiseProduct(f),
                                                 fixture::interior(s.net));
  CHECK(relative_l_error(s.net, ref, u) <= 1e-10);
  CHECK(relative_l_error(s.net, ref, 0.5 * ref) == doctest::Approx(0.5));
}

TEST_CASE("whole-domain patches reproduce the solution for piecewise constant loads") {
  const Setup s(46, 0.25);
  const SlodSpace space = build_space(s.net, s.w, s.part, 3);
  for (int k = 0; k < 3; ++k) {
    const PiecewiseConstant c = fixture::random_vector(s.mesh.num_elements(), 10 + k);
    const NodalFunction f = to_nodal(s.part, c);
    const NodalFunction u = fine_solve(s.net, s.w, f);
    CHECK(relative_l_error(s.net, u, galerkin_solve(space, f).u) <= 1e-8);
    CHECK(relative_l_error(s.net, u, prototypical_solve(s.net, s.w, s.part, f)) <= 1e-8);
  }
}

TEST_CASE("prototypical solve does not depend on the element order") {
  const Setup s(47, 0.25);
  const NodalFunction f = fixture::random_vector(s.net.num_nodes(), 5);
  std::vector<Index> order(s.mesh.num_elements());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::swap(order[2], order[7]);
  const NodalFunction a = prototypical_solve(s.net, s.w, s.part, f);
  const NodalFunction b = prototypical_solve(s.net, s.w, s.part, f, order);
  CHECK(relative_l_error(s.net, a, b) <= 1e-10);
}

TEST_CASE("scaling the conductivities scales the solution") {
  const Setup s(48, 0.25);
  EdgeWeights w2 = s.w;
  for (double& g : w2.gamma) g *= 8.0;
  w2.alpha *= 8.0;
  w2.beta *= 8.0;
  const SlodSpace a = build_space(s.net, s.w, s.part, 1);
  const SlodSpace b = build_space(s.net, w2, s.part, 1);
  for (std::size_t t = 0; t < a.basis.size(); ++t) {
    CHECK(b.basis[t].sigma == doctest::Approx(a.basis[t].sigma).epsilon(1e-8).scale(1e-10));
    CHECK((b.basis[t].g - a.basis[t].g).cwiseAbs().maxCoeff() <= 1e-6);
  }
  const NodalFunction f = NodalFunction::Ones(s.net.num_nodes());
  const NodalFunction ua = galerkin_solve(a, f).u, ub = galerkin_solve(b, f).u;
  CHECK(relative_l_error(s.net, ua, 8.0 * ub) <= 1e-8);
}

TEST_CASE("basis export") {
  const Setup s(49, 0.5);
  const SlodSpace space = build_space(s.net, s.w, s.part, 1);
  const std::string json = basis_to_json(space);
  CHECK(json.find("\"sigma\"") != std::string::npos);
  CHECK(json.find("\"element\"") != std::string::npos);
}

}
