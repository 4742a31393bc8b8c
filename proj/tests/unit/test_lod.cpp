#include "../fixtures.hpp"

#include "slodnet/lod.hpp"

#include <doctest.h>

using namespace slodnet;

TEST_SUITE("lod") {

TEST_CASE("constrained energy minimizers") {
  const auto net = fixture::micro(51);
  const auto w = sample_uniform_weights(net, 0.01, 1.0, 52);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  const Eigen::MatrixXd Kd = fixture::dense_laplacian(net, w.gamma);
  const Eigen::VectorXd m = part.node_mass();

  for (Index t : {0, 5, 10}) {
    const auto b = build_lod_basis(net, w, part, t, 1);
    const Patch p = make_patch(part, net, t, 1);
    CHECK(b.elements == p.elements);
    CHECK(b.constraint_residual <= 1e-10);
    const NodalFunction phi = Eigen::VectorXd(b.phi);
    const PiecewiseConstant proj = l2_projection(part, phi);
    for (Index s : p.elements) CHECK(proj[s] == doctest::Approx(s == t ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
    for (Index i = 0; i < net.num_nodes(); ++i)
      if (!p.node_mask[i] || net.is_dirichlet(i)) CHECK(phi[i] == 0.0);

    // feasible perturbations: free patch nodes, zero element means
    const double energy = phi.dot(Kd * phi);
    Rng rng(100 + t);
    for (int k = 0; k < 10; ++k) {
      NodalFunction d = NodalFunction::Zero(net.num_nodes());
      for (Index i : p.nodes)
        if (!net.is_dirichlet(i)) d[i] = rng.uniform(-1.0, 1.0);
      for (Index s : p.elements) {
        double mean = 0.0, free_mass = 0.0;
        for (Index i : part.nodes_of(s)) {
          mean += m[i] * d[i];
          if (!net.is_dirichlet(i)) free_mass += m[i];
        }
        if (free_mass > 0.0)
          for (Index i : part.nodes_of(s))
            if (!net.is_dirichlet(i)) d[i] -= mean / free_mass;
      }
      CHECK(l2_projection(part, d).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(phi.dot(Kd * d)) <= 1e-8 * std::sqrt(energy * d.dot(Kd * d)));
      const NodalFunction v = phi + 1e-2 * d;
      CHECK(v.dot(Kd * v) >= energy * (1 - 1e-12));
    }
  }
}

TEST_CASE("LOD Galerkin solve matches the dense projection") {
  const auto net = fixture::micro(53);
  const auto w = sample_uniform_weights(net, 0.01, 1.0, 54);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  const auto basis = build_lod_space(net, w, part, 1);
  REQUIRE(Index(basis.size()) == mesh.num_elements());
  const Eigen::MatrixXd Kd = fixture::dense_laplacian(net, w.gamma);
  Eigen::MatrixXd Phi(net.num_nodes(), Index(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) Phi.col(Index(j)) = Eigen::VectorXd(basis[j].phi);
  const NodalFunction f = fixture::random_vector(net.num_nodes(), 8);
  const Eigen::VectorXd c =
      (Phi.transpose() * Kd * Phi).llt().solve(Phi.transpose() * part.node_mass().asDiagonal() * f);
  const NodalFunction u = lod_galerkin_solve(net, w, basis, f);
  CHECK(relative_l_error(net, Phi * c, u) <= 1e-9);
}

}
