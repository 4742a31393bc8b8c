#include "../fixtures.hpp"

#include "slodnet/error.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <deque>

using namespace slodnet;

TEST_SUITE("mesh") {

TEST_CASE("cartesian mesh indexing and point location") {
  const CartesianMesh mesh(0.125, 2);
  CHECK(mesh.per_axis() == 8);
  CHECK(mesh.num_elements() == 64);
  for (Index t = 0; t < mesh.num_elements(); ++t) CHECK(mesh.linear(mesh.multi(t)) == t);
  Rng rng(1);
  for (int s = 0; s < 1000; ++s) {
    const Point p{rng.uniform(), rng.uniform(), 0.0};
    const auto [lo, hi] = mesh.bounds(mesh.element_of(p));
    for (int k = 0; k < 2; ++k) {
      CHECK(lo[k] <= p[k]);
      CHECK(p[k] < hi[k]);
    }
  }
  CHECK(mesh.element_of({1.0, 1.0, 0.0}) == mesh.num_elements() - 1);
  CHECK(mesh.element_of({0.0, 0.0, 0.0}) == 0);
  CHECK(mesh.element_of({0.125, 0.0, 0.0}) == 1);
  CHECK_THROWS_AS(mesh.element_of({1.1, 0.5, 0.0}), AssemblyError);
  CHECK_THROWS_AS(CartesianMesh(0.3, 2), AssemblyError);
  CHECK_THROWS_AS(CartesianMesh(0.0, 2), AssemblyError);
}

TEST_CASE("patches match the Chebyshev ball") {
  const CartesianMesh mesh(0.0625, 2);
  for (Index t : {0, 17, 100, 255})
    for (int ell = 0; ell <= 3; ++ell) {
      std::vector<Index> brute;
      const auto a = mesh.multi(t);
      for (Index s = 0; s < mesh.num_elements(); ++s) {
        const auto b = mesh.multi(s);
        if (std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])) <= ell) brute.push_back(s);
      }
      CHECK(mesh.patch_elements(t, ell) == brute);
      for (Index s : brute) CHECK(mesh.chebyshev_distance(t, s) <= ell);
    }
  const std::vector<Index> pair{0, 1};
  const auto g = mesh.grow(pair);
  std::vector<Index> expect;
  for (Index s : mesh.patch_elements(0, 1)) expect.push_back(s);
  for (Index s : mesh.patch_elements(1, 1)) expect.push_back(s);
  std::sort(expect.begin(), expect.end());
  expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
  CHECK(g == expect);
  CHECK(mesh.patch_is_whole(0, 15));
  CHECK_FALSE(mesh.patch_is_whole(0, 14));
}

TEST_CASE("element partition") {
  const auto net = fixture::micro(21);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  std::vector<int> count(net.num_nodes(), 0);
  const Eigen::VectorXd m = fixture::dense_mass(net);
  for (Index t = 0; t < mesh.num_elements(); ++t) {
    double mass = 0.0;
    for (Index i : part.nodes_of(t)) {
      ++count[i];
      CHECK(part.element_of_node(i) == t);
      CHECK(mesh.element_of(net.point(i)) == t);
      mass += m[i];
    }
    CHECK(part.element_mass(t) == doctest::Approx(mass).epsilon(1e-14));
  }
  for (int c : count) CHECK(c == 1);
  CHECK((part.node_mass() - m).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("patch node sets") {
  const auto net = fixture::micro(22);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  for (Index t : {0, 5, 10})
    for (int ell : {1, 2}) {
      const Patch p = make_patch(part, net, t, ell);
      CHECK(p.elements == mesh.patch_elements(t, ell));
      std::vector<Index> nodes, ext;
      for (Index i = 0; i < net.num_nodes(); ++i) {
        const bool in = mesh.chebyshev_distance(t, mesh.element_of(net.point(i))) <= ell;
        CHECK(p.node_mask[i] == in);
        if (in) nodes.push_back(i);
      }
      for (Index i = 0; i < net.num_nodes(); ++i) {
        bool near = p.node_mask[i];
        for (const auto& nb : net.neighbors(i)) near = near || p.node_mask[nb.node];
        if (near) ext.push_back(i);
      }
      CHECK(p.nodes == nodes);
      CHECK(p.extended == ext);
    }
}

TEST_CASE("L2 projection onto piecewise constants") {
  const auto net = fixture::micro(23);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  const Eigen::VectorXd m = part.node_mass();
  for (int s = 0; s < 5; ++s) {
    const NodalFunction v = fixture::random_vector(net.num_nodes(), 50 + s);
    const PiecewiseConstant c = l2_projection(part, v);
    const NodalFunction pv = to_nodal(part, c);
    CHECK((l2_projection(part, pv) - c).cwiseAbs().maxCoeff() <= 1e-12);
    const double norm_v = std::sqrt(v.dot(m.asDiagonal() * v));
    const double norm_pv = std::sqrt(pv.dot(m.asDiagonal() * pv));
    CHECK(norm_pv <= norm_v * (1 + 1e-12));
    for (Index t = 0; t < mesh.num_elements(); ++t) {
      const NodalFunction one = indicator(part, t);
      CHECK(std::abs((v - pv).dot(m.asDiagonal() * one)) <= 1e-12 * norm_v);
    }
  }
  NodalFunction ones = NodalFunction::Ones(net.num_nodes());
  CHECK((l2_projection(part, ones).array() - 1.0).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("empty elements are reported") {
  const auto net = fixture::micro(24, 60, 0.3);
  const CartesianMesh mesh(1.0 / 64, 2);
  const ElementPartition part(mesh, net);
  CHECK_THROWS_AS(l2_projection(part, NodalFunction::Ones(net.num_nodes())), AssemblyError);
}

TEST_CASE("local Poincare eigenvalue matches a dense subgraph solve") {
  const auto net = fixture::lattice(16);
  const CartesianMesh mesh(0.25, 2);
  const ElementPartition part(mesh, net);
  for (Index t : {0, 5, 15}) {
    ConnectivityReport rep;
    const auto nodes = poincare_subgraph(part, net, t, &rep);
    REQUIRE(rep.passes);
    // breadth-first oracle inside N(T)
    std::vector<bool> in(net.num_nodes(), false);
    for (Index s : mesh.patch_elements(t, 1))
      for (Index i : part.nodes_of(s)) in[i] = true;
    std::vector<bool> seen(net.num_nodes(), false);
    std::deque<Index> q{part.nodes_of(t).front()};
    seen[q.front()] = true;
    std::vector<Index> reach;
    while (!q.empty()) {
      const Index x = q.front();
      q.pop_front();
      reach.push_back(x);
      for (const auto& nb : net.neighbors(x))
        if (in[nb.node] && !seen[nb.node]) {
          seen[nb.node] = true;
          q.push_back(nb.node);
        }
    }
    std::sort(reach.begin(), reach.end());
    auto sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == reach);

    const auto sub = induced_subnetwork(net, reach);
    const Eigen::MatrixXd L = fixture::dense_laplacian(sub);
    const Eigen::MatrixXd M = fixture::dense_mass(sub).asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(L, M);
    CHECK(poincare_lambda2(part, net, t) == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-9));
  }
  for (const auto& r : check_connectivity(part, net)) CHECK(r.passes);
}

}
