#pragma once

#include "slodnet/mesh.hpp"
#include "slodnet/network.hpp"
#include "slodnet/operators.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace fixture {

using namespace slodnet;

/// Seeded fiber network with a few hundred nodes.
inline SpatialNetwork micro(std::uint64_t seed, std::int64_t lines = 150, double length = 0.4) {
  FiberGenConfig c;
  c.n_lines = lines;
  c.line_length = length;
  c.seed = seed;
  return generate_fiber_network(c);
}

/// Square lattice with n x n cells on [0,1]^2; boundary nodes are Dirichlet.
inline SpatialNetwork lattice(int n) {
  std::vector<Point> pts;
  std::vector<bool> dir;
  std::vector<Edge> edges;
  auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      pts.push_back({double(i) / n, double(j) / n, 0.0});
      dir.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      if (i < n) edges.push_back({id(i, j), id(i + 1, j)});
      if (j < n) edges.push_back({id(i, j), id(i, j + 1)});
    }
  return SpatialNetwork(2, std::move(pts), std::move(edges), std::move(dir));
}

inline double length(const SpatialNetwork& net, const Edge& e) {
  const auto& p = net.point(e.a);
  const auto& q = net.point(e.b);
  return std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
}

/// Dense Laplacian with conductivities gamma (all ones when empty) and the half-weight
/// rule for edges with a single endpoint in `omega` (whole network when empty).
inline Eigen::MatrixXd dense_laplacian(const SpatialNetwork& net, const std::vector<double>& gamma = {},
                                       const std::vector<bool>& omega = {}) {
  const Index n = net.num_nodes();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Index e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges()[e];
    double w = (gamma.empty() ? 1.0 : gamma[e]) / length(net, ed);
    if (!omega.empty()) {
      const int inside = int(omega[ed.a]) + int(omega[ed.b]);
      if (inside == 0) continue;
      if (inside == 1) w *= 0.5;
    }
    A(ed.a, ed.a) += w;
    A(ed.b, ed.b) += w;
    A(ed.a, ed.b) -= w;
    A(ed.b, ed.a) -= w;
  }
  return A;
}

inline Eigen::VectorXd dense_mass(const SpatialNetwork& net) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(net.num_nodes());
  for (const auto& e : net.edges()) {
    const double h = 0.5 * length(net, e);
    m[e.a] += h;
    m[e.b] += h;
  }
  return m;
}

inline std::vector<Index> interior(const SpatialNetwork& net) {
  std::vector<Index> out;
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (!net.is_dirichlet(i)) out.push_back(i);
  return out;
}

/// Dense solve of A u = b on `free`, zero elsewhere.
inline Eigen::VectorXd dense_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const std::vector<Index>& free) {
  const Index k = static_cast<Index>(free.size());
  Eigen::MatrixXd Af(k, k);
  Eigen::VectorXd bf(k);
  for (Index r = 0; r < k; ++r) {
    bf[r] = b[free[r]];
    for (Index c = 0; c < k; ++c) Af(r, c) = A(free[r], free[c]);
  }
  const Eigen::VectorXd x = Af.llt().solve(bf);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(b.size());
  for (Index r = 0; r < k; ++r) u[free[r]] = x[r];
  return u;
}

inline double l_norm(const SpatialNetwork& net, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(dense_laplacian(net) * v)));
}

inline Eigen::VectorXd random_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

/// Random vector vanishing on the Dirichlet nodes.
inline Eigen::VectorXd random_admissible(const SpatialNetwork& net, std::uint64_t seed) {
  Eigen::VectorXd v = random_vector(net.num_nodes(), seed);
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (net.is_dirichlet(i)) v[i] = 0.0;
  return v;
}

} // namespace fixture
