#include "slodnet/mesh.hpp"

#include "slodnet/error.hpp"
#include "slodnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace slodnet {

// CartesianMesh ---------------------------------------------------------------------

CartesianMesh::CartesianMesh(double H, int dimension) : H_(H), dim_(dimension) {
  if (dimension < 1 || dimension > 3) throw AssemblyError("mesh dimension must be 1, 2 or 3");
  if (!(H > 0.0) || H > 1.0) throw AssemblyError("mesh size H must lie in (0, 1]");
  const double inv = 1.0 / H;
  n_ = static_cast<int>(std::lround(inv));
  if (n_ < 1 || std::abs(n_ * H - 1.0) > 1e-12)
    throw AssemblyError("mesh size H = " + std::to_string(H) + " does not divide the unit cube");
  count_ = 1;
  for (int k = 0; k < dim_; ++k) count_ *= n_;
}

Index CartesianMesh::linear(const MultiIndex& m) const {
  Index t = 0;
  for (int k = dim_ - 1; k >= 0; --k) t = t * n_ + m[k];
  return t;
}

MultiIndex CartesianMesh::multi(Index t) const {
  MultiIndex m{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    m[k] = t % n_;
    t /= n_;
  }
  return m;
}

Index CartesianMesh::element_of(const Point& p) const {
  MultiIndex m{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    if (!(p[k] >= 0.0 && p[k] <= 1.0))
      throw AssemblyError("point outside the unit cube in coordinate " + std::to_string(k));
    m[k] = std::min(static_cast<int>(std::floor(p[k] * n_)), n_ - 1);
  }
  return linear(m);
}

std::pair<Point, Point> CartesianMesh::bounds(Index t) const {
  const auto m = multi(t);
  Point lo{0.0, 0.0, 0.0}, hi{0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k) {
    lo[k] = m[k] * H_;
    hi[k] = m[k] + 1 == n_ ? 1.0 : (m[k] + 1) * H_;
  }
  return {lo, hi};
}

int CartesianMesh::chebyshev_distance(Index a, Index b) const {
  const auto x = multi(a), y = multi(b);
  int d = 0;
  for (int k = 0; k < dim_; ++k) d = std::max(d, std::abs(x[k] - y[k]));
  return d;
}

std::vector<Index> CartesianMesh::patch_elements(Index t, int ell) const {
  const auto c = multi(t);
  MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    lo[k] = std::max(0, c[k] - ell);
    hi[k] = std::min(n_ - 1, c[k] + ell);
  }
  std::vector<Index> out;
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) out.push_back(linear({x, y, z}));
  return out;
}

std::vector<Index> CartesianMesh::grow(const std::vector<Index>& elements) const {
  std::vector<Index> out;
  for (Index t : elements) {
    const auto p = patch_elements(t, 1);
    out.insert(out.end(), p.begin(), p.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool CartesianMesh::patch_is_whole(Index t, int ell) const {
  return static_cast<Index>(patch_elements(t, ell).size()) == count_;
}

// ElementPartition ------------------------------------------------------------------

ElementPartition::ElementPartition(const CartesianMesh& mesh, const SpatialNetwork& net)
    : mesh_(mesh), node_element_(net.num_nodes()), element_nodes_(mesh.num_elements()),
      element_mass_(mesh.num_elements(), 0.0), node_mass_(mass_diagonal(net)) {
  if (net.dimension() != mesh.dimension())
    throw AssemblyError("mesh and network dimensions differ");
  for (Index i = 0; i < net.num_nodes(); ++i) {
    const Index t = mesh.element_of(net.point(i));
    node_element_[i] = t;
    element_nodes_[t].push_back(i);
    element_mass_[t] += node_mass_[i];
  }
}

// Patches ----------------------------------------------------------------------------

Patch make_patch_from_elements(const ElementPartition& part, const SpatialNetwork& net,
                               std::vector<Index> elements) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  Patch p;
  p.elements = std::move(elements);
  p.whole = static_cast<Index>(p.elements.size()) == part.mesh().num_elements();
  p.node_mask.assign(net.num_nodes(), false);
  for (Index t : p.elements)
    for (Index i : part.nodes_of(t)) p.node_mask[i] = true;
  std::vector<bool> ext = p.node_mask;
  for (Index i = 0; i < net.num_nodes(); ++i) {
    if (!p.node_mask[i]) continue;
    p.nodes.push_back(i);
    for (const auto& nb : net.neighbors(i)) ext[nb.node] = true;
  }
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (ext[i]) p.extended.push_back(i);
  return p;
}

Patch make_patch(const ElementPartition& part, const SpatialNetwork& net, Index t, int ell) {
  if (ell < 0) throw AssemblyError("patch order must be non-negative");
  Patch p = make_patch_from_elements(part, net, part.mesh().patch_elements(t, ell));
  p.center = t;
  p.order = ell;
  return p;
}

// Projection --------------------------------------------------------------------------

PiecewiseConstant l2_projection(const ElementPartition& part, const NodalFunction& v) {
  const Index ne = part.mesh().num_elements();
  PiecewiseConstant c(ne);
  const auto& m = part.node_mass();
  for (Index t = 0; t < ne; ++t) {
    const double mass = part.element_mass(t);
    if (!(mass > 0.0))
      throw AssemblyError("element " + std::to_string(t) +
                          " carries no network mass; the mesh is finer than the network");
    double s = 0.0;
    for (Index i : part.nodes_of(t)) s += m[i] * v[i];
    c[t] = s / mass;
  }
  return c;
}

NodalFunction to_nodal(const ElementPartition& part, const PiecewiseConstant& c) {
  NodalFunction v(part.node_mass().size());
  for (Index i = 0; i < v.size(); ++i) v[i] = c[part.element_of_node(i)];
  return v;
}

NodalFunction indicator(const ElementPartition& part, Index t) {
  NodalFunction v = NodalFunction::Zero(part.node_mass().size());
  for (Index i : part.nodes_of(t)) v[i] = 1.0;
  return v;
}

// Connectivity and Poincare -------------------------------------------------------------

std::vector<Index> poincare_subgraph(const ElementPartition& part, const SpatialNetwork& net,
                                     Index t, ConnectivityReport* report) {
  ConnectivityReport rep;
  rep.element = t;
  auto fail = [&](std::string why) {
    rep.passes = false;
    rep.reason = std::move(why);
    if (report) *report = rep;
    return std::vector<Index>{};
  };

  const auto& own = part.nodes_of(t);
  if (own.empty()) return fail("element contains no node");

  const auto& mesh = part.mesh();
  std::vector<bool> in_patch(net.num_nodes(), false);
  for (Index s : mesh.patch_elements(t, 1))
    for (Index i : part.nodes_of(s)) in_patch[i] = true;

  for (Index i : own)
    for (const auto& nb : net.neighbors(i))
      if (!in_patch[nb.node]) return fail("edge leaves the first-order patch");

  std::vector<bool> seen(net.num_nodes(), false);
  std::deque<Index> queue{own.front()};
  seen[own.front()] = true;
  std::vector<Index> reached;
  while (!queue.empty()) {
    const Index x = queue.front();
    queue.pop_front();
    reached.push_back(x);
    for (const auto& nb : net.neighbors(x)) {
      if (in_patch[nb.node] && !seen[nb.node]) {
        seen[nb.node] = true;
        queue.push_back(nb.node);
      }
    }
  }
  // every edge touching T must have both endpoints in the grown component
  for (Index i : own) {
    if (!seen[i]) return fail("element nodes lie in different components");
  }
  std::sort(reached.begin(), reached.end());
  rep.passes = true;
  rep.subgraph_nodes = static_cast<Index>(reached.size());
  if (report) *report = rep;
  return reached;
}

std::vector<ConnectivityReport> check_connectivity(const ElementPartition& part,
                                                   const SpatialNetwork& net) {
  std::vector<ConnectivityReport> out(part.mesh().num_elements());
  for (Index t = 0; t < part.mesh().num_elements(); ++t) poincare_subgraph(part, net, t, &out[t]);
  return out;
}

double poincare_lambda2(const ElementPartition& part, const SpatialNetwork& net, Index t) {
  ConnectivityReport rep;
  const auto nodes = poincare_subgraph(part, net, t, &rep);
  if (!rep.passes)
    throw SolverError("element " + std::to_string(t) + " fails the connectivity check: " +
                      rep.reason);
  if (nodes.size() < 2) throw SolverError("Poincare subgraph of element " + std::to_string(t) +
                                          " has a single node");
  const SpatialNetwork sub = induced_subnetwork(net, nodes);
  const std::vector<bool> all(sub.num_nodes(), true);
  std::vector<Index> ids(sub.num_nodes());
  for (Index i = 0; i < sub.num_nodes(); ++i) ids[i] = i;
  const ColSparseMatrix L = assemble_restricted(sub, nullptr, all, ids, 1.0, 0.0);
  const Eigen::VectorXd m = mass_diagonal(sub);
  if (sub.num_nodes() <= 400) {
    EigenPencil p{Eigen::MatrixXd(L), m.asDiagonal().toDenseMatrix(), std::nullopt};
    return second_eigenvalue(p);
  }
  return second_eigenvalue_sparse(L, m);
}

} // namespace slodnet
