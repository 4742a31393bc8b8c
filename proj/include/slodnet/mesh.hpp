#pragma once

#include "slodnet/network.hpp"
#include "slodnet/operators.hpp"

#include <array>
#include <string>
#include <vector>

namespace slodnet {

using MultiIndex = std::array<int, 3>;

/// Uniform Cartesian partition of [0,1]^d into half-open boxes of width H.
///
/// Element boxes are [x_i - H/2, x_i + H/2) per axis, closed on the right when
/// x_i + H/2 = 1, so every point of the cube lies in exactly one element.
class CartesianMesh {
public:
  CartesianMesh(double H, int dimension);

  double H() const noexcept { return H_; }
  int dimension() const noexcept { return dim_; }
  int per_axis() const noexcept { return n_; }
  Index num_elements() const noexcept { return count_; }

  Index linear(const MultiIndex& m) const;
  MultiIndex multi(Index t) const;

  /// Element containing p; throws AssemblyError if p lies outside the cube.
  Index element_of(const Point& p) const;

  /// Lower and upper corner of the element box.
  std::pair<Point, Point> bounds(Index t) const;

  int chebyshev_distance(Index a, Index b) const;

  /// Elements within Chebyshev distance ell of t (ell = 0 gives {t}), ascending.
  std::vector<Index> patch_elements(Index t, int ell) const;
  /// First-order neighborhood of a set of elements, ascending.
  std::vector<Index> grow(const std::vector<Index>& elements) const;
  bool patch_is_whole(Index t, int ell) const;

private:
  double H_;
  int dim_;
  int n_;
  Index count_;
};

/// Assignment of network nodes to mesh elements.
class ElementPartition {
public:
  ElementPartition(const CartesianMesh& mesh, const SpatialNetwork& net);

  const CartesianMesh& mesh() const noexcept { return mesh_; }
  Index element_of_node(Index node) const { return node_element_[node]; }
  const std::vector<Index>& nodes_of(Index t) const { return element_nodes_[t]; }
  /// |1|^2_{M,T}
  double element_mass(Index t) const { return element_mass_[t]; }
  const Eigen::VectorXd& node_mass() const noexcept { return node_mass_; }

private:
  CartesianMesh mesh_;
  std::vector<Index> node_element_;
  std::vector<std::vector<Index>> element_nodes_;
  std::vector<double> element_mass_;
  Eigen::VectorXd node_mass_;
};

/// Element patch N^ell(T) (or a union of patches) with its node sets.
struct Patch {
  Index center = -1; ///< -1 for unions
  int order = 0;
  std::vector<Index> elements;  ///< ascending element ids of T_{H,omega}
  std::vector<bool> node_mask;  ///< N(omega) over all network nodes
  std::vector<Index> nodes;     ///< N(omega), ascending
  std::vector<Index> extended;  ///< N(omega) plus graph neighbors, ascending
  bool whole = false;           ///< all elements of the mesh
};

Patch make_patch(const ElementPartition& part, const SpatialNetwork& net, Index t, int ell);
/// Patch over an explicit element set.
Patch make_patch_from_elements(const ElementPartition& part, const SpatialNetwork& net,
                               std::vector<Index> elements);

/// Coefficients on T_H (one per element).
using PiecewiseConstant = Eigen::VectorXd;

/// L^2 projection onto piecewise constants; throws AssemblyError naming an element without mass.
PiecewiseConstant l2_projection(const ElementPartition& part, const NodalFunction& v);
/// Nodal representation of a piecewise constant.
NodalFunction to_nodal(const ElementPartition& part, const PiecewiseConstant& c);
/// Indicator 1_T as a nodal function.
NodalFunction indicator(const ElementPartition& part, Index t);

struct ConnectivityReport {
  Index element = -1;
  bool passes = false;
  Index subgraph_nodes = 0;
  std::string reason;
};

/// Breadth-first subgraph of element t inside N(T): grown from the first node of t
/// over edges with both endpoints in N(T). Empty when the element fails the check.
std::vector<Index> poincare_subgraph(const ElementPartition& part, const SpatialNetwork& net,
                                     Index t, ConnectivityReport* report = nullptr);

/// Per-element check that one connected subgraph inside N(T) carries every edge touching T.
std::vector<ConnectivityReport> check_connectivity(const ElementPartition& part,
                                                   const SpatialNetwork& net);

/// lambda_2 of the subgraph pencil (L, M); C_po is estimated by lambda_2^{-1/2}.
double poincare_lambda2(const ElementPartition& part, const SpatialNetwork& net, Index t);

} // namespace slodnet
