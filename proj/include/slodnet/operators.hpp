#pragma once

#include "slodnet/network.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace slodnet {

/// One real value per node of a fixed network.
using NodalFunction = Eigen::VectorXd;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;
using ColSparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

/// Edge conductivities gamma with the bounds 0 < alpha <= gamma <= beta.
struct EdgeWeights {
  std::vector<double> gamma;
  double alpha = 1.0;
  double beta = 1.0;

  /// Throws AssemblyError if the size or the bounds are violated.
  void validate(const SpatialNetwork& net) const;
  double contrast() const { return beta / alpha; }
};

EdgeWeights unit_weights(const SpatialNetwork& net);

/// gamma uniform on [lo, hi], one draw per edge in edge order.
EdgeWeights sample_uniform_weights(const SpatialNetwork& net, double lo, double hi,
                                   std::uint64_t seed);

/// Polyline corridor of the given full width.
struct Corridor {
  std::vector<Point> polyline;
  double width = 0.02;

  bool contains(const Point& p) const;
};

/// Edges whose midpoint lies in some corridor get gamma = value; bounds are widened.
EdgeWeights apply_channels(const SpatialNetwork& net, const EdgeWeights& w,
                           std::span<const Corridor> channels, double value);

/// A node subset omega of the network (the nodes N(omega) of a box or an explicit set).
class Subdomain {
public:
  static Subdomain whole(const SpatialNetwork& net);
  /// Half-open box [lo, hi) per axis, closed where hi equals 1.
  static Subdomain box(const SpatialNetwork& net, const Point& lo, const Point& hi);
  static Subdomain from_nodes(const SpatialNetwork& net, std::span<const Index> nodes);
  static Subdomain from_mask(std::vector<bool> mask);

  const std::vector<bool>& mask() const noexcept { return mask_; }
  bool contains(Index i) const { return mask_[i]; }
  std::vector<Index> nodes() const;
  Index size() const noexcept { return count_; }
  bool is_whole() const noexcept { return count_ == static_cast<Index>(mask_.size()); }

private:
  explicit Subdomain(std::vector<bool> mask);
  std::vector<bool> mask_;
  Index count_ = 0;
};

/// Symmetric operator over the global node index set.
///
/// Subdomain operators keep global dimension; `active` marks N(omega).
struct SparseOperator {
  SparseMatrix matrix;
  std::vector<bool> active;

  Index size() const noexcept { return static_cast<Index>(matrix.rows()); }
  NodalFunction apply(const NodalFunction& v) const { return matrix * v; }
  double form(const NodalFunction& v) const { return v.dot(matrix * v); }
};

SparseOperator assemble_mass(const SpatialNetwork& net);
SparseOperator assemble_mass(const SpatialNetwork& net, const Subdomain& omega);
SparseOperator assemble_laplacian(const SpatialNetwork& net);
SparseOperator assemble_laplacian(const SpatialNetwork& net, const Subdomain& omega);
SparseOperator assemble_weighted(const SpatialNetwork& net, const EdgeWeights& w);
SparseOperator assemble_weighted(const SpatialNetwork& net, const EdgeWeights& w,
                                 const Subdomain& omega);

/// Diagonal of the full mass operator: half the incident edge length per node.
Eigen::VectorXd mass_diagonal(const SpatialNetwork& net);

/// Compact matrix of sum_{x in omega} (stiffness_scale * K_x + mass_scale * M_x)
/// restricted to rows/columns `nodes` (global ids). `w == nullptr` means gamma = 1.
/// Nodes outside omega may appear in `nodes` (they receive half-edge contributions).
ColSparseMatrix assemble_restricted(const SpatialNetwork& net, const EdgeWeights* w,
                                    const std::vector<bool>& omega, std::span<const Index> nodes,
                                    double stiffness_scale, double mass_scale);

/// Quadratic forms evaluated edge by edge (sums of non-negative terms).
double mass_form(const SpatialNetwork& net, const NodalFunction& v,
                 const std::vector<bool>* omega = nullptr);
double laplacian_form(const SpatialNetwork& net, const NodalFunction& v,
                      const std::vector<bool>* omega = nullptr, const EdgeWeights* w = nullptr);

struct Norms {
  double m = 0.0; ///< |v|_{M,omega}
  double l = 0.0; ///< |v|_{L,omega}
  double v = 0.0; ///< sqrt(m^2 + l^2)
  double k = 0.0; ///< |v|_{K,omega}; equals l when no weights are given
};

Norms norms(const SpatialNetwork& net, const NodalFunction& v,
            const std::optional<Subdomain>& omega = std::nullopt, const EdgeWeights* w = nullptr);

/// Matrix Market coordinate export (general, real).
void export_matrix_market(const SparseOperator& op, const std::filesystem::path& path);

} // namespace slodnet
