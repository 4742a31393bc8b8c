#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slodnet {

using Index = std::int32_t;

/// Node position in the unit cube. Only the first `dimension` entries are used.
using Point = std::array<double, 3>;

struct Edge {
  Index a;
  Index b;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Neighbor entry of the node adjacency: the adjacent node and the connecting edge.
struct Neighbor {
  Index node;
  Index edge;
};

/// Graph embedded in [0,1]^d with Euclidean edge lengths and a Dirichlet mask.
///
/// Construction validates the structural invariants (no self-loops, no
/// duplicates, positive lengths) and builds a CSR adjacency. Connectivity and
/// the existence of a Dirichlet node are checked by validate().
class SpatialNetwork {
public:
  SpatialNetwork() = default;
  SpatialNetwork(int dimension, std::vector<Point> points, std::vector<Edge> edges,
                 std::vector<bool> dirichlet);

  int dimension() const noexcept { return dimension_; }
  Index num_nodes() const noexcept { return static_cast<Index>(points_.size()); }
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }

  const std::vector<Point>& points() const noexcept { return points_; }
  const Point& point(Index i) const { return points_[i]; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<double>& edge_lengths() const noexcept { return lengths_; }
  double edge_length(Index e) const { return lengths_[e]; }
  const std::vector<bool>& dirichlet() const noexcept { return dirichlet_; }
  bool is_dirichlet(Index i) const { return dirichlet_[i]; }
  Index num_dirichlet() const noexcept;

  std::span<const Neighbor> neighbors(Index i) const {
    return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
  }
  Index degree(Index i) const { return offsets_[i + 1] - offsets_[i]; }

  double total_length() const noexcept;
  bool is_connected() const;

  /// Throws AssemblyError unless the network is connected and has a Dirichlet node.
  void validate() const;

  friend bool operator==(const SpatialNetwork& x, const SpatialNetwork& y) {
    return x.dimension_ == y.dimension_ && x.points_ == y.points_ && x.edges_ == y.edges_ &&
           x.dirichlet_ == y.dirichlet_;
  }

private:
  int dimension_ = 2;
  std::vector<Point> points_;
  std::vector<Edge> edges_;
  std::vector<double> lengths_;
  std::vector<bool> dirichlet_;
  std::vector<Index> offsets_{0};
  std::vector<Neighbor> adjacency_;
};

/// Parameters of the random straight-fiber network in [0,1]^2.
struct FiberGenConfig {
  std::int64_t n_lines = 2000;
  double line_length = 0.1;
  double margin = 0.05; ///< midpoints are drawn from [-margin, 1+margin]^d
  std::uint64_t seed = 1;
  int dimension = 2;
};

struct Segment {
  Point p;
  Point q;
};

/// Dirichlet rule used throughout: some coordinate equals 0 or 1 within 1e-12.
bool on_unit_cube_boundary(const Point& p, int dimension);

/// Portable uniform sampler: splitmix64-seeded xoshiro256** with 53-bit doubles.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  std::array<std::uint64_t, 4> s_;
};

/// Sample `n_lines` uniformly rotated segments with uniform midpoints.
std::vector<Segment> sample_fibers(const FiberGenConfig& config);

/// Clip a segment to [0,1]^2. Returns false when nothing of positive length remains.
bool clip_to_unit_square(Segment& s);

/// Intersection of two segments, or false. The result does not depend on argument order.
bool intersect_segments(const Segment& s1, const Segment& s2, Point& out);

/// Planar arrangement of already clipped segments: nodes at endpoints and
/// pairwise intersections, edges between consecutive nodes along each segment.
/// Dirichlet nodes are those on the boundary of the unit square.
SpatialNetwork build_segment_network(std::span<const Segment> segments);

SpatialNetwork largest_connected_component(const SpatialNetwork& net);

/// Iteratively removes interior nodes of degree one (and degree zero). Boundary nodes are kept.
SpatialNetwork remove_hanging_nodes(const SpatialNetwork& net);

/// Keep only the listed nodes (ascending ids) and the edges between them.
SpatialNetwork induced_subnetwork(const SpatialNetwork& net, std::span<const Index> nodes);

/// Full generation pipeline: sample, clip, arrange, largest component, prune, mark Dirichlet.
SpatialNetwork generate_fiber_network(const FiberGenConfig& config);

/// Connected component label per node; returns the number of components.
Index connected_components(const SpatialNetwork& net, std::vector<Index>& label);

// Persistence ------------------------------------------------------------------

void save_network_json(const SpatialNetwork& net, const std::filesystem::path& path);
void save_network_binary(const SpatialNetwork& net, const std::filesystem::path& path);
/// Chooses the format by extension: ".json" is JSON, anything else binary.
void save_network(const SpatialNetwork& net, const std::filesystem::path& path);
/// Detects the format from the file content.
SpatialNetwork load_network(const std::filesystem::path& path);

SpatialNetwork network_from_json(const std::string& text);
std::string network_to_json(const SpatialNetwork& net);

/// Canonical byte serialization (the binary file format).
std::vector<std::uint8_t> canonical_bytes(const SpatialNetwork& net);
SpatialNetwork network_from_bytes(std::span<const std::uint8_t> bytes);

/// Lower-case hex SHA-256 of canonical_bytes().
std::string canonical_sha256(const SpatialNetwork& net);

} // namespace slodnet
