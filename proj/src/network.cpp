#include "slodnet/network.hpp"

#include "slodnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <string>

namespace slodnet {

namespace {

constexpr double kBoundaryTol = 1e-12;
constexpr double kParamSlack = 1e-12;
constexpr double kParallelTol = 1e-14;
constexpr double kMergeTol = 1e-10;

double distance(const Point& x, const Point& y, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  return std::sqrt(s);
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a; // smallest id represents the class
  }

private:
  std::vector<Index> parent_;
};

} // namespace

// SpatialNetwork -----------------------------------------------------------------

SpatialNetwork::SpatialNetwork(int dimension, std::vector<Point> points, std::vector<Edge> edges,
                               std::vector<bool> dirichlet)
    : dimension_(dimension), points_(std::move(points)), edges_(std::move(edges)),
      dirichlet_(std::move(dirichlet)) {
  if (dimension_ < 1 || dimension_ > 3) throw AssemblyError("network dimension must be 1, 2 or 3");
  const auto n = points_.size();
  if (dirichlet_.size() != n) throw AssemblyError("dirichlet mask length differs from node count");

  lengths_.resize(edges_.size());
  std::vector<Index> deg(n, 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [a, b] = edges_[e];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
      throw AssemblyError("edge " + std::to_string(e) + " references a missing node");
    if (a == b) throw AssemblyError("edge " + std::to_string(e) + " is a self-loop");
    lengths_[e] = distance(points_[a], points_[b], dimension_);
    if (!(lengths_[e] > 0.0))
      throw AssemblyError("edge " + std::to_string(e) + " has zero length");
    ++deg[a];
    ++deg[b];
  }

  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  adjacency_.resize(offsets_[n]);
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [a, b] = edges_[e];
    adjacency_[fill[a]++] = {b, static_cast<Index>(e)};
    adjacency_[fill[b]++] = {a, static_cast<Index>(e)};
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = adjacency_.begin() + offsets_[i];
    auto last = adjacency_.begin() + offsets_[i + 1];
    std::sort(first, last, [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
    if (std::adjacent_find(first, last, [](const Neighbor& x, const Neighbor& y) {
          return x.node == y.node;
        }) != last)
      throw AssemblyError("duplicate edge at node " + std::to_string(i));
  }
}

Index SpatialNetwork::num_dirichlet() const noexcept {
  return static_cast<Index>(std::count(dirichlet_.begin(), dirichlet_.end(), true));
}

double SpatialNetwork::total_length() const noexcept {
  double s = 0.0;
  for (double l : lengths_) s += l;
  return s;
}

bool SpatialNetwork::is_connected() const {
  if (points_.empty()) return false;
  std::vector<Index> label;
  return connected_components(*this, label) == 1;
}

void SpatialNetwork::validate() const {
  if (points_.empty()) throw AssemblyError("network is empty");
  if (!is_connected()) throw AssemblyError("network is not connected");
  if (num_dirichlet() == 0) throw AssemblyError("network has no Dirichlet node");
}

// Geometry -----------------------------------------------------------------------

bool on_unit_cube_boundary(const Point& p, int dimension) {
  for (int k = 0; k < dimension; ++k)
    if (std::abs(p[k]) <= kBoundaryTol || std::abs(p[k] - 1.0) <= kBoundaryTol) return true;
  return false;
}

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& w : s_) w = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::vector<Segment> sample_fibers(const FiberGenConfig& config) {
  if (config.dimension != 2) throw GenerationError("fiber networks are planar (dimension 2)");
  if (config.n_lines < 1) throw GenerationError("n_lines must be at least 1");
  if (!(config.line_length > 0.0)) throw GenerationError("line_length must be positive");
  if (!(config.margin >= 0.0)) throw GenerationError("margin must be non-negative");

  Rng rng(config.seed);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(config.n_lines));
  const double half = 0.5 * config.line_length;
  for (std::int64_t i = 0; i < config.n_lines; ++i) {
    const double mx = rng.uniform(-config.margin, 1.0 + config.margin);
    const double my = rng.uniform(-config.margin, 1.0 + config.margin);
    const double angle = std::numbers::pi * rng.uniform();
    const double dx = half * std::cos(angle);
    const double dy = half * std::sin(angle);
    out.push_back({{mx - dx, my - dy, 0.0}, {mx + dx, my + dy, 0.0}});
  }
  return out;
}

bool clip_to_unit_square(Segment& s) {
  // Liang-Barsky; the limiting boundary coordinate is snapped exactly.
  const double dx = s.q[0] - s.p[0];
  const double dy = s.q[1] - s.p[1];
  double t0 = 0.0, t1 = 1.0;
  int snap0 = -1, snap1 = -1; // 0: x=0, 1: x=1, 2: y=0, 3: y=1
  const double pk[4] = {-dx, dx, -dy, dy};
  const double qk[4] = {s.p[0], 1.0 - s.p[0], s.p[1], 1.0 - s.p[1]};
  for (int k = 0; k < 4; ++k) {
    if (pk[k] == 0.0) {
      if (qk[k] < 0.0) return false;
      continue;
    }
    const double r = qk[k] / pk[k];
    if (pk[k] < 0.0) {
      if (r > t1) return false;
      if (r > t0) {
        t0 = r;
        snap0 = k;
      }
    } else {
      if (r < t0) return false;
      if (r < t1) {
        t1 = r;
        snap1 = k;
      }
    }
  }
  Point a{s.p[0] + t0 * dx, s.p[1] + t0 * dy, 0.0};
  Point b{s.p[0] + t1 * dx, s.p[1] + t1 * dy, 0.0};
  auto snap = [](Point& x, int k) {
    if (k < 0) return;
    x[k / 2] = (k % 2 == 0) ? 0.0 : 1.0;
  };
  snap(a, snap0);
  snap(b, snap1);
  for (int k = 0; k < 2; ++k) {
    a[k] = std::clamp(a[k], 0.0, 1.0);
    b[k] = std::clamp(b[k], 0.0, 1.0);
  }
  if (distance(a, b, 2) < kMergeTol) return false;
  s.p = a;
  s.q = b;
  return true;
}

namespace {
bool segment_less(const Segment& x, const Segment& y) {
  if (x.p != y.p) return x.p < y.p;
  return x.q < y.q;
}
} // namespace

bool intersect_segments(const Segment& s1, const Segment& s2, Point& out) {
  const Segment& a = segment_less(s2, s1) ? s2 : s1;
  const Segment& b = segment_less(s2, s1) ? s1 : s2;
  const double rx = a.q[0] - a.p[0], ry = a.q[1] - a.p[1];
  const double sx = b.q[0] - b.p[0], sy = b.q[1] - b.p[1];
  const double denom = cross2(rx, ry, sx, sy);
  if (std::abs(denom) < kParallelTol) return false;
  const double wx = b.p[0] - a.p[0], wy = b.p[1] - a.p[1];
  const double t = cross2(wx, wy, sx, sy) / denom;
  const double u = cross2(wx, wy, rx, ry) / denom;
  if (t < -kParamSlack || t > 1.0 + kParamSlack || u < -kParamSlack || u > 1.0 + kParamSlack)
    return false;
  const double tc = std::clamp(t, 0.0, 1.0);
  out = {a.p[0] + tc * rx, a.p[1] + tc * ry, 0.0};
  return true;
}

SpatialNetwork build_segment_network(std::span<const Segment> segments) {
  const std::size_t ns = segments.size();
  if (ns == 0) throw GenerationError("no segment inside the domain");

  std::vector<Point> nodes;
  // (parameter, node) lists per segment
  std::vector<std::vector<std::pair<double, Index>>> on_segment(ns);
  auto param = [&](std::size_t i, const Point& x) {
    const auto& s = segments[i];
    const double rx = s.q[0] - s.p[0], ry = s.q[1] - s.p[1];
    return ((x[0] - s.p[0]) * rx + (x[1] - s.p[1]) * ry) / (rx * rx + ry * ry);
  };
  for (std::size_t i = 0; i < ns; ++i) {
    on_segment[i].push_back({0.0, static_cast<Index>(nodes.size())});
    nodes.push_back(segments[i].p);
    on_segment[i].push_back({1.0, static_cast<Index>(nodes.size())});
    nodes.push_back(segments[i].q);
  }

  // uniform bucket grid; a pair is tested only in the cell holding the lower
  // corner of the overlap of the two bounding boxes
  double max_extent = 0.0;
  for (const auto& s : segments)
    max_extent = std::max({max_extent, std::abs(s.q[0] - s.p[0]), std::abs(s.q[1] - s.p[1])});
  const int cells = std::clamp(static_cast<int>(1.0 / std::max(max_extent, 1e-3)), 1, 1024);
  auto cell_of = [cells](double x) { return std::clamp(static_cast<int>(x * cells), 0, cells - 1); };
  std::vector<std::vector<Index>> bucket(static_cast<std::size_t>(cells) * cells);
  struct Box {
    double x0, y0, x1, y1;
  };
  std::vector<Box> box(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto& s = segments[i];
    box[i] = {std::min(s.p[0], s.q[0]), std::min(s.p[1], s.q[1]), std::max(s.p[0], s.q[0]),
              std::max(s.p[1], s.q[1])};
    for (int cx = cell_of(box[i].x0); cx <= cell_of(box[i].x1); ++cx)
      for (int cy = cell_of(box[i].y0); cy <= cell_of(box[i].y1); ++cy)
        bucket[static_cast<std::size_t>(cx) * cells + cy].push_back(static_cast<Index>(i));
  }
  std::vector<std::pair<Index, Index>> hits;
  for (int cx = 0; cx < cells; ++cx) {
    for (int cy = 0; cy < cells; ++cy) {
      const auto& b = bucket[static_cast<std::size_t>(cx) * cells + cy];
      for (std::size_t u = 0; u < b.size(); ++u) {
        for (std::size_t v = u + 1; v < b.size(); ++v) {
          const Box& p = box[b[u]];
          const Box& q = box[b[v]];
          const double ox0 = std::max(p.x0, q.x0), oy0 = std::max(p.y0, q.y0);
          const double ox1 = std::min(p.x1, q.x1), oy1 = std::min(p.y1, q.y1);
          if (ox0 > ox1 + kParamSlack || oy0 > oy1 + kParamSlack) continue;
          if (cell_of(ox0) != cx || cell_of(oy0) != cy) continue;
          hits.emplace_back(std::min(b[u], b[v]), std::max(b[u], b[v]));
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  for (const auto& [i, j] : hits) {
    Point x;
    if (!intersect_segments(segments[i], segments[j], x)) continue;
    const Index id = static_cast<Index>(nodes.size());
    nodes.push_back(x);
    on_segment[i].push_back({param(i, x), id});
    on_segment[j].push_back({param(j, x), id});
  }

  UnionFind uf(nodes.size());
  for (auto& list : on_segment) {
    std::sort(list.begin(), list.end());
    for (std::size_t k = 1; k < list.size(); ++k)
      if (distance(nodes[list[k - 1].second], nodes[list[k].second], 2) < kMergeTol)
        uf.unite(list[k - 1].second, list[k].second);
  }

  std::vector<Index> compact(nodes.size(), -1);
  std::vector<Point> points;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Index r = uf.find(static_cast<Index>(i));
    if (compact[r] < 0) {
      compact[r] = static_cast<Index>(points.size());
      points.push_back(nodes[r]);
    }
  }
  std::vector<Edge> edges;
  for (const auto& list : on_segment) {
    for (std::size_t k = 1; k < list.size(); ++k) {
      const Index a = compact[uf.find(list[k - 1].second)];
      const Index b = compact[uf.find(list[k].second)];
      if (a != b) edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& x, const Edge& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<bool> dirichlet(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) dirichlet[i] = on_unit_cube_boundary(points[i], 2);
  return SpatialNetwork(2, std::move(points), std::move(edges), std::move(dirichlet));
}

// Graph utilities ------------------------------------------------------------------

Index connected_components(const SpatialNetwork& net, std::vector<Index>& label) {
  const Index n = net.num_nodes();
  label.assign(n, -1);
  Index count = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index x = stack.back();
      stack.pop_back();
      for (const auto& nb : net.neighbors(x)) {
        if (label[nb.node] < 0) {
          label[nb.node] = count;
          stack.push_back(nb.node);
        }
      }
    }
    ++count;
  }
  return count;
}

SpatialNetwork induced_subnetwork(const SpatialNetwork& net, std::span<const Index> nodes) {
  std::vector<Index> compact(net.num_nodes(), -1);
  std::vector<Point> points;
  std::vector<bool> dirichlet;
  points.reserve(nodes.size());
  for (Index i : nodes) {
    compact[i] = static_cast<Index>(points.size());
    points.push_back(net.point(i));
    dirichlet.push_back(net.is_dirichlet(i));
  }
  std::vector<Edge> edges;
  for (const auto& e : net.edges()) {
    const Index a = compact[e.a], b = compact[e.b];
    if (a >= 0 && b >= 0) edges.push_back({std::min(a, b), std::max(a, b)});
  }
  return SpatialNetwork(net.dimension(), std::move(points), std::move(edges), std::move(dirichlet));
}

SpatialNetwork largest_connected_component(const SpatialNetwork& net) {
  if (net.num_nodes() == 0) throw GenerationError("largest_connected_component: empty network");
  std::vector<Index> label;
  const Index count = connected_components(net, label);
  std::vector<Index> size(count, 0);
  for (Index l : label) ++size[l];
  const Index best =
      static_cast<Index>(std::max_element(size.begin(), size.end()) - size.begin());
  std::vector<Index> keep;
  for (Index i = 0; i < net.num_nodes(); ++i)
    if (label[i] == best) keep.push_back(i);
  return induced_subnetwork(net, keep);
}

SpatialNetwork remove_hanging_nodes(const SpatialNetwork& net) {
  const Index n = net.num_nodes();
  std::vector<Index> deg(n);
  std::vector<bool> removed(n, false);
  std::deque<Index> queue;
  for (Index i = 0; i < n; ++i) {
    deg[i] = net.degree(i);
    if (deg[i] <= 1 && !net.is_dirichlet(i)) {
      removed[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const Index x = queue.front();
    queue.pop_front();
    for (const auto& nb : net.neighbors(x)) {
      const Index y = nb.node;
      if (removed[y]) continue;
      if (--deg[y] <= 1 && !net.is_dirichlet(y)) {
        removed[y] = true;
        queue.push_back(y);
      }
    }
  }
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i)
    if (!removed[i]) keep.push_back(i);
  if (keep.empty()) throw GenerationError("removing hanging nodes emptied the network");
  return induced_subnetwork(net, keep);
}

SpatialNetwork generate_fiber_network(const FiberGenConfig& config) {
  auto fibers = sample_fibers(config);
  std::vector<Segment> inside;
  inside.reserve(fibers.size());
  for (auto& s : fibers)
    if (clip_to_unit_square(s)) inside.push_back(s);
  if (inside.empty()) throw GenerationError("no fiber intersects the unit square");

  auto net = build_segment_network(inside);
  net = largest_connected_component(net);
  net = remove_hanging_nodes(net);
  if (net.num_dirichlet() == 0)
    throw GenerationError("generated network does not reach the boundary");
  if (!net.is_connected()) throw GenerationError("generated network is disconnected");
  return net;
}

} // namespace slodnet
