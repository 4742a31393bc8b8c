#include "slodnet/operators.hpp"

#include "slodnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace slodnet {

void EdgeWeights::validate(const SpatialNetwork& net) const {
  if (gamma.size() != static_cast<std::size_t>(net.num_edges()))
    throw AssemblyError("edge weights: " + std::to_string(gamma.size()) + " values for " +
                        std::to_string(net.num_edges()) + " edges");
  if (!(alpha > 0.0) || !(alpha <= beta) || !std::isfinite(beta))
    throw AssemblyError("edge weights: bounds must satisfy 0 < alpha <= beta < inf");
  for (std::size_t e = 0; e < gamma.size(); ++e)
    if (!(gamma[e] >= alpha && gamma[e] <= beta))
      throw AssemblyError("edge weight " + std::to_string(e) + " outside [alpha, beta]");
}

EdgeWeights unit_weights(const SpatialNetwork& net) {
  return {std::vector<double>(net.num_edges(), 1.0), 1.0, 1.0};
}

EdgeWeights sample_uniform_weights(const SpatialNetwork& net, double lo, double hi,
                                   std::uint64_t seed) {
  if (!(lo > 0.0) || !(lo <= hi)) throw AssemblyError("uniform weights need 0 < lo <= hi");
  Rng rng(seed);
  EdgeWeights w{std::vector<double>(net.num_edges()), lo, hi};
  for (auto& g : w.gamma) g = lo == hi ? lo : std::min(rng.uniform(lo, hi), hi);
  return w;
}

bool Corridor::contains(const Point& p) const {
  const double r = 0.5 * width;
  if (polyline.size() == 1) {
    const double dx = p[0] - polyline[0][0], dy = p[1] - polyline[0][1];
    return std::sqrt(dx * dx + dy * dy) <= r;
  }
  for (std::size_t k = 1; k < polyline.size(); ++k) {
    const auto& a = polyline[k - 1];
    const auto& b = polyline[k];
    const double ux = b[0] - a[0], uy = b[1] - a[1];
    const double len2 = ux * ux + uy * uy;
    double t = len2 > 0.0 ? ((p[0] - a[0]) * ux + (p[1] - a[1]) * uy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p[0] - (a[0] + t * ux), dy = p[1] - (a[1] + t * uy);
    if (std::sqrt(dx * dx + dy * dy) <= r) return true;
  }
  return false;
}

EdgeWeights apply_channels(const SpatialNetwork& net, const EdgeWeights& w,
                           std::span<const Corridor> channels, double value) {
  if (!(value > 0.0)) throw AssemblyError("channel conductivity must be positive");
  EdgeWeights out = w;
  bool touched = false;
  for (Index e = 0; e < net.num_edges(); ++e) {
    const auto& x = net.point(net.edges()[e].a);
    const auto& y = net.point(net.edges()[e].b);
    const Point mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1]), 0.5 * (x[2] + y[2])};
    for (const auto& c : channels) {
      if (c.contains(mid)) {
        out.gamma[e] = value;
        touched = true;
        break;
      }
    }
  }
  if (touched) {
    out.alpha = std::min(out.alpha, value);
    out.beta = std::max(out.beta, value);
  }
  return out;
}

// Subdomain ----------------------------------------------------------------------------

Subdomain::Subdomain(std::vector<bool> mask)
    : mask_(std::move(mask)),
      count_(static_cast<Index>(std::count(mask_.begin(), mask_.end(), true))) {}

Subdomain Subdomain::whole(const SpatialNetwork& net) {
  return Subdomain(std::vector<bool>(net.num_nodes(), true));
}

Subdomain Subdomain::box(const SpatialNetwork& net, const Point& lo, const Point& hi) {
  std::vector<bool> mask(net.num_nodes());
  for (Index i = 0; i < net.num_nodes(); ++i) {
    const auto& p = net.point(i);
    bool in = true;
    for (int k = 0; k < net.dimension() && in; ++k) {
      const bool upper_ok = hi[k] >= 1.0 ? p[k] <= hi[k] : p[k] < hi[k];
      in = p[k] >= lo[k] && upper_ok;
    }
    mask[i] = in;
  }
  return Subdomain(std::move(mask));
}

Subdomain Subdomain::from_nodes(const SpatialNetwork& net, std::span<const Index> nodes) {
  std::vector<bool> mask(net.num_nodes(), false);
  for (Index i : nodes) {
    if (i < 0 || i >= net.num_nodes()) throw AssemblyError("subdomain node id out of range");
    mask[i] = true;
  }
  return Subdomain(std::move(mask));
}

Subdomain Subdomain::from_mask(std::vector<bool> mask) { return Subdomain(std::move(mask)); }

std::vector<Index> Subdomain::nodes() const {
  std::vector<Index> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) out.push_back(static_cast<Index>(i));
  return out;
}

// Assembly ----------------------------------------------------------------------------

namespace {

using Triplet = Eigen::Triplet<double, Index>;

/// Edge-major assembly of sum_{x in omega} (s K_x + m M_x) at global dimension.
SparseOperator assemble(const SpatialNetwork& net, const EdgeWeights* w,
                        const std::vector<bool>& omega, double s, double m) {
  const Index n = net.num_nodes();
  std::vector<Triplet> trip;
  trip.reserve(4 * static_cast<std::size_t>(net.num_edges()));
  for (Index e = 0; e < net.num_edges(); ++e) {
    const auto [a, b] = net.edges()[e];
    const int inside = (omega[a] ? 1 : 0) + (omega[b] ? 1 : 0);
    if (inside == 0) continue;
    const double len = net.edge_length(e);
    if (!(len > 0.0)) throw AssemblyError("zero-length edge " + std::to_string(e));
    if (s != 0.0) {
      const double gamma = w ? w->gamma[e] : 1.0;
      const double c = s * 0.5 * inside * gamma / len;
      trip.emplace_back(a, a, c);
      trip.emplace_back(b, b, c);
      trip.emplace_back(a, b, -c);
      trip.emplace_back(b, a, -c);
    }
    if (m != 0.0) {
      if (omega[a]) trip.emplace_back(a, a, m * 0.5 * len);
      if (omega[b]) trip.emplace_back(b, b, m * 0.5 * len);
    }
  }
  SparseOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.active = omega;
  return op;
}

} // namespace

SparseOperator assemble_mass(const SpatialNetwork& net) {
  return assemble(net, nullptr, std::vector<bool>(net.num_nodes(), true), 0.0, 1.0);
}
SparseOperator assemble_mass(const SpatialNetwork& net, const Subdomain& omega) {
  return assemble(net, nullptr, omega.mask(), 0.0, 1.0);
}
SparseOperator assemble_laplacian(const SpatialNetwork& net) {
  return assemble(net, nullptr, std::vector<bool>(net.num_nodes(), true), 1.0, 0.0);
}
SparseOperator assemble_laplacian(const SpatialNetwork& net, const Subdomain& omega) {
  return assemble(net, nullptr, omega.mask(), 1.0, 0.0);
}
SparseOperator assemble_weighted(const SpatialNetwork& net, const EdgeWeights& w) {
  w.validate(net);
  return assemble(net, &w, std::vector<bool>(net.num_nodes(), true), 1.0, 0.0);
}
SparseOperator assemble_weighted(const SpatialNetwork& net, const EdgeWeights& w,
                                 const Subdomain& omega) {
  w.validate(net);
  return assemble(net, &w, omega.mask(), 1.0, 0.0);
}

Eigen::VectorXd mass_diagonal(const SpatialNetwork& net) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(net.num_nodes());
  for (Index e = 0; e < net.num_edges(); ++e) {
    const double h = 0.5 * net.edge_length(e);
    d[net.edges()[e].a] += h;
    d[net.edges()[e].b] += h;
  }
  return d;
}

ColSparseMatrix assemble_restricted(const SpatialNetwork& net, const EdgeWeights* w,
                                    const std::vector<bool>& omega, std::span<const Index> nodes,
                                    double stiffness_scale, double mass_scale) {
  std::vector<Index> local(net.num_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<Index>(k);

  std::vector<Triplet> trip;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Index x = nodes[k];
    const Index lx = static_cast<Index>(k);
    for (const auto& nb : net.neighbors(x)) {
      const Index y = nb.node;
      // each edge once: from its smaller endpoint when both are listed
      if (local[y] >= 0 && y < x) continue;
      const int inside = (omega[x] ? 1 : 0) + (omega[y] ? 1 : 0);
      if (inside == 0) continue;
      const double len = net.edge_length(nb.edge);
      const double gamma = w ? w->gamma[nb.edge] : 1.0;
      const double c = stiffness_scale * 0.5 * inside * gamma / len;
      const Index ly = local[y];
      trip.emplace_back(lx, lx, c);
      if (ly >= 0) {
        trip.emplace_back(ly, ly, c);
        trip.emplace_back(lx, ly, -c);
        trip.emplace_back(ly, lx, -c);
      }
      if (mass_scale != 0.0) {
        if (omega[x]) trip.emplace_back(lx, lx, mass_scale * 0.5 * len);
        if (ly >= 0 && omega[y]) trip.emplace_back(ly, ly, mass_scale * 0.5 * len);
      }
    }
  }
  const auto n = static_cast<Index>(nodes.size());
  ColSparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double mass_form(const SpatialNetwork& net, const NodalFunction& v, const std::vector<bool>* omega) {
  double s = 0.0;
  for (Index e = 0; e < net.num_edges(); ++e) {
    const auto [a, b] = net.edges()[e];
    const double h = 0.5 * net.edge_length(e);
    if (!omega || (*omega)[a]) s += h * v[a] * v[a];
    if (!omega || (*omega)[b]) s += h * v[b] * v[b];
  }
  return s;
}

double laplacian_form(const SpatialNetwork& net, const NodalFunction& v,
                      const std::vector<bool>* omega, const EdgeWeights* w) {
  double s = 0.0;
  for (Index e = 0; e < net.num_edges(); ++e) {
    const auto [a, b] = net.edges()[e];
    const int inside = omega ? ((*omega)[a] ? 1 : 0) + ((*omega)[b] ? 1 : 0) : 2;
    if (inside == 0) continue;
    const double d = v[a] - v[b];
    const double gamma = w ? w->gamma[e] : 1.0;
    s += 0.5 * inside * gamma * d * d / net.edge_length(e);
  }
  return s;
}

Norms norms(const SpatialNetwork& net, const NodalFunction& v,
            const std::optional<Subdomain>& omega, const EdgeWeights* w) {
  const std::vector<bool>* mask = omega ? &omega->mask() : nullptr;
  Norms out;
  out.m = std::sqrt(mass_form(net, v, mask));
  out.l = std::sqrt(laplacian_form(net, v, mask));
  out.v = std::sqrt(out.m * out.m + out.l * out.l);
  out.k = w ? std::sqrt(laplacian_form(net, v, mask, w)) : out.l;
  return out;
}

void export_matrix_market(const SparseOperator& op, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << op.matrix.rows() << ' ' << op.matrix.cols() << ' ' << op.matrix.nonZeros() << '\n';
  char buf[64];
  for (Index r = 0; r < op.matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(op.matrix, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << buf << '\n';
    }
  }
}

} // namespace slodnet
