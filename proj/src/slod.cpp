#include "slodnet/slod.hpp"

#include "slodnet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace slodnet {

namespace {

std::vector<Index> without_dirichlet(const SpatialNetwork& net, const std::vector<Index>& nodes) {
  std::vector<Index> out;
  out.reserve(nodes.size());
  for (Index i : nodes)
    if (!net.is_dirichlet(i)) out.push_back(i);
  return out;
}

SparseNodal to_sparse(const NodalFunction& v) {
  SparseNodal s(v.size());
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.insert(i) = v[i];
  return s;
}

} // namespace

// PatchProblem -----------------------------------------------------------------------

PatchProblem::PatchProblem(const SpatialNetwork& net, const EdgeWeights& w,
                           const SparseOperator& K, const ElementPartition& part, Patch patch,
                           SolverOptions options)
    : net_(net), w_(w), K_(K), part_(part), patch_(std::move(patch)) {
  const Index n = net.num_nodes();
  auto local = without_dirichlet(net, patch_.nodes);
  auto ext = without_dirichlet(net, patch_.extended);
  if (local.empty())
    throw SolverError("patch around element " + std::to_string(patch_.center) +
                      " has no free node");
  local_ = std::make_unique<DirichletSolver>(
      assemble_restricted(net, &w, patch_.node_mask, local, 1.0, 0.0), local, n, options);
  riesz_ = std::make_unique<DirichletSolver>(
      assemble_restricted(net, nullptr, patch_.node_mask, ext, 1.0, 1.0), ext, n, options);

  const Index N = num_elements();
  std::vector<Index> slot(part.mesh().num_elements(), -1);
  for (Index j = 0; j < N; ++j) slot[patch_.elements[j]] = j;
  const auto& m = part.node_mass();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Index>(local.size()), N);
  std::vector<Index> pos(n, -1);
  for (std::size_t k = 0; k < local.size(); ++k) {
    pos[local[k]] = static_cast<Index>(k);
    rhs(static_cast<Index>(k), slot[part.element_of_node(local[k])]) = m[local[k]];
  }
  phis_ = local_->solve_compact(rhs);

  // (K phi - M 1_T) on the free extended nodes
  conormals_ = Eigen::MatrixXd::Zero(static_cast<Index>(ext.size()), N);
  for (std::size_t r = 0; r < ext.size(); ++r) {
    const Index x = ext[r];
    for (SparseMatrix::InnerIterator it(K.matrix, x); it; ++it) {
      const Index c = pos[it.col()];
      if (c >= 0) conormals_.row(static_cast<Index>(r)) += it.value() * phis_.row(c);
    }
    if (patch_.node_mask[x]) conormals_(static_cast<Index>(r), slot[part.element_of_node(x)]) -= m[x];
  }
}

Eigen::VectorXd PatchProblem::load(const Eigen::VectorXd& q, const std::vector<Index>& rows) const {
  std::vector<Index> slot(part_.mesh().num_elements(), -1);
  for (Index j = 0; j < num_elements(); ++j) slot[patch_.elements[j]] = j;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net_.num_nodes());
  for (Index x : rows)
    if (patch_.node_mask[x]) out[x] = part_.node_mass()[x] * q[slot[part_.element_of_node(x)]];
  return out;
}

Eigen::VectorXd PatchProblem::conormal_of(const NodalFunction& phi, const Eigen::VectorXd& q) const {
  const auto& ext = riesz_->free();
  const Eigen::VectorXd mg = load(q, ext);
  Eigen::VectorXd b(static_cast<Index>(ext.size()));
  for (std::size_t r = 0; r < ext.size(); ++r) {
    const Index x = ext[r];
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(K_.matrix, x); it; ++it) s += it.value() * phi[it.col()];
    b[static_cast<Index>(r)] = s - mg[x];
  }
  return b;
}

ResponsePair PatchProblem::response(const Eigen::VectorXd& q) const {
  if (q.size() != num_elements()) throw AssemblyError("load has wrong number of coefficients");
  ResponsePair out;
  out.g = q;
  out.phi = local_->solve(load(q, local_->free()));
  const Eigen::VectorXd b = conormal_of(out.phi, q);
  const Eigen::VectorXd t = riesz_->solve_compact(b);
  const auto& ext = riesz_->free();
  out.tau = NodalFunction::Zero(net_.num_nodes());
  out.conormal = NodalFunction::Zero(net_.num_nodes());
  for (std::size_t r = 0; r < ext.size(); ++r) {
    out.tau[ext[r]] = t[static_cast<Index>(r)];
    out.conormal[ext[r]] = b[static_cast<Index>(r)];
  }
  out.sigma = std::sqrt(mass_form(net_, out.tau, &patch_.node_mask) +
                        laplacian_form(net_, out.tau, &patch_.node_mask));
  return out;
}

EigenPencil PatchProblem::pencil() const {
  EigenPencil p;
  Eigen::MatrixXd F = riesz_->whiten(conormals_);
  p.A = F.transpose() * F;
  p.C = Eigen::MatrixXd::Zero(num_elements(), num_elements());
  for (Index j = 0; j < num_elements(); ++j) p.C(j, j) = part_.element_mass(patch_.elements[j]);
  p.factor = std::move(F);
  return p;
}

NodalFunction PatchProblem::combine_phi(const Eigen::VectorXd& q) const {
  const Eigen::VectorXd c = phis_ * q;
  NodalFunction out = NodalFunction::Zero(net_.num_nodes());
  const auto& free = local_->free();
  for (std::size_t k = 0; k < free.size(); ++k) out[free[k]] = c[static_cast<Index>(k)];
  return out;
}

ResponsePair response_map(const SpatialNetwork& net, const EdgeWeights& w,
                          const ElementPartition& part, const Patch& patch,
                          const Eigen::VectorXd& q) {
  const SparseOperator K = assemble_weighted(net, w);
  return PatchProblem(net, w, K, part, patch).response(q);
}

EigenPencil assemble_patch_evp(const SpatialNetwork& net, const EdgeWeights& w,
                               const ElementPartition& part, const Patch& patch) {
  const SparseOperator K = assemble_weighted(net, w);
  return PatchProblem(net, w, K, part, patch).pencil();
}

// Right-hand side selection -------------------------------------------------------------

void canonicalize_sign(Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0.0) v = -v;
}

RhsSelection select_rhs(const EigenPencil& pencil, const StabilizationPolicy& policy) {
  const auto pairs = smallest_generalized_eigenpairs(pencil, pencil.dimension());
  RhsSelection out;
  out.spectrum = pairs.values;
  out.lambda_min = std::max(pairs.values[0], 0.0);
  out.sigma = std::sqrt(out.lambda_min);
  out.g = pairs.vectors.col(0);
  canonicalize_sign(out.g);
  out.condition = pairs.condition;
  out.ill_conditioned = !(pairs.condition < 1e14);
  if (pairs.values.size() < 2) {
    out.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    const double l1 = pairs.values[0], l2 = pairs.values[1];
    out.gap_ratio = l1 > 0.0 ? l2 / l1 : (l2 > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    out.tie = l2 <= policy.tie_ratio * std::max(l1, 0.0);
  }
  return out;
}

// Space construction ---------------------------------------------------------------------

double sigma_mismatch(const SlodBasisFunction& b) {
  return std::abs(b.sigma - b.sigma_recomputed) / (1e-8 * b.sigma_recomputed + 1e-11);
}

double SlodSpace::sigma_max() const {
  double s = 0.0;
  for (const auto& b : basis) s = std::max(s, b.sigma);
  return s;
}

namespace {

Eigen::MatrixXd gram_matrix(const std::vector<SlodBasisFunction>& basis,
                            const ElementPartition& part) {
  const Index M = static_cast<Index>(basis.size());
  const Index ne = part.mesh().num_elements();
  std::vector<Eigen::Triplet<double, Index>> trip;
  for (Index i = 0; i < M; ++i)
    for (std::size_t k = 0; k < basis[i].elements.size(); ++k) {
      const Index t = basis[i].elements[k];
      trip.emplace_back(i, t, basis[i].g[static_cast<Index>(k)] * std::sqrt(part.element_mass(t)));
    }
  Eigen::SparseMatrix<double, Eigen::ColMajor, Index> Gc(M, ne);
  Gc.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<double, Eigen::ColMajor, Index> G = Gc * Gc.transpose();
  return Eigen::MatrixXd(G);
}

// connected components of `members` under Chebyshev distance <= reach
std::vector<std::vector<Index>> cluster(const CartesianMesh& mesh, const std::vector<Index>& members,
                                        int reach) {
  const std::size_t n = members.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (mesh.chebyshev_distance(members[a], members[b]) <= reach) parent[find(a)] = find(b);
  std::vector<std::vector<Index>> groups;
  std::vector<Index> id(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t r = find(a);
    if (id[r] < 0) {
      id[r] = static_cast<Index>(groups.size());
      groups.emplace_back();
    }
    groups[id[r]].push_back(members[a]);
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

} // namespace

SlodSpace build_space(const SpatialNetwork& net, const EdgeWeights& w,
                      const ElementPartition& part, int ell, const BuildOptions& options) {
  w.validate(net);
  const auto& mesh = part.mesh();
  const Index ne = mesh.num_elements();
  const SparseOperator K = assemble_weighted(net, w);

  SlodSpace space;
  space.H = mesh.H();
  space.dimension = mesh.dimension();
  space.order = ell;
  space.node_mass = part.node_mass();
  space.basis.resize(ne);

  std::vector<Index> ties;
  for (Index t = 0; t < ne; ++t) {
    PatchProblem pp(net, w, K, part, make_patch(part, net, t, ell), options.solver);
    const auto sel = select_rhs(pp.pencil(), options.policy);
    auto& b = space.basis[t];
    b.element = t;
    b.order = ell;
    b.elements = pp.patch().elements;
    b.g = sel.g;
    b.sigma = sel.sigma;
    b.phi = to_sparse(pp.combine_phi(sel.g));
    b.sigma_recomputed = pp.response(sel.g).sigma;
    if (sel.tie) ties.push_back(t);
  }

  // group bookkeeping: owner[t] indexes `groups`, generation counts re-involvement
  std::vector<Index> owner(ne, -1);
  std::vector<std::vector<Index>> groups;
  std::vector<int> generation;
  auto solve_group = [&](const std::vector<Index>& members) {
    std::vector<Index> elems;
    for (Index t : members) {
      const auto p = mesh.patch_elements(t, ell);
      elems.insert(elems.end(), p.begin(), p.end());
    }
    PatchProblem pp(net, w, K, part, make_patch_from_elements(part, net, std::move(elems)),
                    options.solver);
    const Index k = static_cast<Index>(members.size());
    const auto pairs = smallest_generalized_eigenpairs(pp.pencil(), k);
    for (Index r = 0; r < k; ++r) {
      auto& b = space.basis[members[r]];
      Eigen::VectorXd g = pairs.vectors.col(r);
      canonicalize_sign(g);
      b.elements = pp.patch().elements;
      b.g = g;
      b.sigma = std::sqrt(std::max(pairs.values[r], 0.0));
      b.phi = to_sparse(pp.combine_phi(g));
      b.sigma_recomputed = pp.response(g).sigma;
    }
  };
  auto add_group = [&](std::vector<Index> members, int gen) {
    const Index id = static_cast<Index>(groups.size());
    for (Index t : members) owner[t] = id;
    groups.push_back(std::move(members));
    generation.push_back(gen);
  };

  if (options.policy.enabled && options.policy.boundary_groups) {
    // elements closer than ell layers to the boundary join the element ell layers in
    const int n = mesh.per_axis();
    std::vector<std::vector<Index>> by_anchor(ne);
    for (Index t = 0; t < ne; ++t) {
      MultiIndex a = mesh.multi(t);
      for (int k = 0; k < mesh.dimension(); ++k)
        a[k] = std::clamp(a[k], std::min(ell, n - 1), std::max(n - 1 - ell, 0));
      by_anchor[mesh.linear(a)].push_back(t);
    }
    for (auto& members : by_anchor) {
      if (members.size() < 2) continue;
      solve_group(members);
      add_group(std::move(members), 0);
    }
  }

  std::vector<Index> pending = options.policy.enabled ? ties : std::vector<Index>{};
  for (int round = 1;; ++round) {
    space.gram = gram_matrix(space.basis, part);
    std::tie(space.gram_min, space.gram_max) = extremal_eigenvalues(space.gram);
    const bool stable = space.gram_min >= options.policy.riesz_floor * space.gram_max;
    if (!options.policy.enabled) break;
    if (stable && pending.empty()) break;
    if (round > options.policy.max_rounds)
      throw RieszError("coarse basis is not Riesz stable after " +
                       std::to_string(options.policy.max_rounds) +
                       " stabilization rounds: lambda_min(G) = " + std::to_string(space.gram_min));
    space.rounds = round;

    std::vector<bool> hot(ne, false);
    for (Index t : pending) hot[t] = true;
    pending.clear();
    if (!stable) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(space.gram);
      const double cut = options.policy.riesz_floor * space.gram_max;
      for (Index k = 0; k < es.eigenvalues().size() && es.eigenvalues()[k] < cut; ++k) {
        const Eigen::VectorXd v = es.eigenvectors().col(k).cwiseAbs();
        const double vmax = v.maxCoeff();
        for (Index i = 0; i < v.size(); ++i)
          if (v[i] > 0.1 * vmax) hot[i] = true;
      }
    }

    // hot elements plus the groups they belong to; repeat offenders grow by a layer
    std::vector<Index> candidates;
    std::vector<bool> dissolved(groups.size(), false);
    int gen = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const bool involved =
          std::any_of(groups[g].begin(), groups[g].end(), [&](Index t) { return hot[t]; });
      if (!involved) continue;
      const auto add = generation[g] > 0 ? mesh.grow(groups[g]) : groups[g];
      candidates.insert(candidates.end(), add.begin(), add.end());
      gen = std::max(gen, generation[g]);
    }
    for (Index t = 0; t < ne; ++t)
      if (hot[t]) candidates.push_back(t);
    // absorb every group touched by a candidate
    for (bool changed = true; changed;) {
      changed = false;
      for (Index t : std::vector<Index>(candidates)) {
        const Index g = owner[t];
        if (g < 0 || dissolved[g]) continue;
        dissolved[g] = true;
        changed = true;
        candidates.insert(candidates.end(), groups[g].begin(), groups[g].end());
        gen = std::max(gen, generation[g]);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<std::vector<Index>> kept;
    std::vector<int> kept_gen;
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (!dissolved[g]) {
        kept.push_back(std::move(groups[g]));
        kept_gen.push_back(generation[g]);
      }
    groups.clear();
    generation.clear();
    std::fill(owner.begin(), owner.end(), -1);
    for (std::size_t g = 0; g < kept.size(); ++g) add_group(std::move(kept[g]), kept_gen[g]);

    bool progress = false;
    for (auto& members : cluster(mesh, candidates, 1)) {
      if (members.size() < 2) continue;
      solve_group(members);
      add_group(std::move(members), gen + 1);
      progress = true;
    }
    if (!progress && !stable)
      throw RieszError("coarse basis is not Riesz stable and no element can be regrouped");
  }

  for (auto& b : space.basis) b.group = -1;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Index t : groups[g]) space.basis[t].group = static_cast<Index>(g);
  space.groups = std::move(groups);

  space.riesz_constant = space.gram_min > 0.0
                             ? std::max(space.gram_max, 1.0 / space.gram_min)
                             : std::numeric_limits<double>::infinity();
  std::vector<SparseNodal> phis;
  phis.reserve(space.basis.size());
  for (const auto& b : space.basis) phis.push_back(b.phi);
  space.stiffness = coarse_stiffness(phis, K);
  return space;
}

// Galerkin ---------------------------------------------------------------------------------

Eigen::MatrixXd coarse_stiffness(std::span<const SparseNodal> phis, const SparseOperator& K) {
  const Index M = static_cast<Index>(phis.size());
  const Index n = K.size();
  std::vector<std::vector<std::pair<Index, double>>> touching(n);
  for (Index j = 0; j < M; ++j)
    for (SparseNodal::InnerIterator it(phis[j]); it; ++it)
      touching[it.index()].emplace_back(j, it.value());

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < M; ++i) {
    for (SparseNodal::InnerIterator it(phis[i]); it; ++it) dense[it.index()] = it.value();
    const Eigen::VectorXd y = K.matrix * dense;
    for (SparseNodal::InnerIterator it(phis[i]); it; ++it) dense[it.index()] = 0.0;
    for (Index x = 0; x < n; ++x) {
      if (y[x] == 0.0) continue;
      for (const auto& [j, v] : touching[x]) S(i, j) += v * y[x];
    }
  }
  return 0.5 * (S + S.transpose());
}

GalerkinResult galerkin_solve(std::span<const SparseNodal> phis, const Eigen::MatrixXd& stiffness,
                              const Eigen::VectorXd& node_mass, const NodalFunction& f) {
  const Index M = static_cast<Index>(phis.size());
  if (f.size() != node_mass.size()) throw AssemblyError("load has wrong dimension");
  Eigen::VectorXd rhs(M);
  for (Index i = 0; i < M; ++i) {
    double s = 0.0;
    for (SparseNodal::InnerIterator it(phis[i]); it; ++it)
      s += it.value() * node_mass[it.index()] * f[it.index()];
    rhs[i] = s;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(stiffness);
  if (llt.info() != Eigen::Success) throw SolverError("coarse stiffness matrix is not SPD");
  GalerkinResult out;
  out.coefficients = llt.solve(rhs);
  out.u = NodalFunction::Zero(f.size());
  for (Index i = 0; i < M; ++i)
    for (SparseNodal::InnerIterator it(phis[i]); it; ++it)
      out.u[it.index()] += out.coefficients[i] * it.value();
  return out;
}

GalerkinResult galerkin_solve(const SlodSpace& space, const NodalFunction& f) {
  std::vector<SparseNodal> phis;
  phis.reserve(space.basis.size());
  for (const auto& b : space.basis) phis.push_back(b.phi);
  return galerkin_solve(phis, space.stiffness, space.node_mass, f);
}

double estimator(const SlodSpace& space) {
  return std::sqrt(space.riesz_constant) * std::pow(static_cast<double>(space.order),
                                                    0.5 * space.dimension) *
         space.sigma_max();
}

NodalFunction prototypical_solve(const SpatialNetwork& net, const EdgeWeights& w,
                                 const ElementPartition& part, const NodalFunction& f,
                                 std::span<const Index> element_order) {
  const Index ne = part.mesh().num_elements();
  std::vector<Index> order(element_order.begin(), element_order.end());
  if (order.empty()) {
    order.resize(ne);
    std::iota(order.begin(), order.end(), 0);
  }
  const SparseOperator K = assemble_weighted(net, w);
  const std::vector<bool> all(net.num_nodes(), true);
  const DirichletSolver solver(K, free_nodes(net, all));
  const auto& free = solver.free();
  const auto& m = part.node_mass();
  std::vector<Index> pos(net.num_nodes(), -1);
  for (std::size_t k = 0; k < free.size(); ++k) pos[free[k]] = static_cast<Index>(k);

  const Index nf = static_cast<Index>(free.size());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf, static_cast<Index>(order.size()));
  for (std::size_t c = 0; c < order.size(); ++c)
    for (Index x : part.nodes_of(order[c]))
      if (pos[x] >= 0) rhs(pos[x], static_cast<Index>(c)) = m[x];
  const Eigen::MatrixXd Psi = solver.solve_compact(rhs);
  const Eigen::MatrixXd S = Psi.transpose() * (solver.matrix() * Psi);
  Eigen::VectorXd mf(nf);
  for (Index k = 0; k < nf; ++k) mf[k] = m[free[k]] * f[free[k]];
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success)
    throw SolverError("prototypical coarse matrix is not SPD; some element carries no free node");
  const Eigen::VectorXd c = llt.solve(Psi.transpose() * mf);
  const Eigen::VectorXd uc = Psi * c;
  NodalFunction u = NodalFunction::Zero(net.num_nodes());
  for (Index k = 0; k < nf; ++k) u[free[k]] = uc[k];
  return u;
}

NodalFunction fine_solve(const SpatialNetwork& net, const EdgeWeights& w, const NodalFunction& f,
                         double tol) {
  const SparseOperator K = assemble_weighted(net, w);
  const std::vector<bool> all(net.num_nodes(), true);
  SolverOptions opt;
  opt.tol = tol;
  const DirichletSolver solver(K, free_nodes(net, all), opt);
  return solver.solve(mass_diagonal(net).cwiseProduct(f));
}

double relative_l_error(const SpatialNetwork& net, const NodalFunction& u, const NodalFunction& v) {
  const double den = laplacian_form(net, u);
  if (!(den > 0.0)) throw SolverError("reference solution has zero energy");
  return std::sqrt(laplacian_form(net, u - v) / den);
}

std::string basis_to_json(const SlodSpace& space) {
  nlohmann::json out;
  out["H"] = space.H;
  out["order"] = space.order;
  out["riesz_constant"] = space.riesz_constant;
  out["gram_min"] = space.gram_min;
  out["gram_max"] = space.gram_max;
  auto& arr = out["basis"] = nlohmann::json::array();
  for (const auto& b : space.basis) {
    nlohmann::json j;
    j["element"] = b.element;
    j["patch"] = b.elements;
    j["g"] = std::vector<double>(b.g.data(), b.g.data() + b.g.size());
    j["sigma"] = b.sigma;
    j["group"] = b.group;
    arr.push_back(std::move(j));
  }
  return out.dump(1);
}

} // namespace slodnet
