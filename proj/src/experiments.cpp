#include "slodnet/experiments.hpp"

#include "slodnet/error.hpp"
#include "slodnet/lod.hpp"
#include "slodnet/slod.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace slodnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct RowSink {
  std::string experiment;
  std::vector<ResultRow> rows;

  void add(double H, int ell, const std::string& method, Index element, const std::string& metric,
           double value, double wall = 0.0) {
    rows.push_back({experiment, H, ell, method, element, metric, value, wall});
  }
};

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

Problem make_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  SpatialNetwork net = cfg.network.from_file ? load_network(cfg.network.file)
                                             : generate_fiber_network(cfg.network.generate);
  EdgeWeights w = cfg.weights.uniform
                      ? sample_uniform_weights(net, cfg.weights.lo, cfg.weights.hi, cfg.weights.seed)
                      : unit_weights(net);
  if (!cfg.weights.channels.empty())
    w = apply_channels(net, w, cfg.weights.channels, cfg.weights.channel_value);
  return {std::move(net), std::move(w)};
}

NodalFunction make_rhs(const ExperimentConfig& cfg, const SpatialNetwork& net) {
  NodalFunction f(net.num_nodes());
  switch (cfg.rhs) {
  case RhsKind::One:
    f.setOnes();
    break;
  case RhsKind::SinProduct:
    for (Index i = 0; i < net.num_nodes(); ++i) {
      const auto& p = net.point(i);
      double v = 1.0;
      for (int k = 0; k < net.dimension(); ++k) v *= std::sin(p[k]);
      f[i] = v;
    }
    break;
  case RhsKind::File: {
    std::ifstream in(cfg.rhs_file);
    if (!in) throw ConfigError("cannot read rhs file " + cfg.rhs_file.string());
    for (Index i = 0; i < net.num_nodes(); ++i)
      if (!(in >> f[i])) throw ConfigError("rhs file has fewer values than nodes");
    double extra;
    if (in >> extra) throw ConfigError("rhs file has more values than nodes");
    break;
  }
  }
  return f;
}

bool patch_saturates(const CartesianMesh& mesh, int ell) {
  return 2 * ell + 1 >= mesh.per_axis();
}

Index central_element(const CartesianMesh& mesh) {
  MultiIndex m{0, 0, 0};
  for (int k = 0; k < mesh.dimension(); ++k) m[k] = (mesh.per_axis() - 1) / 2;
  return mesh.linear(m);
}

// Experiments -------------------------------------------------------------------------

std::vector<ResultRow> run_poincare(const ExperimentConfig& cfg, const Problem& p) {
  RowSink out{"poincare", {}};
  for (double H : cfg.mesh_sizes()) {
    const auto t0 = Clock::now();
    const CartesianMesh mesh(H, p.net.dimension());
    const ElementPartition part(mesh, p.net);
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    Index passed = 0, failed = 0;
    for (Index t = 0; t < mesh.num_elements(); ++t) {
      ConnectivityReport rep;
      poincare_subgraph(part, p.net, t, &rep);
      if (!rep.passes || rep.subgraph_nodes < 2) {
        ++failed;
        continue;
      }
      const double c = 1.0 / std::sqrt(poincare_lambda2(part, p.net, t));
      out.add(H, 0, "", t, "c_po", c);
      sum += c;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      ++passed;
    }
    const double wall = seconds_since(t0);
    out.add(H, 0, "", -1, "failed", static_cast<double>(failed), wall);
    if (passed > 0) {
      out.add(H, 0, "", -1, "mean", sum / passed, wall);
      out.add(H, 0, "", -1, "min", lo, wall);
      out.add(H, 0, "", -1, "max", hi, wall);
      out.add(H, 0, "", -1, "spread", hi / lo, wall);
    }
  }
  return std::move(out.rows);
}

std::vector<ResultRow> run_sigma_decay(const ExperimentConfig& cfg, const Problem& p) {
  RowSink out{"sigma-decay", {}};
  const double H = std::ldexp(1.0, -cfg.sigma_level);
  const CartesianMesh mesh(H, p.net.dimension());
  const ElementPartition part(mesh, p.net);
  const Index t = cfg.sigma_element >= 0 ? cfg.sigma_element : central_element(mesh);
  if (t >= mesh.num_elements()) throw ConfigError("sigma.element out of range");
  const SparseOperator K = assemble_weighted(p.net, p.weights);
  SolverOptions opt;
  opt.tol = cfg.tol;
  StabilizationPolicy policy;
  for (int ell : cfg.ell) {
    const auto t0 = Clock::now();
    PatchProblem pp(p.net, p.weights, K, part, make_patch(part, p.net, t, ell), opt);
    const auto sel = select_rhs(pp.pencil(), policy);
    const double check = pp.response(sel.g).sigma;
    const double wall = seconds_since(t0);
    for (Index i = 0; i < sel.spectrum.size(); ++i)
      out.add(H, ell, "slod", t, "sqrt_lambda_" + std::to_string(i),
              std::sqrt(std::max(sel.spectrum[i], 0.0)), wall);
    out.add(H, ell, "slod", t, "sigma", sel.sigma, wall);
    out.add(H, ell, "slod", t, "sigma_recomputed", check, wall);
    out.add(H, ell, "slod", t, "condition", sel.condition, wall);
    out.add(H, ell, "slod", t, "ill_conditioned", sel.ill_conditioned ? 1.0 : 0.0, wall);
    out.add(H, ell, "slod", t, "tie", sel.tie ? 1.0 : 0.0, wall);
    out.add(H, ell, "slod", t, "saturated", pp.patch().whole ? 1.0 : 0.0, wall);
  }
  return std::move(out.rows);
}

namespace {

void sweep(RowSink& out, const ExperimentConfig& cfg, const Problem& p, const NodalFunction& f) {
  const NodalFunction u = fine_solve(p.net, p.weights, f, cfg.tol);
  SolverOptions opt;
  opt.tol = cfg.tol;
  BuildOptions build;
  build.solver = opt;
  build.policy.enabled = cfg.stabilize;
  for (double H : cfg.mesh_sizes()) {
    const CartesianMesh mesh(H, p.net.dimension());
    const ElementPartition part(mesh, p.net);
    for (int ell : cfg.ell) {
      for (const auto& method : cfg.methods) {
        const auto t0 = Clock::now();
        if (method == "slod") {
          const SlodSpace space = build_space(p.net, p.weights, part, ell, build);
          const NodalFunction uh = galerkin_solve(space, f).u;
          const double wall = seconds_since(t0);
          double consistency = 0.0;
          for (const auto& b : space.basis)
            consistency = std::max(consistency, sigma_mismatch(b));
          out.add(H, ell, method, -1, "error", relative_l_error(p.net, u, uh), wall);
          out.add(H, ell, method, -1, "estimator", estimator(space), wall);
          out.add(H, ell, method, -1, "sigma", space.sigma_max(), wall);
          out.add(H, ell, method, -1, "riesz_constant", space.riesz_constant, wall);
          out.add(H, ell, method, -1, "sigma_consistency", consistency, wall);
          out.add(H, ell, method, -1, "groups", static_cast<double>(space.groups.size()), wall);
        } else {
          const auto basis = build_lod_space(p.net, p.weights, part, ell, opt);
          const NodalFunction uh = lod_galerkin_solve(p.net, p.weights, basis, f);
          const double wall = seconds_since(t0);
          double residual = 0.0;
          for (const auto& b : basis) residual = std::max(residual, b.constraint_residual);
          out.add(H, ell, method, -1, "error", relative_l_error(p.net, u, uh), wall);
          out.add(H, ell, method, -1, "constraint_residual", residual, wall);
        }
      }
    }
  }
}

} // namespace

std::vector<ResultRow> run_localization_error(const ExperimentConfig& cfg, const Problem& p) {
  RowSink out{"localization-error", {}};
  sweep(out, cfg, p, make_rhs(cfg, p.net));
  return std::move(out.rows);
}

std::vector<ResultRow> run_convergence(const ExperimentConfig& cfg, const Problem& p) {
  RowSink out{"convergence", {}};
  sweep(out, cfg, p, make_rhs(cfg, p.net));
  auto errors = select(out.rows, "error");
  for (const auto& method : cfg.methods) {
    for (int ell : cfg.ell) {
      const ResultRow* prev = nullptr;
      for (const auto& r : errors) {
        if (r.method != method || r.ell != ell) continue;
        if (prev && prev->value > 0.0 && r.value > 0.0)
          out.add(r.H, ell, method, -1, "rate",
                  std::log(prev->value / r.value) / std::log(prev->H / r.H));
        prev = &r;
      }
    }
    // largest ell per H
    std::vector<double> lx, ly;
    for (double H : cfg.mesh_sizes()) {
      const ResultRow* best = nullptr;
      for (const auto& r : errors)
        if (r.method == method && r.H == H && (!best || r.ell > best->ell)) best = &r;
      if (!best) continue;
      out.add(H, best->ell, method, -1, "max_ell_error", best->value);
      if (best->value > 0.0) {
        lx.push_back(std::log(H));
        ly.push_back(std::log(best->value));
      }
    }
    if (lx.size() >= 2) out.add(0.0, 0, method, -1, "max_ell_slope", least_squares_slope(lx, ly));
  }
  return std::move(out.rows);
}

std::vector<ResultRow> run_high_contrast(const ExperimentConfig& cfg, const Problem& p) {
  RowSink out{"high-contrast", {}};
  const NodalFunction f = make_rhs(cfg, p.net);
  out.add(0.0, 0, "", -1, "contrast", p.weights.contrast());
  sweep(out, cfg, p, f);
  const auto errors = select(out.rows, "error");
  for (const auto& s : errors) {
    if (s.method != "slod") continue;
    for (const auto& l : errors)
      if (l.method == "lod" && l.H == s.H && l.ell == s.ell && s.value > 0.0)
        out.add(s.H, s.ell, "", -1, "lod_slod_ratio", l.value / s.value);
  }

  const double H = cfg.mesh_sizes().back();
  const int ell = cfg.ell.back();
  const CartesianMesh mesh(H, p.net.dimension());
  const ElementPartition part(mesh, p.net);
  BuildOptions build;
  build.solver.tol = cfg.tol;
  build.policy.enabled = cfg.stabilize;
  const NodalFunction uh = galerkin_solve(build_space(p.net, p.weights, part, ell, build), f).u;
  std::filesystem::create_directories(cfg.out);
  std::ofstream dump(cfg.out / "high-contrast-solution.csv");
  if (!dump) throw Error("cannot write solution dump in " + cfg.out.string());
  dump << "node,x,y,u\n";
  for (Index i = 0; i < p.net.num_nodes(); ++i) {
    const auto& q = p.net.point(i);
    dump << i << ',' << format_double(q[0]) << ',' << format_double(q[1]) << ','
         << format_double(uh[i]) << '\n';
  }
  return std::move(out.rows);
}

// Output -------------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  s << "# slodnet results v" << kCsvSchemaVersion << '\n';
  s << "experiment,H,ell,method,element,metric,value\n";
  for (const auto& r : rows)
    s << r.experiment << ',' << format_double(r.H) << ',' << r.ell << ',' << r.method << ','
      << r.element << ',' << r.metric << ',' << format_double(r.value) << '\n';
  return s.str();
}

std::string to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json out;
  out["schema_version"] = kCsvSchemaVersion;
  auto& arr = out["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"experiment", r.experiment},
                   {"H", r.H},
                   {"ell", r.ell},
                   {"method", r.method},
                   {"element", r.element},
                   {"metric", r.metric},
                   {"value", std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json()}});
  return out.dump(1);
}

void write_results(const std::filesystem::path& dir, const std::string& name,
                   const std::vector<ResultRow>& rows) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& ext, const std::string& text) {
    std::ofstream f(dir / (name + ext), std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / (name + ext)).string());
    f << text;
  };
  write(".csv", to_csv(rows));
  write(".json", to_json(rows));
  std::ostringstream log;
  for (const auto& r : rows)
    if (r.wall_time > 0.0)
      log << r.experiment << " H=" << format_double(r.H) << " ell=" << r.ell << ' ' << r.method
          << ' ' << r.metric << " wall=" << r.wall_time << "s\n";
  write(".log", log.str());
}

std::vector<ResultRow> select(const std::vector<ResultRow>& rows, const std::string& metric,
                              const std::string& method) {
  std::vector<ResultRow> out;
  for (const auto& r : rows)
    if (r.metric == metric && (method.empty() || r.method == method)) out.push_back(r);
  return out;
}

} // namespace slodnet
