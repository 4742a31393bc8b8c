#include "slodnet/config.hpp"
#include "slodnet/error.hpp"
#include "slodnet/experiments.hpp"
#include "slodnet/network.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

} // namespace

int main(int argc, char** argv) {
  using namespace slodnet;
  CLI::App app{"SLOD on spatial networks"};
  app.require_subcommand(1);

  FiberGenConfig gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "generate a fiber network");
  generate->add_option("--lines", gen.n_lines, "number of lines")->default_val(gen.n_lines);
  generate->add_option("--length", gen.line_length, "line length")->default_val(gen.line_length);
  generate->add_option("--margin", gen.margin, "midpoint margin")->default_val(gen.margin);
  generate->add_option("--seed", gen.seed, "seed")->default_val(gen.seed);
  generate->add_option("--out", gen_out, "output file (.json or binary)")->required();

  std::string config, out_dir, method, scale = "desk";
  std::optional<std::uint64_t> seed;
  std::vector<CLI::App*> runs;
  for (const char* name :
       {"poincare", "sigma-decay", "localization-error", "convergence", "high-contrast"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config, "config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "network seed (weights use seed + 1)");
    sub->add_option("--method", method, "restrict to one method")
        ->check(CLI::IsMember({"slod", "lod"}));
    sub->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    runs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (generate->parsed()) {
      const SpatialNetwork net = generate_fiber_network(gen);
      save_network(net, gen_out);
      std::printf("nodes %d edges %d dirichlet %d sha256 %s\n", net.num_nodes(), net.num_edges(),
                  net.num_dirichlet(), canonical_sha256(net).c_str());
      return 0;
    }
    CLI::App* sub = nullptr;
    for (auto* s : runs)
      if (s->parsed()) sub = s;
    const std::string name = sub->get_name();

    ExperimentConfig cfg = load_config(config);
    if (!cfg.experiment.empty() && cfg.experiment != name)
      throw ConfigError("config is for experiment '" + cfg.experiment + "', not '" + name + "'");
    apply_scale(cfg, scale);
    if (seed) apply_seed(cfg, *seed);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!method.empty()) cfg.methods = {method};
    cfg.validate();

    const Problem p = make_problem(cfg);
    std::fprintf(stderr, "network: %d nodes, %d edges, %d Dirichlet\n", p.net.num_nodes(),
                 p.net.num_edges(), p.net.num_dirichlet());
    std::vector<ResultRow> rows;
    if (name == "poincare") rows = run_poincare(cfg, p);
    else if (name == "sigma-decay") rows = run_sigma_decay(cfg, p);
    else if (name == "localization-error") rows = run_localization_error(cfg, p);
    else if (name == "convergence") rows = run_convergence(cfg, p);
    else rows = run_high_contrast(cfg, p);
    write_results(cfg.out, name, rows);
    std::fprintf(stderr, "wrote %s\n", (cfg.out / (name + ".csv")).string().c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericalError;
  }
}
