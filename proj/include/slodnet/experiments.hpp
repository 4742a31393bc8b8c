#pragma once

#include "slodnet/config.hpp"
#include "slodnet/mesh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace slodnet {

struct ResultRow {
  std::string experiment;
  double H = 0.0;
  int ell = 0;
  std::string method;
  Index element = -1;
  std::string metric;
  double value = 0.0;
  double wall_time = 0.0; ///< seconds; logged, never written to the CSV
};

struct Problem {
  SpatialNetwork net;
  EdgeWeights weights;
};

Problem make_problem(const ExperimentConfig& cfg);
NodalFunction make_rhs(const ExperimentConfig& cfg, const SpatialNetwork& net);

std::vector<ResultRow> run_poincare(const ExperimentConfig& cfg, const Problem& p);
std::vector<ResultRow> run_sigma_decay(const ExperimentConfig& cfg, const Problem& p);
std::vector<ResultRow> run_localization_error(const ExperimentConfig& cfg, const Problem& p);
std::vector<ResultRow> run_convergence(const ExperimentConfig& cfg, const Problem& p);
/// Also writes the SLOD solution at the last (H, ell) to cfg.out/high-contrast-solution.csv.
std::vector<ResultRow> run_high_contrast(const ExperimentConfig& cfg, const Problem& p);

/// True when some patch of order ell is the whole mesh.
bool patch_saturates(const CartesianMesh& mesh, int ell);
/// Element whose center is nearest (0.5, ..., 0.5), lowest id on ties.
Index central_element(const CartesianMesh& mesh);

inline constexpr int kCsvSchemaVersion = 1;
std::string format_double(double v);
std::string to_csv(const std::vector<ResultRow>& rows);
std::string to_json(const std::vector<ResultRow>& rows);
void write_results(const std::filesystem::path& dir, const std::string& name,
                   const std::vector<ResultRow>& rows);

/// Rows with the given experiment/metric/method, in order.
std::vector<ResultRow> select(const std::vector<ResultRow>& rows, const std::string& metric,
                              const std::string& method = "");

} // namespace slodnet
