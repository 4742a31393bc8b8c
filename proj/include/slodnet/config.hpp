#pragma once

#include "slodnet/network.hpp"
#include "slodnet/operators.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace slodnet {

enum class RhsKind { One, SinProduct, File };

struct NetworkSource {
  bool from_file = false;
  std::filesystem::path file;
  FiberGenConfig generate;
};

struct WeightModel {
  bool uniform = true; ///< false: gamma = 1
  double lo = 0.01;
  double hi = 1.0;
  std::uint64_t seed = 2;
  std::vector<Corridor> channels;
  double channel_value = 1e4;
};

struct ExperimentConfig {
  std::string experiment;
  NetworkSource network;
  WeightModel weights;
  std::vector<int> levels{1, 2, 3, 4}; ///< H = 2^-level
  std::vector<int> ell{1, 2, 3};
  RhsKind rhs = RhsKind::One;
  std::filesystem::path rhs_file;
  double tol = 1e-12;
  std::filesystem::path out = "results";
  std::vector<std::string> methods{"slod", "lod"};
  int sigma_level = 3;
  Index sigma_element = -1; ///< -1: element nearest the center
  bool stabilize = true;

  std::vector<double> mesh_sizes() const;
  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Three straight corridors of width 0.02, not aligned with any Cartesian mesh.
std::vector<Corridor> default_channels();

/// Flat "section.key" -> raw value map of TOML-like text.
std::map<std::string, std::string> parse_key_values(const std::string& text);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "desk" keeps the configured network; "paper" switches to 20000 lines of length 0.05.
void apply_scale(ExperimentConfig& cfg, const std::string& scale);
/// Seeds the network with `seed` and the weights with `seed + 1`.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

} // namespace slodnet
