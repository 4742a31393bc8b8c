#include "slodnet/config.hpp"

#include "slodnet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slodnet {

namespace {

std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
  return s;
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<std::string> list(const std::string& key, std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError(key + ": unterminated list");
    v = v.substr(1, v.size() - 2);
  }
  auto items = split(v, ',');
  for (auto& s : items) s = unquote(s);
  return items;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<Corridor> parse_channels(const std::string& key, const std::string& v, double width) {
  std::vector<Corridor> out;
  for (const auto& poly : split(unquote(v), ';')) {
    Corridor c;
    c.width = width;
    std::istringstream in(poly);
    std::vector<double> xs;
    std::string tok;
    while (in >> tok) xs.push_back(to_double(key, tok));
    if (xs.size() < 4 || xs.size() % 2)
      throw ConfigError(key + ": each channel needs at least two x y pairs");
    for (std::size_t k = 0; k < xs.size(); k += 2) c.polyline.push_back({xs[k], xs[k + 1], 0.0});
    out.push_back(std::move(c));
  }
  return out;
}

} // namespace

std::vector<double> ExperimentConfig::mesh_sizes() const {
  std::vector<double> out;
  for (int k : levels) out.push_back(std::ldexp(1.0, -k));
  return out;
}

void ExperimentConfig::validate() const {
  if (levels.empty()) throw ConfigError("mesh.levels must not be empty");
  for (int k : levels)
    if (k < 0 || k > 12) throw ConfigError("mesh.levels entries must lie in [0, 12]");
  if (ell.empty()) throw ConfigError("mesh.ell must not be empty");
  for (int l : ell)
    if (l < 1) throw ConfigError("mesh.ell entries must be at least 1");
  if (!network.from_file) {
    const auto& g = network.generate;
    if (g.n_lines < 1) throw ConfigError("network.lines must be at least 1");
    if (!(g.line_length > 0.0)) throw ConfigError("network.length must be positive");
    if (!(g.margin >= 0.0)) throw ConfigError("network.margin must be non-negative");
  }
  if (weights.uniform && !(weights.lo > 0.0 && weights.lo <= weights.hi))
    throw ConfigError("weights need 0 < lo <= hi");
  if (!weights.channels.empty() && !(weights.channel_value > 0.0))
    throw ConfigError("weights.channel_value must be positive");
  for (const auto& m : methods)
    if (m != "slod" && m != "lod") throw ConfigError("unknown method '" + m + "'");
  if (rhs == RhsKind::File && rhs_file.empty()) throw ConfigError("rhs.kind = file needs rhs.file");
  if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
}

std::vector<Corridor> default_channels() {
  const double w = 0.02;
  return {
      Corridor{{{0.0, 0.23, 0.0}, {1.0, 0.61, 0.0}}, w},
      Corridor{{{0.17, 1.0, 0.0}, {0.58, 0.0, 0.0}}, w},
      Corridor{{{0.0, 0.86, 0.0}, {1.0, 0.71, 0.0}}, w},
  };
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (out.count(key)) throw ConfigError("duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  auto kv = parse_key_values(text);
  ExperimentConfig cfg;
  double width = 0.02;
  if (auto it = kv.find("weights.channel_width"); it != kv.end()) {
    width = to_double(it->first, it->second);
    if (!(width > 0.0)) throw ConfigError("weights.channel_width must be positive");
    kv.erase(it);
  }
  for (const auto& [key, raw] : kv) {
    const std::string v = unquote(raw);
    if (key == "experiment") cfg.experiment = v;
    else if (key == "network.source") {
      if (v != "generate" && v != "file") throw ConfigError("network.source must be generate or file");
      cfg.network.from_file = v == "file";
    } else if (key == "network.file") cfg.network.file = v;
    else if (key == "network.lines") cfg.network.generate.n_lines = to_int(key, v);
    else if (key == "network.length") cfg.network.generate.line_length = to_double(key, v);
    else if (key == "network.margin") cfg.network.generate.margin = to_double(key, v);
    else if (key == "network.seed") cfg.network.generate.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "weights.model") {
      if (v != "uniform" && v != "unit") throw ConfigError("weights.model must be uniform or unit");
      cfg.weights.uniform = v == "uniform";
    } else if (key == "weights.lo") cfg.weights.lo = to_double(key, v);
    else if (key == "weights.hi") cfg.weights.hi = to_double(key, v);
    else if (key == "weights.seed") cfg.weights.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "weights.channel_value") cfg.weights.channel_value = to_double(key, v);
    else if (key == "weights.channels") {
      if (v == "none") cfg.weights.channels.clear();
      else if (v == "default") {
        cfg.weights.channels = default_channels();
        for (auto& c : cfg.weights.channels) c.width = width;
      } else cfg.weights.channels = parse_channels(key, v, width);
    } else if (key == "mesh.levels") {
      cfg.levels.clear();
      for (const auto& s : list(key, raw)) cfg.levels.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "mesh.ell") {
      cfg.ell.clear();
      for (const auto& s : list(key, raw)) cfg.ell.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "rhs.kind") {
      if (v == "one") cfg.rhs = RhsKind::One;
      else if (v == "sin") cfg.rhs = RhsKind::SinProduct;
      else if (v == "file") cfg.rhs = RhsKind::File;
      else throw ConfigError("rhs.kind must be one, sin or file");
    } else if (key == "rhs.file") cfg.rhs_file = v;
    else if (key == "solver.tol") cfg.tol = to_double(key, v);
    else if (key == "output.dir") cfg.out = v;
    else if (key == "methods") cfg.methods = list(key, raw);
    else if (key == "sigma.level") cfg.sigma_level = static_cast<int>(to_int(key, v));
    else if (key == "sigma.element") cfg.sigma_element = static_cast<Index>(to_int(key, v));
    else if (key == "stabilize") cfg.stabilize = to_bool(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  if (cfg.network.from_file && cfg.network.file.is_relative())
    cfg.network.file = path.parent_path() / cfg.network.file;
  if (cfg.rhs == RhsKind::File && cfg.rhs_file.is_relative())
    cfg.rhs_file = path.parent_path() / cfg.rhs_file;
  return cfg;
}

void apply_scale(ExperimentConfig& cfg, const std::string& scale) {
  if (scale == "desk") return;
  if (scale != "paper") throw ConfigError("scale must be desk or paper");
  cfg.network.from_file = false;
  cfg.network.generate.n_lines = 20000;
  cfg.network.generate.line_length = 0.05;
  cfg.network.generate.margin = 0.025;
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.network.generate.seed = seed;
  cfg.weights.seed = seed + 1;
}

} // namespace slodnet
