#include "slodnet/error.hpp"
#include "slodnet/network.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace slodnet {

namespace {

constexpr int kFormatVersion = 1;
constexpr char kMagic[8] = {'S', 'L', 'O', 'D', 'N', 'E', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary network format assumes a little-endian host");

template <class T> void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  template <class T> T get() {
    if (offset_ + sizeof(T) > bytes_.size())
      throw ParseError("binary network truncated at offset " + std::to_string(offset_));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }
  std::size_t offset() const { return offset_; }
  bool done() const { return offset_ == bytes_.size(); }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

/// Checks the invariants a stored network must satisfy before construction.
void check_edges(const std::vector<Edge>& edges, std::size_t n, const char* where) {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    const std::string at = std::string(where) + "[" + std::to_string(e) + "]";
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
      throw ParseError(at + ": node id out of range");
    if (a == b) throw ParseError(at + ": self-loop");
    if (a > b) throw ParseError(at + ": edge stored as (" + std::to_string(a) + "," +
                                std::to_string(b) + "), expected ascending pair");
  }
  std::vector<Edge> sorted = edges;
  std::sort(sorted.begin(), sorted.end(),
            [](const Edge& x, const Edge& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParseError(std::string(where) + ": duplicate edge");
}

SpatialNetwork construct(int dim, std::vector<Point> pts, std::vector<Edge> edges,
                         std::vector<bool> dirichlet) {
  try {
    return SpatialNetwork(dim, std::move(pts), std::move(edges), std::move(dirichlet));
  } catch (const AssemblyError& e) {
    throw ParseError(std::string("invalid network: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::string network_to_json(const SpatialNetwork& net) {
  using nlohmann::json;
  json j;
  j["version"] = kFormatVersion;
  j["dimension"] = net.dimension();
  json nodes = json::array();
  for (const auto& p : net.points()) {
    json c = json::array();
    for (int k = 0; k < net.dimension(); ++k) c.push_back(p[k]);
    nodes.push_back(std::move(c));
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : net.edges()) edges.push_back({e.a, e.b});
  j["edges"] = std::move(edges);
  json dir = json::array();
  for (bool b : net.dirichlet()) dir.push_back(b);
  j["dirichlet"] = std::move(dir);
  return j.dump();
}

SpatialNetwork network_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("network JSON: " + std::string(e.what()) + " (byte " +
                     std::to_string(e.byte) + ")");
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion)
      throw ParseError("network JSON: unsupported version " + std::to_string(version));
    const int dim = j.at("dimension").get<int>();
    if (dim < 1 || dim > 3) throw ParseError("network JSON: dimension must be 1, 2 or 3");
    std::vector<Point> pts;
    const auto& nodes = j.at("nodes");
    pts.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& c = nodes[i];
      if (!c.is_array() || c.size() != static_cast<std::size_t>(dim))
        throw ParseError("network JSON: nodes[" + std::to_string(i) + "] must have " +
                         std::to_string(dim) + " coordinates");
      Point p{0.0, 0.0, 0.0};
      for (int k = 0; k < dim; ++k) p[k] = c[k].get<double>();
      pts.push_back(p);
    }
    std::vector<Edge> edges;
    const auto& ej = j.at("edges");
    for (std::size_t e = 0; e < ej.size(); ++e) {
      if (!ej[e].is_array() || ej[e].size() != 2)
        throw ParseError("network JSON: edges[" + std::to_string(e) + "] must be a pair");
      edges.push_back({ej[e][0].get<Index>(), ej[e][1].get<Index>()});
    }
    check_edges(edges, pts.size(), "edges");
    std::vector<bool> dirichlet;
    for (const auto& b : j.at("dirichlet")) dirichlet.push_back(b.get<bool>());
    if (dirichlet.size() != pts.size())
      throw ParseError("network JSON: dirichlet mask has " + std::to_string(dirichlet.size()) +
                       " entries for " + std::to_string(pts.size()) + " nodes");
    return construct(dim, std::move(pts), std::move(edges), std::move(dirichlet));
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
}

std::vector<std::uint8_t> canonical_bytes(const SpatialNetwork& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.dimension()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(net.num_nodes()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(net.num_edges()));
  for (const auto& p : net.points())
    for (int k = 0; k < net.dimension(); ++k) put<double>(out, p[k]);
  for (const auto& e : net.edges()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.a));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.b));
  }
  for (bool b : net.dirichlet()) put<std::uint8_t>(out, b ? 1 : 0);
  return out;
}

SpatialNetwork network_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ParseError("binary network: bad magic at offset 0");
  Reader r(bytes.subspan(sizeof(kMagic)));
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion)
    throw ParseError("binary network: unsupported version " + std::to_string(version));
  const auto dim = static_cast<int>(r.get<std::uint32_t>());
  if (dim < 1 || dim > 3) throw ParseError("binary network: bad dimension");
  const auto n = r.get<std::uint64_t>();
  const auto m = r.get<std::uint64_t>();
  const std::size_t need = n * dim * 8 + m * 8 + n;
  if (bytes.size() - sizeof(kMagic) - r.offset() != need)
    throw ParseError("binary network: payload size mismatch at offset " +
                     std::to_string(sizeof(kMagic) + r.offset()));
  std::vector<Point> pts(n, Point{0.0, 0.0, 0.0});
  for (auto& p : pts)
    for (int k = 0; k < dim; ++k) p[k] = r.get<double>();
  std::vector<Edge> edges(m);
  for (auto& e : edges) {
    e.a = static_cast<Index>(r.get<std::uint32_t>());
    e.b = static_cast<Index>(r.get<std::uint32_t>());
  }
  check_edges(edges, n, "edge");
  std::vector<bool> dirichlet(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = r.get<std::uint8_t>();
    if (b > 1) throw ParseError("binary network: bad dirichlet flag for node " + std::to_string(i));
    dirichlet[i] = b == 1;
  }
  return construct(dim, std::move(pts), std::move(edges), std::move(dirichlet));
}

std::string canonical_sha256(const SpatialNetwork& net) {
  const auto bytes = canonical_bytes(net);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

void save_network_json(const SpatialNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << network_to_json(net) << '\n';
}

void save_network_binary(const SpatialNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto bytes = canonical_bytes(net);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void save_network(const SpatialNetwork& net, const std::filesystem::path& path) {
  if (path.extension() == ".json")
    save_network_json(net, path);
  else
    save_network_binary(net, path);
}

SpatialNetwork load_network(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() >= sizeof(kMagic) && std::memcmp(data.data(), kMagic, sizeof(kMagic)) == 0)
    return network_from_bytes(
        {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
  return network_from_json(data);
}

} // namespace slodnet
