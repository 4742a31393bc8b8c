#include "../fixtures.hpp"

#include "slodnet/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace slodnet;

TEST_SUITE("network") {

TEST_CASE("rng is reproducible and uniform on [0,1)") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    if (x != c.uniform()) differs = true;
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
  }
  CHECK(differs);
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("segment intersection") {
  Point p;
  const Segment d1{{0, 0, 0}, {1, 1, 0}}, d2{{0, 1, 0}, {1, 0, 0}};
  REQUIRE(intersect_segments(d1, d2, p));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  Point q;
  REQUIRE(intersect_segments(d2, d1, q));
  CHECK(p == q);

  const Segment par{{0, 0.1, 0}, {1, 1.1, 0}};
  CHECK_FALSE(intersect_segments(d1, par, p));
  const Segment apart{{0.1, 0.0, 0}, {0.3, 0.2, 0}};
  CHECK_FALSE(intersect_segments(d2, apart, p));
}

TEST_CASE("clipping to the unit square") {
  Segment inside{{0.2, 0.2, 0}, {0.4, 0.5, 0}};
  const Segment copy = inside;
  REQUIRE(clip_to_unit_square(inside));
  CHECK(inside.p == copy.p);
  CHECK(inside.q == copy.q);

  Segment outside{{1.2, 0.2, 0}, {1.4, 0.5, 0}};
  CHECK_FALSE(clip_to_unit_square(outside));

  Segment crossing{{-0.5, 0.5, 0}, {0.5, 0.5, 0}};
  REQUIRE(clip_to_unit_square(crossing));
  CHECK(std::min(crossing.p[0], crossing.q[0]) == doctest::Approx(0.0));
  CHECK(std::max(crossing.p[0], crossing.q[0]) == doctest::Approx(0.5));
}

TEST_CASE("two crossing diagonals") {
  const std::vector<Segment> segs{{{0, 0, 0}, {1, 1, 0}}, {{0, 1, 0}, {1, 0, 0}}};
  const auto net = build_segment_network(segs);
  CHECK(net.num_nodes() == 5);
  CHECK(net.num_edges() == 4);
  CHECK(net.num_dirichlet() == 4);
  CHECK(net.total_length() == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(net.is_connected());
}

TEST_CASE("structural invariants are enforced") {
  std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}, {0.5, 0.5, 0}};
  std::vector<bool> dir{true, true, false};
  CHECK_THROWS_AS(SpatialNetwork(2, pts, {{0, 0}}, dir), AssemblyError);
  CHECK_THROWS_AS(SpatialNetwork(2, pts, {{0, 2}, {2, 0}}, dir), AssemblyError);
  CHECK_THROWS_AS(SpatialNetwork(2, pts, {{0, 5}}, dir), AssemblyError);
  const SpatialNetwork split(2, pts, {{0, 1}}, dir);
  CHECK_THROWS_AS(split.validate(), AssemblyError);
  const SpatialNetwork ok(2, pts, {{0, 2}, {2, 1}}, dir);
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("hanging interior nodes are pruned") {
  // path 0-1-2 between two boundary nodes plus an interior spur 1-3-4
  std::vector<Point> pts{{0, 0.5, 0}, {0.5, 0.5, 0}, {1, 0.5, 0}, {0.5, 0.7, 0}, {0.5, 0.9, 0}};
  std::vector<bool> dir{true, false, true, false, false};
  const SpatialNetwork net(2, pts, {{0, 1}, {1, 2}, {1, 3}, {3, 4}}, dir);
  const auto pruned = remove_hanging_nodes(net);
  CHECK(pruned.num_nodes() == 3);
  CHECK(pruned.num_edges() == 2);
}

TEST_CASE("generated networks satisfy the generator contract") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto net = fixture::micro(seed);
    CHECK_NOTHROW(net.validate());
    for (Index i = 0; i < net.num_nodes(); ++i) {
      CHECK(net.is_dirichlet(i) == on_unit_cube_boundary(net.point(i), 2));
      if (!net.is_dirichlet(i)) CHECK(net.degree(i) >= 2);
      for (int k = 0; k < 2; ++k) {
        CHECK(net.point(i)[k] >= 0.0);
        CHECK(net.point(i)[k] <= 1.0);
      }
    }
    std::set<std::pair<Index, Index>> seen;
    for (const auto& e : net.edges()) {
      CHECK(e.a != e.b);
      CHECK(seen.insert({std::min(e.a, e.b), std::max(e.a, e.b)}).second);
    }
    for (double len : net.edge_lengths()) CHECK(len > 0.0);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = fixture::micro(5), b = fixture::micro(5), c = fixture::micro(6);
  CHECK(a == b);
  CHECK(canonical_sha256(a) == canonical_sha256(b));
  CHECK(canonical_sha256(a) != canonical_sha256(c));
}

TEST_CASE("persistence round trips") {
  const auto net = fixture::micro(3);
  CHECK(network_from_json(network_to_json(net)) == net);
  CHECK(network_from_bytes(canonical_bytes(net)) == net);

  const auto dir = std::filesystem::temp_directory_path() / "slodnet-test-network";
  std::filesystem::create_directories(dir);
  save_network(net, dir / "n.json");
  save_network(net, dir / "n.bin");
  CHECK(load_network(dir / "n.json") == net);
  CHECK(load_network(dir / "n.bin") == net);
  CHECK(canonical_sha256(load_network(dir / "n.bin")) == canonical_sha256(net));
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed input is rejected") {
  auto bytes = canonical_bytes(fixture::micro(3));
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(network_from_bytes(truncated), ParseError);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  CHECK_THROWS_AS(network_from_bytes(bad_magic), ParseError);
  CHECK_THROWS_AS(network_from_json("{"), ParseError);
  CHECK_THROWS_AS(network_from_json(R"({"version":1,"dimension":2,"nodes":[[0,0],[1,0]],)"
                                    R"("edges":[[0,0]],"dirichlet":[true,true]})"),
                  ParseError);
}

TEST_CASE("components and induced subnetworks") {
  std::vector<Point> pts{{0, 0, 0}, {0.5, 0, 0}, {0, 1, 0}, {0.5, 1, 0}, {1, 1, 0}};
  std::vector<bool> dir(5, true);
  const SpatialNetwork net(2, pts, {{0, 1}, {2, 3}, {3, 4}}, dir);
  std::vector<Index> label;
  CHECK(connected_components(net, label) == 2);
  CHECK(label[0] == label[1]);
  CHECK(label[2] == label[4]);
  const auto big = largest_connected_component(net);
  CHECK(big.num_nodes() == 3);
  CHECK(big.num_edges() == 2);
  const std::vector<Index> keep{2, 3};
  const auto sub = induced_subnetwork(net, keep);
  CHECK(sub.num_nodes() == 2);
  CHECK(sub.num_edges() == 1);
}

}
