#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qperc/generators.hpp"
#include "qperc/graph_io.hpp"

using namespace qperc;

namespace {

EmbeddedGraph gen(Family f, double n) {
  GeneratorSpec spec;
  spec.family = f;
  spec.radius = n;
  return generate(spec);
}

// Neighbour counts from an all-pairs scan for unit distance.
std::vector<int> unit_distance_degrees(const EmbeddedGraph& g) {
  std::vector<int> deg(g.vertex_count(), 0);
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    for (std::size_t j = i + 1; j < g.vertex_count(); ++j) {
      const double d = distance(g.positions()[i], g.positions()[j]);
      if (std::abs(d - 1.0) < 1e-9) {
        ++deg[i];
        ++deg[j];
      }
    }
  }
  return deg;
}

}  // namespace

TEST_CASE("square patch of radius 2.5") {
  const auto g = gen(Family::square, 2.5);
  int expected = 0;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) expected += (i * i + j * j < 6.25) ? 1 : 0;
  }
  CHECK(expected == 21);
  CHECK(g.vertex_count() == 21);
  CHECK(unit_distance_degrees(g) == [&] {
    std::vector<int> d;
    for (VertexId v = 0; v < 21; ++v) d.push_back(g.degree(v));
    return d;
  }());
  const auto rep = geometry_report(g);
  CHECK(rep.d_max == 4);
  CHECK(rep.l_max == doctest::Approx(1.0));
}

TEST_CASE("triangular interior vertices have degree six") {
  const auto g = gen(Family::triangular, 6.0);
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    if (norm(g.position(v)) < 5.0) CHECK(g.degree(v) == 6);
  }
  const auto rep = geometry_report(g);
  CHECK(rep.d_max == 6);
  CHECK(rep.l_max == doctest::Approx(1.0));
  CHECK(rep.min_separation == doctest::Approx(1.0));
}

TEST_CASE("penrose pentagrid patch of radius 10") {
  const auto g = gen(Family::penrose_pentagrid, 10.0);
  // golden values from the default offsets
  CHECK(g.vertex_count() == 384);
  CHECK(g.edge_count() == 712);
  const auto rep = geometry_report(g);
  CHECK(rep.d_max == 7);
  CHECK(rep.l_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.min_separation == doctest::Approx(2.0 * std::sin(M_PI / 10.0)));
  CHECK(rep.r == doctest::Approx(std::sin(M_PI / 10.0)));

  // independent vertex stars: unit-distance neighbours from a full scan
  const auto deg = unit_distance_degrees(g);
  int max_deg = 0;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    CHECK(deg[static_cast<std::size_t>(v)] == g.degree(v));
    max_deg = std::max(max_deg, deg[static_cast<std::size_t>(v)]);
  }
  CHECK(max_deg == 7);
  // every vertex of a rhombus tiling has at least three edges away from the boundary
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    if (g.boundary_distance(v) > 2.0) CHECK(g.degree(v) >= 3);
  }
}

TEST_CASE("ammann-beenker patch") {
  const auto g = gen(Family::ammann_beenker, 10.0);
  const auto rep = geometry_report(g);
  CHECK(rep.d_max == 8);
  CHECK(rep.l_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.min_separation == doctest::Approx(2.0 * std::sin(M_PI / 8.0)));
  const auto deg = unit_distance_degrees(g);
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    CHECK(deg[static_cast<std::size_t>(v)] == g.degree(v));
    if (g.boundary_distance(v) > 2.0) CHECK(g.degree(v) >= 3);
  }
}

TEST_CASE("generated graphs honour their nominal constants") {
  for (Family f : {Family::square, Family::triangular, Family::penrose_pentagrid,
                   Family::ammann_beenker}) {
    const auto g = gen(f, 12.0);
    const auto rep = geometry_report(g);
    const auto& c = g.constants();
    CHECK(rep.d_max <= c.d_max);
    CHECK(rep.l_max <= c.l_max + 1e-9);
    CHECK(rep.r >= c.r - 1e-9);
    for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
      CHECK(contains(g.box(), g.position(v)));
    }
  }
}

TEST_CASE("generation is deterministic") {
  for (Family f : {Family::square, Family::triangular, Family::penrose_pentagrid,
                   Family::ammann_beenker}) {
    const auto a = gen(f, 8.0);
    const auto b = gen(f, 8.0);
    CHECK(a == b);
    CHECK(graph_to_string(a) == graph_to_string(b));
  }
}

TEST_CASE("generator preconditions") {
  GeneratorSpec spec;
  spec.radius = 0.0;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  spec.radius = 5.0;
  spec.family = Family::penrose_pentagrid;
  spec.pentagrid_offsets = {0.1, 0.1, 0.1, 0.1, 0.1};
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  // three grid lines through the origin
  spec.pentagrid_offsets = {0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("degenerate"), std::invalid_argument);
  CHECK_THROWS_AS(parse_family("hexagonal"), std::invalid_argument);
  CHECK(parse_family("penrose") == Family::penrose_pentagrid);
  CHECK(parse_family(family_name(Family::ammann_beenker)) == Family::ammann_beenker);
}
