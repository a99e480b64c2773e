#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qperc/generators.hpp"
#include "qperc/percolation.hpp"

using namespace qperc;

namespace {

EmbeddedGraph two_vertices() {
  return make_graph(Basis::square, {{0, 0, 0, 0}, {1, 0, 0, 0}}, {{0, 1}}, Ball{{0.5, 0.0}, 10.0});
}

EmbeddedGraph path3() {
  return make_graph(Basis::square, {{0, 0, 0, 0}, {1, 0, 0, 0}, {2, 0, 0, 0}}, {{0, 1}, {1, 2}},
                    Ball{{1.0, 0.0}, 10.0});
}

// 2x3 block of Z^2, 7 edges
EmbeddedGraph ladder() {
  std::vector<Coeffs> vs;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 3; ++i) vs.push_back({i, j, 0, 0});
  }
  return make_graph(Basis::square, vs, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}},
                    Ball{{1.0, 0.5}, 10.0});
}

EmbeddedGraph square(double n) {
  GeneratorSpec spec;
  spec.radius = n;
  return generate(spec);
}

// Components by breadth-first search, for comparison with union-find.
std::vector<int> bfs_labels(const EmbeddedGraph& g, const BondConfiguration& omega) {
  std::vector<int> label(g.vertex_count(), -1);
  int next = 0;
  for (VertexId s = 0; s < static_cast<VertexId>(g.vertex_count()); ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<VertexId> queue{s};
    label[static_cast<std::size_t>(s)] = next;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      for (const auto& [w, e] : g.neighbours(queue[h])) {
        if (omega.is_open(e) && label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          queue.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((PercolationParams{1.5, 0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PercolationParams{-0.1, 0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PercolationParams{0.5, 0, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((PercolationParams{0.0, 0, 1}.validate()));
}

TEST_CASE("sampling") {
  const auto g = square(180.0);
  REQUIRE(g.edge_count() >= 100000);
  CHECK(sample(g, {0.0, 9, 1}, 0).open_count() == 0);
  CHECK(sample(g, {1.0, 9, 1}, 0).open_count() == g.edge_count());
  const auto omega = sample(g, {0.3, 12345, 1}, 0);
  const double frac = static_cast<double>(omega.open_count()) / static_cast<double>(g.edge_count());
  const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(g.edge_count()));
  CHECK(std::abs(frac - 0.3) < 4.0 * se);
  CHECK(std::abs(frac - 0.3) < 0.006);
  CHECK(omega.bits() == sample(g, {0.3, 12345, 1}, 0).bits());
  CHECK(omega.bits() != sample(g, {0.3, 12345, 1}, 1).bits());
  CHECK(omega.seed() == 12345);
}

TEST_CASE("monotone coupling holds edge by edge and cluster by cluster") {
  const auto g = square(20.0);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto lo = sample(g, {0.3, 5, 20}, r);
    const auto hi = sample(g, {0.45, 5, 20}, r);
    const auto dlo = decompose(g, lo);
    const auto dhi = decompose(g, hi);
    for (EdgeId e = 0; e < static_cast<EdgeId>(g.edge_count()); ++e) {
      if (lo.is_open(e)) CHECK(hi.is_open(e));
    }
    for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
      CHECK(dlo.size_of_cluster_containing(v) <= dhi.size_of_cluster_containing(v));
    }
  }
}

TEST_CASE("cluster decomposition") {
  const auto p = path3();
  const auto closed = decompose(p, BondConfiguration::uniform(p, false));
  CHECK(closed.cluster_count() == 3);
  const auto open = decompose(p, BondConfiguration::uniform(p, true));
  CHECK(open.cluster_count() == 1);
  CHECK(open.size(0) == 3);
  const BondConfiguration ab(p, {true, false}, 0, 0);
  const auto d = decompose(p, ab);
  CHECK(d.cluster_count() == 2);
  CHECK(d.cluster_of(0) == d.cluster_of(1));
  CHECK(d.cluster_of(2) != d.cluster_of(0));
  CHECK(d.size_of_cluster_containing(2) == 1);

  // agrees with breadth-first search; ids ordered by smallest member
  const auto g = square(15.0);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto omega = sample(g, {0.5, 77, 5}, r);
    const auto dec = decompose(g, omega);
    const auto lab = bfs_labels(g, omega);
    for (const auto& e : g.edges()) {
      CHECK((dec.cluster_of(e.u) == dec.cluster_of(e.v)) ==
            (lab[static_cast<std::size_t>(e.u)] == lab[static_cast<std::size_t>(e.v)]));
    }
    std::size_t total = 0;
    VertexId prev_first = -1;
    for (std::int32_t c = 0; c < static_cast<std::int32_t>(dec.cluster_count()); ++c) {
      const auto ms = dec.members(c);
      total += ms.size();
      CHECK(ms.front() > prev_first);
      prev_first = ms.front();
      for (VertexId v : ms) {
        CHECK(dec.cluster_of(v) == c);
        CHECK(lab[static_cast<std::size_t>(v)] == lab[static_cast<std::size_t>(ms.front())]);
      }
      bool near = false;
      for (VertexId v : ms) near = near || near_boundary(g, v);
      CHECK(dec.touches_boundary(c) == near);
    }
    CHECK(total == g.vertex_count());
  }
}

TEST_CASE("cluster size tail on tiny graphs") {
  const double p = 0.3;
  const PercolationParams params{p, 2024, 100000};
  const double n2[] = {2.0};
  StatOptions first;
  first.vertices = std::vector<VertexId>{0};
  const auto two = cluster_size_tail(two_vertices(), params, n2, first);
  CHECK(std::abs(two.rows[0].estimate - p) < 4.0 * two.rows[0].std_error);

  StatOptions middle;
  middle.vertices = std::vector<VertexId>{1};
  const auto mid = cluster_size_tail(path3(), params, n2, middle);
  const double exact = 1.0 - (1.0 - p) * (1.0 - p);
  CHECK(std::abs(mid.rows[0].estimate - exact) < 4.0 * mid.rows[0].std_error);

  const double n1[] = {1.0};
  const auto z = cluster_size_tail(square(12.0), {0.2, 1, 50}, n1);
  CHECK(z.rows[0].estimate == 1.0);
  CHECK(z.rows[0].std_error == 0.0);

  const double big[] = {100.0};
  CHECK_THROWS_AS(cluster_size_tail(square(12.0), {0.2, 1, 5}, big), std::runtime_error);
}

TEST_CASE("boundary path probability") {
  const double huge[] = {1000.0};
  const auto t = boundary_path_probability(square(10.0), {0.5, 1, 10}, huge);
  CHECK(t.truncated);
  CHECK(t.rows[0].estimate == 0.0);

  const double ns[] = {1.0, 3.0, 5.0};
  const auto full = boundary_path_probability(square(20.0), {1.0, 1, 3}, ns);
  for (const auto& row : full.rows) CHECK(row.estimate == 1.0);

  const double half[] = {0.5};
  StatOptions first;
  first.vertices = std::vector<VertexId>{0};
  const auto two = boundary_path_probability(two_vertices(), {0.3, 8, 100000}, half, first);
  CHECK(std::abs(two.rows[0].estimate - 0.3) < 4.0 * two.rows[0].std_error);
}

TEST_CASE("mean cluster size") {
  const auto g = square(15.0);
  const auto zero = mean_cluster_size(g, {0.0, 1, 10});
  CHECK(zero.value == 1.0);
  StatOptions first;
  first.vertices = std::vector<VertexId>{0};
  const auto two = mean_cluster_size(two_vertices(), {0.4, 3, 100000}, first);
  CHECK(std::abs(two.value - 1.4) < 4.0 * two.std_error);

  // monotone in p under the coupling: exact, realization by realization
  const auto a = mean_cluster_size(g, {0.1, 6, 200});
  const auto b = mean_cluster_size(g, {0.2, 6, 200});
  CHECK(a.value <= b.value);
  CHECK(std::isfinite(b.value));
}

TEST_CASE("closed-form constants") {
  const auto b = bounds_report(0.2, 4, 1.0);
  CHECK(b.p_c_lower == doctest::Approx(1.0 / 3.0));
  CHECK(b.psi_decay == doctest::Approx(std::log(1.0 / 0.6)));
  CHECK(b.psi_decay == doctest::Approx(0.5108).epsilon(1e-4));
  CHECK(b.subcritical);
  CHECK_FALSE(b.lambda_decay.has_value());
  const auto g = bounds_report(0.1, 4, 1.0, 1.5);
  CHECK(g.gamma == doctest::Approx(-std::log(0.1) - 4.0 * std::log(0.9)));
  CHECK(g.gamma == doctest::Approx(2.7241).epsilon(1e-4));
  REQUIRE(g.lambda_decay.has_value());
  CHECK(*g.lambda_decay == doctest::Approx(1.0 / (2.0 * 1.5 * 1.5)));
  CHECK(g.lambda_empirical);
  CHECK(g.prefactor_d == 2.0);
  CHECK(bounds_report(0.5, 4, 1.0).psi_decay < 0.0);
  CHECK_FALSE(bounds_report(0.5, 4, 1.0).subcritical);
  CHECK(bounds_report(1.0 / 3.0 - 1e-9, 4, 1.0).psi_decay > 0.0);
  CHECK(bounds_report(0.25, 4, 2.0).psi_decay ==
        doctest::Approx(std::log(1.0 / 0.75) / 2.0));
  CHECK_THROWS_AS(bounds_report(0.1, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bounds_report(1.1, 4, 1.0), std::invalid_argument);
}

TEST_CASE("exact enumeration oracle") {
  const double p = 0.35;
  const auto one = bruteforce_cluster_oracle(two_vertices(), p);
  CHECK(one.mean_size(0) == doctest::Approx(1.0 + p));
  CHECK(one.expected_cluster_count == doctest::Approx(2.0 - p));
  const auto path = bruteforce_cluster_oracle(path3(), p);
  CHECK(path.expected_cluster_count == doctest::Approx(3.0 - 2.0 * p));
  CHECK(path.size_tail(1, 2.0) == doctest::Approx(1.0 - (1.0 - p) * (1.0 - p)));
  CHECK(path.size_tail(0, 3.0) == doctest::Approx(p * p));
  const auto closed = bruteforce_cluster_oracle(ladder(), 0.0);
  CHECK(closed.expected_cluster_count == doctest::Approx(6.0));
  CHECK(closed.mean_size(4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bruteforce_cluster_oracle(square(4.0), 0.3), std::invalid_argument);
}

TEST_CASE("monte carlo agrees with the oracle on a small graph") {
  const auto g = ladder();
  const double p = 0.4;
  const auto oracle = bruteforce_cluster_oracle(g, p);
  const double ns[] = {2.0, 3.0, 4.0, 5.0, 6.0};
  const double reach_ns[] = {1.0, 1.5, 2.0};
  for (VertexId v = 0; v < 6; ++v) {
    StatOptions opts;
    opts.vertices = std::vector<VertexId>{v};
    const auto mc = cluster_size_tail(g, {p, 31, 100000}, ns, opts);
    for (std::size_t k = 0; k < std::size(ns); ++k) {
      CHECK(std::abs(mc.rows[k].estimate - oracle.size_tail(v, ns[k])) <=
            4.0 * mc.rows[k].std_error);
    }
    const auto reach = boundary_path_probability(g, {p, 32, 100000}, reach_ns, opts);
    for (std::size_t k = 0; k < std::size(reach_ns); ++k) {
      CHECK(std::abs(reach.rows[k].estimate - oracle.reach_tail(v, reach_ns[k])) <=
            4.0 * reach.rows[k].std_error);
    }
  }
}

TEST_CASE("statistics do not depend on the thread count") {
  const auto g = square(25.0);
  const double ns[] = {1.0, 2.0, 5.0, 10.0};
  const auto a = cluster_size_tail(g, {0.3, 99, 64}, ns, {std::nullopt, std::nullopt, 1});
  const auto b = cluster_size_tail(g, {0.3, 99, 64}, ns, {std::nullopt, std::nullopt, 4});
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].estimate == b.rows[k].estimate);
    CHECK(a.rows[k].std_error == b.rows[k].std_error);
  }
}
