// Small-instance invariant and oracle suite behind `qperc verify`.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qperc/cli.hpp"
#include "qperc/lifshits.hpp"
#include "qperc/patterns.hpp"
#include "qperc/percolation.hpp"
#include "qperc/spectral.hpp"

namespace qperc::cli {

namespace {

EmbeddedGraph patch(Family f, double radius) {
  GeneratorSpec spec;
  spec.family = f;
  spec.radius = radius;
  return generate(spec);
}

EmbeddedGraph block3() {
  std::vector<Coeffs> vs;
  for (int y = -1; y <= 1; ++y) {
    for (int x = -1; x <= 1; ++x) vs.push_back({x, y, 0, 0});
  }
  std::vector<Edge> es;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int v = 3 * r + c;
      if (c < 2) es.push_back({v, v + 1});
      if (r < 2) es.push_back({v, v + 3});
    }
  }
  return make_graph(Basis::square, vs, es, Rect{{-1.5, -1.5}, {1.5, 1.5}});
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

CheckResult chain_closed_form() {
  double ev = 0.0, vec = 0.0;
  for (int l = 2; l <= 50; ++l) {
    const auto closed = chain_spectrum(l);
    const auto s = eigenvalues(chain_laplacian(l));
    for (int k = 0; k < l; ++k) {
      ev = std::max(ev, std::abs(s.values[static_cast<std::size_t>(k)] - closed.values[static_cast<std::size_t>(k)]));
      double plus = 0.0, minus = 0.0;
      for (int j = 0; j < l; ++j) {
        const double c = closed.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        plus = std::max(plus, std::abs(s.vectors(j, k) - c));
        minus = std::max(minus, std::abs(s.vectors(j, k) + c));
      }
      vec = std::max(vec, std::min(plus, minus));
    }
  }
  return {"chain closed form", ev < 1e-9 && vec < 1e-8,
          "eigenvalue err " + fmt(ev) + ", eigenvector err " + fmt(vec)};
}

CheckResult ids_oracle(std::uint64_t seed, unsigned threads) {
  const auto g = block3();
  std::vector<double> energies;
  for (int k = 0; k < 50; ++k) energies.push_back(0.1731 * k);
  const auto exact = bruteforce_ids_moments(g, 0.3, energies, 1.5);
  IdsOptions o;
  o.counting_radius = 1.5;
  o.finite_graph = true;
  o.energies = energies;
  o.threads = threads;
  const std::size_t R = 20000;
  const auto t = ids_estimate(g, {0.3, seed, R}, o);
  double worst = 0.0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    const double se = std::sqrt(exact.variance[k] / static_cast<double>(R));
    // absolute slack for rounding where N is deterministic
    worst = std::max(worst, std::abs(t.rows[k].N - exact.mean[k]) / (4.0 * se + 1e-12));
  }
  return {"ids vs brute-force oracle (3x3)", worst <= 1.0,
          "max |diff| / (4 SE) " + fmt(worst)};
}

CheckResult block_diagonal(std::uint64_t seed) {
  const auto g = patch(Family::square, 7.5);
  double err = 0.0;
  bool kernel = true;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto omega = sample(g, {0.5, seed, 1}, r);
    const auto dec = decompose(g, omega);
    std::vector<double> blocks;
    for (std::int32_t c = 0; c < static_cast<std::int32_t>(dec.cluster_count()); ++c) {
      const auto s = eigenvalues(cluster_laplacian(g, omega, dec.members(c)));
      kernel = kernel && std::count_if(s.values.begin(), s.values.end(),
                                       [](double x) { return x < 1e-9; }) == 1;
      blocks.insert(blocks.end(), s.values.begin(), s.values.end());
    }
    std::sort(blocks.begin(), blocks.end());
    const auto whole = eigenvalues(full_laplacian(g, &omega)).values;
    for (std::size_t i = 0; i < whole.size(); ++i) err = std::max(err, std::abs(whole[i] - blocks[i]));
  }
  return {"block-diagonal spectrum", err < 1e-8 && kernel,
          "max err " + fmt(err) + (kernel ? ", one zero per cluster" : ", kernel count wrong")};
}

std::vector<CheckResult> ids_invariants(std::uint64_t seed, unsigned threads) {
  const auto g = patch(Family::square, 40.0);
  IdsOptions o;
  o.counting_radius = 15.0;
  for (int k = 0; k <= 20; ++k) o.energies.push_back(0.05 * k);
  o.energies.push_back(8.0);
  o.cheeger = true;
  o.threads = threads;
  const PercolationParams params{0.2, seed, 300};
  const auto a = ids_estimate(g, params, o);
  o.threads = threads + 1;
  const auto b = ids_estimate(g, params, o);
  bool same = a.rows.size() == b.rows.size();
  for (std::size_t k = 0; same && k < a.rows.size(); ++k) {
    same = a.rows[k].N == b.rows[k].N && a.rows[k].N_std_error == b.rows[k].N_std_error &&
           a.rows[k].tail_std_error == b.rows[k].tail_std_error;
  }
  const auto& top = a.rows.back();
  const double mass_err = std::abs(top.N - a.rho_hat);
  return {
      {"cheeger inequality", a.cheeger.violations == 0 && a.cheeger.clusters > 0,
       std::to_string(a.cheeger.clusters) + " clusters, " + std::to_string(a.cheeger.violations) +
           " violations"},
      {"ids mass conservation", mass_err < 1e-12 && top.N_std_error < 1e-12,
       "|N(2 d_max) - rho| " + fmt(mass_err)},
      {"ids thread independence", same,
       std::to_string(threads) + " vs " + std::to_string(threads + 1) + " threads"},
  };
}

CheckResult thresholds() {
  const bool ok = bounds_report(0.1, 4, 1.0).p_c_lower == 1.0 / 3.0 &&
                  bounds_report(0.1, 3, 1.0).p_c_lower == 1.0 / 2.0 &&
                  bounds_report(0.1, 6, 1.0).p_c_lower == 1.0 / 5.0;
  return {"subcritical threshold", ok, "1/(d_max-1) for d_max 4, 3, 6"};
}

CheckResult coupling(std::uint64_t seed) {
  const auto g = patch(Family::square, 20.0);
  const std::pair<double, double> pairs[] = {{0.1, 0.2}, {0.3, 0.6}, {0.5, 0.51}, {0.0, 1.0}};
  std::size_t bad = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    for (const auto& [lo, hi] : pairs) {
      const auto a = sample(g, {lo, seed, 1}, r);
      const auto b = sample(g, {hi, seed, 1}, r);
      for (std::size_t e = 0; e < a.size(); ++e) bad += a.bits()[e] && !b.bits()[e];
    }
  }
  return {"monotone coupling", bad == 0, std::to_string(bad) + " violations over 100 realizations"};
}

CheckResult cluster_oracle(std::uint64_t seed, unsigned threads) {
  std::vector<Coeffs> vs;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 3; ++i) vs.push_back({i, j, 0, 0});
  }
  const auto g = make_graph(Basis::square, vs, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}},
                            Ball{{1.0, 0.5}, 10.0});
  const auto oracle = bruteforce_cluster_oracle(g, 0.4);
  StatOptions so;
  so.vertices = std::vector<VertexId>{1};
  so.threads = threads;
  const double ns[] = {1, 2, 3, 4, 5, 6};
  const auto mc = cluster_size_tail(g, {0.4, seed, 20000}, ns, so);
  double worst = 0.0;
  for (std::size_t k = 0; k < std::size(ns); ++k) {
    const double d = std::abs(mc.rows[k].estimate - oracle.size_tail(1, ns[k]));
    worst = std::max(worst, d / (4.0 * mc.rows[k].std_error + 1e-12));
  }
  return {"cluster sizes vs brute-force oracle", worst <= 1.0,
          "max |diff| / (4 SE) " + fmt(worst)};
}

CheckResult boundary_decay(std::uint64_t seed, unsigned threads) {
  const auto g = patch(Family::square, 40.0);
  std::vector<double> ns;
  for (int n = 1; n <= 8; ++n) ns.push_back(n);
  StatOptions so;
  so.threads = threads;
  const auto s = boundary_path_probability(g, {0.2, seed, 20}, ns, so);
  const double psi = std::log(1.0 / 0.6);
  double worst = -INFINITY;
  for (const auto& r : s.rows) {
    worst = std::max(worst, r.estimate - 4.0 * r.std_error - 2.0 * std::exp(-psi * r.n));
  }
  return {"boundary-path decay", worst <= 0.0 && !s.truncated,
          std::to_string(s.sample_vertices * s.realizations) + " samples, worst excess " + fmt(worst)};
}

CheckResult factorization(std::uint64_t seed, unsigned threads) {
  const auto g = patch(Family::square, 30.0);
  const auto edge = canonicalize(Basis::square, std::vector<Coeffs>{{0, 0, 0, 0}, {1, 0, 0, 0}},
                                 std::vector<Edge>{{0, 1}}, std::vector<std::uint8_t>{1});
  const auto f = factorization_check(edge, g, {0.5, seed, 100}, 28.0, threads);
  return {"coloured-frequency factorization", std::abs(f.z_score) <= 4.0, "z " + fmt(f.z_score)};
}

CheckResult flc() {
  const auto a = extract_r_patterns(patch(Family::penrose_pentagrid, 20.0), 1.1).distinct();
  const auto b = extract_r_patterns(patch(Family::penrose_pentagrid, 40.0), 1.1).distinct();
  return {"Penrose FLC census", a == b && a > 0,
          std::to_string(a) + " vs " + std::to_string(b) + " distinct 1.1-patterns"};
}

std::vector<CheckResult> lifshits_self_tests() {
  std::vector<double> E, tail, se;
  for (int k = 0; k < 41; ++k) {
    E.push_back(0.02 * std::pow(25.0, k / 40.0));
    tail.push_back(std::exp(-3.0 / std::sqrt(E.back())));
    se.push_back(0.01 * tail.back());
  }
  const auto a = tail_fit(E, tail, se, 0.0, 1000);
  CheckResult fit{"synthetic tail fit", std::abs(a.slope - 3.0) < 1e-6 && a.r2 > 0.999999,
                  "slope " + std::to_string(a.slope)};

  for (std::size_t k = 0; k < E.size(); ++k) {
    tail[k] = 1.5 * lower_bound(E[k], 0.1, 4, 1.0);
    se[k] = 0.01 * tail[k];
  }
  const auto near = tail_fit(E, tail, se, 0.0, 1000);
  BracketInputs in{1.0, 1.0, 0.1, 4, std::nullopt, 2.0, std::nullopt};
  const bool honest = certify_bracketing(near, in).rigorous_pass;
  in.gamma_override = 0.5 * chain_rate(0.1, 4);
  const bool caught = !certify_bracketing(near, in).rigorous_pass;
  CheckResult teeth{"bracket mutation test", honest && caught,
                    std::string(honest ? "true gamma passes" : "true gamma fails") +
                        (caught ? ", halved gamma fails" : ", halved gamma passes")};
  return {fit, teeth};
}

}  // namespace

std::vector<CheckResult> verify_checks(std::uint64_t seed, unsigned threads) {
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("chain closed form", [&] { out.push_back(chain_closed_form()); });
  guarded("ids vs brute-force oracle (3x3)", [&] { out.push_back(ids_oracle(seed, threads)); });
  guarded("block-diagonal spectrum", [&] { out.push_back(block_diagonal(seed)); });
  guarded("ids invariants", [&] {
    for (auto& c : ids_invariants(seed, threads)) out.push_back(std::move(c));
  });
  guarded("subcritical threshold", [&] { out.push_back(thresholds()); });
  guarded("monotone coupling", [&] { out.push_back(coupling(seed)); });
  guarded("cluster sizes vs brute-force oracle", [&] { out.push_back(cluster_oracle(seed, threads)); });
  guarded("boundary-path decay", [&] { out.push_back(boundary_decay(seed, threads)); });
  guarded("coloured-frequency factorization", [&] { out.push_back(factorization(seed, threads)); });
  guarded("Penrose FLC census", [&] { out.push_back(flc()); });
  guarded("lifshits self-tests", [&] {
    for (auto& c : lifshits_self_tests()) out.push_back(std::move(c));
  });
  return out;
}

}  // namespace qperc::cli
