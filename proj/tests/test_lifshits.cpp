#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qperc/lifshits.hpp"

using namespace qperc;

namespace {

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> e;
  for (int k = 0; k < count; ++k) e.push_back(lo * std::pow(hi / lo, k / (count - 1.0)));
  return e;
}

struct Synthetic {
  std::vector<double> E, tail, se;
};

template <class F>
Synthetic synthetic(F f, double rel_se) {
  Synthetic s;
  s.E = log_grid(0.02, 0.5, 41);
  for (double E : s.E) {
    s.tail.push_back(f(E));
    s.se.push_back(rel_se * f(E));
  }
  return s;
}

}  // namespace

TEST_CASE("chain rate and chain length") {
  CHECK(chain_rate(0.1, 4) == doctest::Approx(-std::log(0.1) - 4.0 * std::log(0.9)));
  CHECK(chain_rate(0.1, 4) == doctest::Approx(2.7241).epsilon(1e-4));
  CHECK_THROWS_AS(chain_rate(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(chain_rate(1.0, 4), std::invalid_argument);

  for (double E : {0.01, 0.02, 0.1, 0.4, 0.41, 1.0, 2.5, 3.0, 10.0}) {
    const int l = chain_length_for(E);
    CHECK(l >= 2);
    CHECK(E - 10.0 / (static_cast<double>(l) * l) >= 0.0);
    if (l > 2) CHECK(E - 10.0 / ((l - 1.0) * (l - 1.0)) < 0.0);
  }
  CHECK(chain_length_for(0.4) == 5);
  CHECK(chain_length_for(10.0) == 2);
  CHECK_THROWS_AS(chain_length_for(0.0), std::invalid_argument);
}

TEST_CASE("lower bound") {
  CHECK(lower_bound(1.0, 0.1, 4, 0.0) == 0.0);
  const double gamma = -std::log(0.1) - 4.0 * std::log(0.9);
  const double want = std::exp(-2.0 * gamma) * std::exp(-4.0 * gamma) / 6.0;
  CHECK(lower_bound(1.0, 0.1, 4, 1.0) == doctest::Approx(want).epsilon(1e-12));
  CHECK(lower_bound(1.0, 0.1, 4, 1.0) == doctest::Approx(1.3294e-8).epsilon(1e-4));
  CHECK(lower_bound(1.0, 0.1, 4, 0.5) == doctest::Approx(0.5 * want));

  double prev = 0.0;
  for (double E : log_grid(1e-3, 10.0, 200)) {
    const double b = lower_bound(E, 0.1, 4, 1.0);
    CHECK(b > prev);
    prev = b;
  }
  CHECK_THROWS_AS(lower_bound(0.0, 0.1, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(1.0, 0.0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(1.0, 1.0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(1.0, 0.1, 4, -1.0), std::invalid_argument);
}

TEST_CASE("upper bound") {
  CHECK(upper_bound(0.01, 1.0, 1.0, 2.0) == doctest::Approx(2.0 * std::exp(-10.0)));
  CHECK(upper_bound(0.01, 1.0, 1.0) == doctest::Approx(9.08e-5).epsilon(1e-3));
  CHECK(upper_bound(1e16, 0.7, 1.0, 2.0) == doctest::Approx(1.4));
  // ln(bound / rho D) is linear in lambda
  const double a = std::log(upper_bound(0.2, 1.3, 0.8) / 2.6);
  const double b = std::log(upper_bound(0.2, 1.3, 1.6) / 2.6);
  CHECK(b == doctest::Approx(2.0 * a));
  CHECK_THROWS_AS(upper_bound(0.1, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(upper_bound(0.1, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(upper_bound(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("bracket is consistent on the evaluation grid") {
  // lambda = 1 / (2 chi^2) with chi from a subcritical run is far below 4 gamma
  for (double p : {0.05, 0.1, 0.2, 0.3}) {
    const double lambda = 1.0 / (2.0 * 1.6 * 1.6);
    for (double E : log_grid(0.02, 0.5, 41)) {
      CHECK(lower_bound(E, p, 4, 1.0) <= upper_bound(E, 1.0, lambda));
    }
  }
}

TEST_CASE("tail fit recovers the exponential model") {
  const auto s = synthetic([](double E) { return std::exp(-3.0 / std::sqrt(E)); }, 0.01);
  const auto a = tail_fit(s.E, s.tail, s.se, 0.0, 1000);
  CHECK(std::abs(a.slope - 3.0) < 1e-6);
  CHECK(std::abs(a.intercept) < 1e-6);
  CHECK(a.r2 > 0.999999);
  CHECK(a.reliable_points == 41);
  CHECK(a.decades == doctest::Approx(std::log10(25.0)));
  CHECK(a.fitted(0.1) == doctest::Approx(std::exp(-3.0 / std::sqrt(0.1))));
  // ln|ln tail| / ln E at E = 0.02
  CHECK(a.loglog_ratio == doctest::Approx(std::log(3.0 / std::sqrt(0.02)) / std::log(0.02)));

  // exact data with zero errors falls back to unit weights
  const auto z = synthetic([](double E) { return 0.4 * std::exp(-2.0 / std::sqrt(E)); }, 0.0);
  const auto b = tail_fit(z.E, z.tail, z.se, 0.0, 1000);
  CHECK(b.slope == doctest::Approx(2.0));
  CHECK(b.intercept == doctest::Approx(-std::log(0.4)));
}

TEST_CASE("tail fit rejects the van Hove model") {
  const auto s = synthetic([](double E) { return E; }, 0.01);
  TailFitOptions opts;
  opts.e_min = 0.05;  // one decade
  const auto a = tail_fit(s.E, s.tail, s.se, 0.0, 1000, opts);
  CHECK(a.decades == doctest::Approx(1.0).epsilon(0.05));
  // recorded: the wrong model reaches only about 0.977
  CHECK(a.r2 == doctest::Approx(0.9776).epsilon(1e-3));
  CHECK(a.r2 < 0.98);
}

TEST_CASE("tail fit reliability filter") {
  const auto zero = synthetic([](double) { return 0.0; }, 0.0);
  CHECK_THROWS_AS(tail_fit(zero.E, zero.tail, zero.se, 0.0, 1000), std::runtime_error);

  // noisy points and points under the floor are dropped
  auto s = synthetic([](double E) { return std::exp(-3.0 / std::sqrt(E)); }, 0.01);
  for (std::size_t i = 0; i < 10; ++i) s.se[i] = s.tail[i];
  const auto a = tail_fit(s.E, s.tail, s.se, 0.0, 1000);
  CHECK(a.reliable_points == 31);
  CHECK(a.points.size() == 41);
  CHECK_FALSE(a.points[0].reliable);
  CHECK(a.reliable_e_min == doctest::Approx(s.E[10]));

  // six points above the floor are too few
  CHECK_THROWS_AS(tail_fit(s.E, s.tail, s.se, s.tail[35], 1000), std::runtime_error);
  const auto f = tail_fit(s.E, s.tail, s.se, s.tail[30], 1000);
  CHECK(f.reliable_points == 11);
}

namespace {

// Tail sitting at 1.5 times the true lower bound with 1% errors.
TailAnalysis near_lower_bound(double p, int d_max, double rho_inf) {
  std::vector<double> E = log_grid(0.02, 0.5, 41), tail, se;
  for (double e : E) {
    tail.push_back(1.5 * lower_bound(e, p, d_max, rho_inf));
    se.push_back(0.01 * tail.back());
  }
  return tail_fit(E, tail, se, 0.0, 4000);
}

}  // namespace

TEST_CASE("bracketing certification") {
  const auto a = near_lower_bound(0.1, 4, 1.0);
  BracketInputs in{1.0, 1.0, 0.1, 4, 0.2, 2.0, std::nullopt};
  const auto rep = certify_bracketing(a, in);
  CHECK(rep.rigorous_pass);
  CHECK(rep.lower_violations == 0);
  CHECK(rep.points.size() == 41);
  CHECK(rep.gamma == doctest::Approx(chain_rate(0.1, 4)));
  for (const auto& pt : rep.points) {
    CHECK(pt.lower_margin > 0.0);
    REQUIRE(pt.upper);
    CHECK(pt.lower <= *pt.upper);
  }
  CHECK(rep.upper_diagnostic_pass);

  // halving gamma inflates the bound past the data
  auto mutated = in;
  mutated.gamma_override = 0.5 * chain_rate(0.1, 4);
  const auto bad = certify_bracketing(a, mutated);
  CHECK_FALSE(bad.rigorous_pass);
  CHECK(bad.lower_violations == 41);

  // no infinite-cluster density: the lower side is trivial
  auto degenerate = in;
  degenerate.rho_inf = 0.0;
  degenerate.gamma_override = 0.5 * chain_rate(0.1, 4);
  CHECK(certify_bracketing(a, degenerate).rigorous_pass);

  // a tiny empirical lambda leaves the upper side loose; a huge one trips the diagnostic
  auto tight = in;
  tight.lambda = 100.0;
  const auto diag = certify_bracketing(a, tight);
  CHECK(diag.rigorous_pass);
  CHECK_FALSE(diag.upper_diagnostic_pass);

  auto few = a;
  few.realizations = 99;
  CHECK_THROWS_AS(certify_bracketing(few, in), std::invalid_argument);
}
