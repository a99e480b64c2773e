#pragma once
// Low-energy tail of the integrated density of states: the two-sided
// exponential bracket and the linearized exponent fit.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qperc/spectral.hpp"

namespace qperc {

/// gamma(p) = -ln p - d_max ln(1 - p).
double chain_rate(double p, int d_max);

/// Shortest chain length l >= 2 with E - 10 / l^2 >= 0.
int chain_length_for(double E);

/// rho_inf e^{-2 gamma} exp(-4 gamma / sqrt E) / (2 + 4 / sqrt E).
/// Throws std::invalid_argument unless E > 0, 0 < p < 1, rho_inf >= 0.
double lower_bound(double E, double p, int d_max, double rho_inf);
/// Same with gamma supplied directly (gamma > 0).
double lower_bound_with_rate(double E, double gamma, double rho_inf);

/// rho D exp(-lambda / sqrt E). Throws std::invalid_argument unless E > 0 and lambda > 0.
double upper_bound(double E, double rho, double lambda, double D = 2.0);

struct TailPoint {
  double E = 0.0;
  double tail = 0.0;       // N(E) - N(0)
  double std_error = 0.0;
  bool reliable = false;
};

struct TailFitOptions {
  double e_min = 0.02;
  double e_max = 0.5;
  double max_relative_error = 0.5;
  std::size_t min_points = 8;
};

struct TailAnalysis {
  std::vector<TailPoint> points;  // every grid point in [e_min, e_max]
  double slope = 0.0;             // a in -ln(tail) = a E^{-1/2} + b
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;                // weighted, matching the fit
  double r2_unweighted = 0.0;     // same line, every reliable point weighted equally
  double loglog_ratio = 0.0;      // ln|ln tail| / ln E at the smallest reliable E
  std::size_t reliable_points = 0;
  double reliable_e_min = 0.0;
  double reliable_e_max = 0.0;
  double decades = 0.0;           // log10(reliable_e_max / reliable_e_min)
  double floor = 0.0;             // counting-statistics floor on the tail
  std::size_t realizations = 0;

  double fitted(double E) const;  // exp(-(slope / sqrt E + intercept))
};

/// Weighted least squares of -ln(tail) against E^{-1/2} over reliable points:
/// tail > 0, relative error below the limit, tail >= floor. Throws
/// std::runtime_error with fewer than `min_points` reliable points.
TailAnalysis tail_fit(const IdsTable& table, const TailFitOptions& options = {});
TailAnalysis tail_fit(std::span<const double> energies, std::span<const double> tails,
                      std::span<const double> std_errors, double floor, std::size_t realizations,
                      const TailFitOptions& options = {});

struct BracketInputs {
  double rho = 0.0;
  double rho_inf = 0.0;
  double p = 0.0;
  int d_max = 0;
  std::optional<double> lambda;  // empirical decay rate for the diagnostic side
  double D = 2.0;
  std::optional<double> gamma_override;
};

struct BracketPoint {
  double E = 0.0;
  double tail = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double lower_margin = 0.0;  // tail + 4 SE - lower
  bool lower_ok = false;
  std::optional<double> upper;
  double fitted = 0.0;
  bool upper_ok = true;       // diagnostic only
};

struct BracketReport {
  double gamma = 0.0;
  std::vector<BracketPoint> points;  // reliable points only
  std::size_t lower_violations = 0;
  bool rigorous_pass = false;
  bool upper_diagnostic_pass = true;
};

/// Rigorous side: lower_bound(E) <= tail + 4 SE at every reliable point.
/// Diagnostic side: the fitted tail does not exceed the empirical upper bound
/// by more than 4 SE. Throws std::invalid_argument for fewer than 100 realizations.
BracketReport certify_bracketing(const TailAnalysis& analysis, const BracketInputs& inputs);

}  // namespace qperc
