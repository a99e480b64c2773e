#include "qperc/lifshits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qperc/percolation.hpp"

namespace qperc {

double chain_rate(double p, int d_max) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chain_rate: p must lie in (0, 1)");
  return bounds_report(p, d_max, 1.0).gamma;
}

int chain_length_for(double E) {
  if (!(E > 0.0)) throw std::invalid_argument("chain_length_for: E must be positive");
  int l = std::max(2, static_cast<int>(std::ceil(std::sqrt(10.0 / E))));
  while (l > 2 && E - 10.0 / ((l - 1.0) * (l - 1.0)) >= 0.0) --l;
  while (E - 10.0 / (static_cast<double>(l) * l) < 0.0) ++l;
  return l;
}

double lower_bound_with_rate(double E, double gamma, double rho_inf) {
  if (!(E > 0.0)) throw std::invalid_argument("lower_bound: E must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("lower_bound: gamma must be positive");
  if (!(rho_inf >= 0.0)) throw std::invalid_argument("lower_bound: rho_inf must be nonnegative");
  const double s = 1.0 / std::sqrt(E);
  return rho_inf * std::exp(-2.0 * gamma - 4.0 * gamma * s) / (2.0 + 4.0 * s);
}

double lower_bound(double E, double p, int d_max, double rho_inf) {
  return lower_bound_with_rate(E, chain_rate(p, d_max), rho_inf);
}

double upper_bound(double E, double rho, double lambda, double D) {
  if (!(E > 0.0)) throw std::invalid_argument("upper_bound: E must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("upper_bound: lambda must be positive");
  return rho * D * std::exp(-lambda / std::sqrt(E));
}

double TailAnalysis::fitted(double E) const {
  return std::exp(-(slope / std::sqrt(E) + intercept));
}

TailAnalysis tail_fit(std::span<const double> energies, std::span<const double> tails,
                      std::span<const double> std_errors, double floor, std::size_t realizations,
                      const TailFitOptions& opts) {
  if (energies.size() != tails.size() || tails.size() != std_errors.size()) {
    throw std::invalid_argument("tail_fit: column lengths differ");
  }
  TailAnalysis a;
  a.floor = floor;
  a.realizations = realizations;
  std::vector<double> xs, ys, ws;
  bool unit_weights = false;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double E = energies[i];
    if (E < opts.e_min || E > opts.e_max) continue;
    TailPoint pt{E, tails[i], std_errors[i], false};
    pt.reliable = E > 0.0 && pt.tail > 0.0 && pt.std_error < opts.max_relative_error * pt.tail &&
                  pt.tail >= floor;
    a.points.push_back(pt);
    if (!pt.reliable) continue;
    xs.push_back(1.0 / std::sqrt(E));
    ys.push_back(-std::log(pt.tail));
    const double rel = pt.std_error / pt.tail;
    if (rel == 0.0) unit_weights = true;
    ws.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
  }
  a.reliable_points = xs.size();
  if (xs.size() < std::max<std::size_t>(opts.min_points, 3)) {
    std::ostringstream msg;
    msg << "tail_fit: " << xs.size() << " reliable points in [" << opts.e_min << ", "
        << opts.e_max << "], need " << opts.min_points;
    throw std::runtime_error(msg.str());
  }
  if (unit_weights) std::fill(ws.begin(), ws.end(), 1.0);

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    syy += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  a.slope = sxy / sxx;
  a.intercept = my - a.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (a.slope * xs[i] + a.intercept);
    ss_res += ws[i] * r * r;
  }
  a.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  double uy = 0.0;
  for (double y : ys) uy += y;
  uy /= static_cast<double>(ys.size());
  double u_res = 0.0, u_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (a.slope * xs[i] + a.intercept);
    u_res += r * r;
    u_tot += (ys[i] - uy) * (ys[i] - uy);
  }
  a.r2_unweighted = u_tot > 0.0 ? 1.0 - u_res / u_tot : 1.0;
  a.slope_stderr = std::sqrt(ss_res / static_cast<double>(xs.size() - 2) / sxx);

  // smallest reliable E has the largest x
  const auto imax = static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
  const double e_lo = 1.0 / (xs[imax] * xs[imax]);
  a.loglog_ratio = std::log(std::abs(ys[imax])) / std::log(e_lo);
  a.reliable_e_min = e_lo;
  const double xmin = *std::min_element(xs.begin(), xs.end());
  a.reliable_e_max = 1.0 / (xmin * xmin);
  a.decades = std::log10(a.reliable_e_max / a.reliable_e_min);
  return a;
}

TailAnalysis tail_fit(const IdsTable& table, const TailFitOptions& opts) {
  std::vector<double> E, tail, se;
  for (const auto& row : table.rows) {
    E.push_back(row.E);
    tail.push_back(row.tail);
    se.push_back(row.tail_std_error);
  }
  const double floor =
      10.0 / (static_cast<double>(table.realizations_used) * table.volume);
  return tail_fit(E, tail, se, floor, table.realizations_used, opts);
}

BracketReport certify_bracketing(const TailAnalysis& a, const BracketInputs& in) {
  if (a.realizations < 100) {
    throw std::invalid_argument("certify_bracketing: needs at least 100 realizations");
  }
  BracketReport rep;
  rep.gamma = in.gamma_override.value_or(chain_rate(in.p, in.d_max));
  for (const auto& pt : a.points) {
    if (!pt.reliable) continue;
    BracketPoint b;
    b.E = pt.E;
    b.tail = pt.tail;
    b.std_error = pt.std_error;
    b.lower = lower_bound_with_rate(pt.E, rep.gamma, in.rho_inf);
    b.lower_margin = pt.tail + 4.0 * pt.std_error - b.lower;
    b.lower_ok = b.lower_margin >= 0.0;
    b.fitted = a.fitted(pt.E);
    if (in.lambda && *in.lambda > 0.0) {
      b.upper = upper_bound(pt.E, in.rho, *in.lambda, in.D);
      b.upper_ok = b.fitted <= *b.upper + 4.0 * pt.std_error;
    }
    if (!b.lower_ok) ++rep.lower_violations;
    if (!b.upper_ok) rep.upper_diagnostic_pass = false;
    rep.points.push_back(b);
  }
  rep.rigorous_pass = rep.lower_violations == 0;
  return rep;
}

}  // namespace qperc
