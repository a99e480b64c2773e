#include "qperc/percolation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "qperc/parallel.hpp"
#include "qperc/rng.hpp"

namespace qperc {

void PercolationParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << "percolation probability p = " << p << " is outside [0, 1]";
    throw std::invalid_argument(msg.str());
  }
  if (realizations == 0) throw std::invalid_argument("realizations must be positive");
}

std::size_t BondConfiguration::open_count() const {
  return static_cast<std::size_t>(std::count(open_.begin(), open_.end(), true));
}

BondConfiguration sample(const EmbeddedGraph& g, const PercolationParams& params,
                         std::uint64_t realization) {
  params.validate();
  std::vector<bool> open(g.edge_count());
  for (std::size_t e = 0; e < open.size(); ++e) {
    open[e] = bond_uniform(params.master_seed, realization, e) < params.p;
  }
  return {g, std::move(open), params.master_seed, realization};
}

namespace {

VertexId find_root(std::vector<VertexId>& parent, VertexId i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    auto& pi = parent[static_cast<std::size_t>(i)];
    pi = parent[static_cast<std::size_t>(pi)];
    i = pi;
  }
  return i;
}

}  // namespace

bool near_boundary(const EmbeddedGraph& g, VertexId v) {
  return g.boundary_distance(v) <= g.constants().l_max;
}

ClusterDecomposition decompose(const EmbeddedGraph& g, const BondConfiguration& omega) {
  const std::size_t n = g.vertex_count();
  std::vector<VertexId> parent(n);
  std::vector<std::int32_t> rank_size(n, 1);
  std::iota(parent.begin(), parent.end(), 0);
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!omega.is_open(static_cast<EdgeId>(e))) continue;
    VertexId a = find_root(parent, edges[e].u);
    VertexId b = find_root(parent, edges[e].v);
    if (a == b) continue;
    if (rank_size[static_cast<std::size_t>(a)] < rank_size[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;
    rank_size[static_cast<std::size_t>(a)] += rank_size[static_cast<std::size_t>(b)];
  }

  ClusterDecomposition out;
  out.cluster_of_.assign(n, -1);
  std::vector<std::int32_t> id_of_root(n, -1);
  std::vector<std::size_t> counts;
  for (std::size_t v = 0; v < n; ++v) {
    const auto root = static_cast<std::size_t>(find_root(parent, static_cast<VertexId>(v)));
    if (id_of_root[root] < 0) {
      id_of_root[root] = static_cast<std::int32_t>(counts.size());
      counts.push_back(0);
    }
    out.cluster_of_[v] = id_of_root[root];
    ++counts[static_cast<std::size_t>(id_of_root[root])];
  }
  out.offsets_.assign(counts.size() + 1, 0);
  for (std::size_t c = 0; c < counts.size(); ++c) out.offsets_[c + 1] = out.offsets_[c] + counts[c];
  out.members_.resize(n);
  out.touches_boundary_.assign(counts.size(), 0);
  std::vector<std::size_t> fill(out.offsets_.begin(), out.offsets_.end() - 1);
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = static_cast<std::size_t>(out.cluster_of_[v]);
    out.members_[fill[c]++] = static_cast<VertexId>(v);
    if (near_boundary(g, static_cast<VertexId>(v))) out.touches_boundary_[c] = 1;
  }
  return out;
}

// Statistics ------------------------------------------------------------------

namespace {

std::vector<VertexId> sample_vertices(const EmbeddedGraph& g, const StatOptions& opts,
                                      double default_margin) {
  if (opts.vertices) {
    for (VertexId v : *opts.vertices) {
      if (v < 0 || static_cast<std::size_t>(v) >= g.vertex_count()) {
        throw std::invalid_argument("sample vertex " + std::to_string(v) + " out of range");
      }
    }
    return *opts.vertices;
  }
  const double margin = opts.margin.value_or(default_margin);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    if (g.boundary_distance(v) > margin) out.push_back(v);
  }
  return out;
}

/// Mean and standard error over per-realization averages, reduced in
/// realization order.
void summarize(const std::vector<std::vector<double>>& per_realization, StatSeries& out) {
  const std::size_t r = per_realization.size();
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    double sum = 0.0;
    for (const auto& row : per_realization) sum += row[k];
    const double mean = sum / static_cast<double>(r);
    double ss = 0.0;
    for (const auto& row : per_realization) ss += (row[k] - mean) * (row[k] - mean);
    out.rows[k].estimate = mean;
    out.rows[k].std_error =
        r > 1 ? std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r)) : 0.0;
  }
}

double max_value(std::span<const double> xs) {
  return xs.empty() ? 0.0 : *std::max_element(xs.begin(), xs.end());
}

}  // namespace

StatSeries cluster_size_tail(const EmbeddedGraph& g, const PercolationParams& params,
                             std::span<const double> n_values, const StatOptions& opts) {
  params.validate();
  const auto verts = sample_vertices(g, opts, max_value(n_values) * g.constants().l_max);
  if (verts.empty()) {
    throw std::runtime_error("cluster_size_tail: no interior vertices; enlarge the patch or "
                             "reduce the largest n");
  }
  StatSeries out;
  out.realizations = params.realizations;
  out.sample_vertices = verts.size();
  for (double n : n_values) out.rows.push_back({n, 0.0, 0.0});

  std::vector<std::vector<double>> per(params.realizations);
  parallel_for(params.realizations, opts.threads, [&](std::size_t r) {
    const auto omega = sample(g, params, r);
    const auto dec = decompose(g, omega);
    std::vector<double> hits(n_values.size(), 0.0);
    for (VertexId v : verts) {
      const auto s = static_cast<double>(dec.size_of_cluster_containing(v));
      for (std::size_t k = 0; k < n_values.size(); ++k) {
        if (s >= n_values[k]) hits[k] += 1.0;
      }
    }
    for (auto& h : hits) h /= static_cast<double>(verts.size());
    per[r] = std::move(hits);
  });
  summarize(per, out);
  return out;
}

StatSeries boundary_path_probability(const EmbeddedGraph& g, const PercolationParams& params,
                                     std::span<const double> n_values, const StatOptions& opts) {
  params.validate();
  const double nmax = max_value(n_values);
  StatSeries out;
  out.realizations = params.realizations;
  for (double n : n_values) out.rows.push_back({n, 0.0, 0.0});
  auto verts = sample_vertices(g, opts, nmax * g.constants().l_max);
  // A ball that leaves the patch cannot be decided.
  std::erase_if(verts, [&](VertexId v) { return g.boundary_distance(v) < nmax; });
  out.sample_vertices = verts.size();
  if (verts.empty()) {
    out.truncated = true;
    return out;
  }

  std::vector<std::vector<double>> per(params.realizations);
  parallel_for(params.realizations, opts.threads, [&](std::size_t r) {
    const auto omega = sample(g, params, r);
    const auto dec = decompose(g, omega);
    std::vector<double> hits(n_values.size(), 0.0);
    for (VertexId v : verts) {
      const Vec2 pv = g.position(v);
      double reach = 0.0;
      for (VertexId w : dec.members(dec.cluster_of(v))) {
        reach = std::max(reach, distance(pv, g.position(w)));
        if (reach >= nmax) break;
      }
      for (std::size_t k = 0; k < n_values.size(); ++k) {
        if (reach >= n_values[k]) hits[k] += 1.0;
      }
    }
    for (auto& h : hits) h /= static_cast<double>(verts.size());
    per[r] = std::move(hits);
  });
  summarize(per, out);
  return out;
}

MeanEstimate mean_cluster_size(const EmbeddedGraph& g, const PercolationParams& params,
                               const StatOptions& opts) {
  params.validate();
  const auto verts = sample_vertices(g, opts, 10.0 * g.constants().l_max);
  if (verts.empty()) throw std::runtime_error("mean_cluster_size: no interior vertices");
  std::vector<std::vector<double>> per(params.realizations);
  parallel_for(params.realizations, opts.threads, [&](std::size_t r) {
    const auto omega = sample(g, params, r);
    const auto dec = decompose(g, omega);
    double sum = 0.0;
    for (VertexId v : verts) sum += static_cast<double>(dec.size_of_cluster_containing(v));
    per[r] = {sum / static_cast<double>(verts.size())};
  });
  StatSeries tmp;
  tmp.rows.push_back({0.0, 0.0, 0.0});
  summarize(per, tmp);
  return {tmp.rows[0].estimate, tmp.rows[0].std_error, params.realizations, verts.size()};
}

// Bounds --------------------------------------------------------------------------

BoundsReport bounds_report(double p, int d_max, double l_max, std::optional<double> chi_hat) {
  if (d_max < 2) throw std::invalid_argument("bounds_report: d_max must be at least 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bounds_report: p outside [0, 1]");
  if (!(l_max > 0.0)) throw std::invalid_argument("bounds_report: l_max must be positive");
  BoundsReport b;
  b.p = p;
  b.d_max = d_max;
  b.l_max = l_max;
  const double branching = static_cast<double>(d_max - 1);
  b.p_c_lower = 1.0 / branching;
  b.subcritical = p * branching < 1.0;
  b.psi_decay = p > 0.0 ? std::log(1.0 / (p * branching)) / l_max
                        : std::numeric_limits<double>::infinity();
  b.gamma = (p > 0.0 && p < 1.0) ? -std::log(p) - d_max * std::log1p(-p)
                                 : std::numeric_limits<double>::infinity();
  if (chi_hat && *chi_hat > 0.0) {
    b.chi = *chi_hat;
    b.lambda_decay = 1.0 / (2.0 * *chi_hat * *chi_hat);
    b.lambda_empirical = true;
  }
  return b;
}

// Oracle --------------------------------------------------------------------------

double ClusterOracle::size_tail(VertexId v, double n) const {
  const auto& pmf = size_pmf[static_cast<std::size_t>(v)];
  double sum = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    if (static_cast<double>(s) >= n) sum += pmf[s];
  }
  return sum;
}

double ClusterOracle::mean_size(VertexId v) const {
  const auto& pmf = size_pmf[static_cast<std::size_t>(v)];
  double sum = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) sum += static_cast<double>(s) * pmf[s];
  return sum;
}

double ClusterOracle::reach_tail(VertexId v, double n) const {
  double sum = 0.0;
  for (const auto& [d, prob] : reach_pmf[static_cast<std::size_t>(v)]) {
    if (d >= n) sum += prob;
  }
  return sum;
}

ClusterOracle bruteforce_cluster_oracle(const EmbeddedGraph& g, double p) {
  const std::size_t m = g.edge_count();
  const std::size_t nv = g.vertex_count();
  if (m > kOracleMaxEdges) {
    throw std::invalid_argument("bruteforce_cluster_oracle: " + std::to_string(m) +
                                " edges exceed the enumeration limit of " +
                                std::to_string(kOracleMaxEdges));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("oracle: p outside [0, 1]");

  ClusterOracle out;
  out.size_pmf.assign(nv, std::vector<double>(nv + 1, 0.0));
  out.reach_pmf.assign(nv, {});
  std::vector<double> pow_p(m + 1, 1.0), pow_q(m + 1, 1.0);
  for (std::size_t k = 1; k <= m; ++k) {
    pow_p[k] = pow_p[k - 1] * p;
    pow_q[k] = pow_q[k - 1] * (1.0 - p);
  }

  std::vector<int> label(nv);
  std::vector<VertexId> stack;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    const auto open = static_cast<std::size_t>(std::popcount(mask));
    const double weight = pow_p[open] * pow_q[m - open];
    if (weight == 0.0) continue;
    // Flood fill over open edges.
    std::fill(label.begin(), label.end(), -1);
    int clusters = 0;
    for (std::size_t s = 0; s < nv; ++s) {
      if (label[s] >= 0) continue;
      label[s] = clusters;
      stack.assign(1, static_cast<VertexId>(s));
      while (!stack.empty()) {
        const VertexId x = stack.back();
        stack.pop_back();
        for (const auto& [y, e] : g.neighbours(x)) {
          if ((mask >> e) & 1u && label[static_cast<std::size_t>(y)] < 0) {
            label[static_cast<std::size_t>(y)] = clusters;
            stack.push_back(y);
          }
        }
      }
      ++clusters;
    }
    out.expected_cluster_count += weight * clusters;
    for (std::size_t v = 0; v < nv; ++v) {
      std::size_t size = 0;
      double reach = 0.0;
      for (std::size_t w = 0; w < nv; ++w) {
        if (label[w] != label[v]) continue;
        ++size;
        reach = std::max(reach, distance(g.position(static_cast<VertexId>(v)),
                                         g.position(static_cast<VertexId>(w))));
      }
      out.size_pmf[v][size] += weight;
      out.reach_pmf[v][reach] += weight;
    }
  }
  return out;
}

}  // namespace qperc
