#include "qperc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>

#include "qperc/parallel.hpp"
#include "qperc/patterns.hpp"

namespace qperc {

namespace {

std::vector<VertexId> coordinate_order(const EmbeddedGraph& g, std::span<const VertexId> cluster) {
  std::vector<VertexId> order(cluster.begin(), cluster.end());
  std::sort(order.begin(), order.end(),
            [&](VertexId a, VertexId b) { return g.coord(a) < g.coord(b); });
  return order;
}

}  // namespace

ClusterLaplacian cluster_laplacian(const EmbeddedGraph& g, const BondConfiguration& omega,
                                   std::span<const VertexId> cluster) {
  if (cluster.empty()) throw std::invalid_argument("cluster_laplacian: empty cluster");
  ClusterLaplacian out;
  out.vertices = coordinate_order(g, cluster);
  std::vector<std::pair<VertexId, Eigen::Index>> local;
  local.reserve(out.vertices.size());
  for (std::size_t i = 0; i < out.vertices.size(); ++i) {
    local.emplace_back(out.vertices[i], static_cast<Eigen::Index>(i));
  }
  std::sort(local.begin(), local.end());
  const auto n = static_cast<Eigen::Index>(out.vertices.size());
  out.matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [w, e] : g.neighbours(out.vertices[static_cast<std::size_t>(i)])) {
      if (!omega.is_open(e)) continue;
      const auto it = std::lower_bound(local.begin(), local.end(), std::pair{w, Eigen::Index{-1}});
      if (it == local.end() || it->first != w) continue;
      out.matrix(i, it->second) -= 1.0;
      out.matrix(i, i) += 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd full_laplacian(const EmbeddedGraph& g, const BondConfiguration* omega) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edge_count()); ++e) {
    if (omega && !omega->is_open(e)) continue;
    const auto& ed = g.edge(e);
    m(ed.u, ed.u) += 1.0;
    m(ed.v, ed.v) += 1.0;
    m(ed.u, ed.v) -= 1.0;
    m(ed.v, ed.u) -= 1.0;
  }
  return m;
}

Eigen::MatrixXd chain_laplacian(int l) {
  if (l < 1) throw std::invalid_argument("chain_laplacian: l must be positive");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l, l);
  for (int j = 0; j + 1 < l; ++j) {
    m(j, j) += 1.0;
    m(j + 1, j + 1) += 1.0;
    m(j, j + 1) = -1.0;
    m(j + 1, j) = -1.0;
  }
  return m;
}

Spectrum eigenvalues(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigenvalues: matrix is not square");
  Spectrum out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues: solver did not converge");
  }
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  const double scale = tol * std::max(1.0, norm);
  const double top = 2.0 * m.diagonal().maxCoeff();
  out.vectors = solver.eigenvectors();
  out.values.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    const double lambda = solver.eigenvalues()(k);
    const double residual = (m * out.vectors.col(k) - lambda * out.vectors.col(k)).norm();
    if (residual > scale) {
      std::ostringstream msg;
      msg << "eigenvalues: residual " << residual << " above tolerance " << scale;
      throw std::runtime_error(msg.str());
    }
    if (lambda < -scale || lambda > top + scale) {
      std::ostringstream msg;
      msg << "eigenvalues: " << lambda << " outside [0, " << top << "]";
      throw std::runtime_error(msg.str());
    }
    out.values[static_cast<std::size_t>(k)] = std::abs(lambda) < kZeroSnap ? 0.0 : lambda;
  }
  return out;
}

ChainSpectrum chain_spectrum(int l) {
  if (l < 2) throw std::invalid_argument("chain_spectrum: l must be at least 2");
  ChainSpectrum out;
  const double ld = static_cast<double>(l);
  for (int k = 0; k < l; ++k) {
    const double s = std::sin(M_PI * k / (2.0 * ld));
    out.values.push_back(4.0 * s * s);
    std::vector<double> phi(static_cast<std::size_t>(l));
    for (int j = 1; j <= l; ++j) {
      phi[static_cast<std::size_t>(j - 1)] =
          k == 0 ? 1.0 / std::sqrt(ld)
                 : std::sqrt(2.0 / ld) * std::cos(M_PI * (k / ld) * (j - 0.5));
    }
    out.vectors.push_back(std::move(phi));
  }
  return out;
}

CheegerResult cheeger_check(const Eigen::MatrixXd& m, std::span<const double> eigs, double tol) {
  const auto n = m.rows();
  if (n < 2) throw std::invalid_argument("cheeger_check: cluster needs at least two vertices");
  if (static_cast<Eigen::Index>(eigs.size()) != n) {
    throw std::invalid_argument("cheeger_check: eigenvalue count does not match the matrix");
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> stack{0};
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m(i, j) != 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  if (reached != n) throw std::invalid_argument("cheeger_check: cluster is disconnected");
  std::vector<double> sorted(eigs.begin(), eigs.end());
  std::sort(sorted.begin(), sorted.end());
  CheegerResult r;
  r.e1 = sorted[1];
  r.bound = 1.0 / static_cast<double>(n * n);
  r.margin = r.e1 - r.bound;
  r.passes = r.e1 >= r.bound - tol;
  return r;
}

// IDS ---------------------------------------------------------------------------

double IdsTable::evaluate(double E) const {
  double sum = 0.0;
  for (const auto& [key, w] : steps) {
    if (key.second <= E) sum += w;
  }
  return sum;
}

namespace {

struct ShapeInfo {
  std::vector<double> values;
  std::optional<CheegerResult> cheeger;
};

class ShapeCache {
 public:
  std::optional<ShapeInfo> find(const CanonicalPattern& key) const {
    std::shared_lock lock(mu_);
    const auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void insert(CanonicalPattern key, ShapeInfo info) {
    std::unique_lock lock(mu_);
    if (map_.size() >= kMaxEntries) map_.clear();
    map_.emplace(std::move(key), std::move(info));
  }

 private:
  static constexpr std::size_t kMaxEntries = 500000;
  mutable std::shared_mutex mu_;
  std::map<CanonicalPattern, ShapeInfo> map_;
};

struct RealizationResult {
  std::vector<std::pair<std::pair<std::size_t, double>, double>> weights;  // sorted by key
  bool excluded = false;
  bool aborted = false;
  std::string diagnostic;
  CheegerStats cheeger;
};

void note_cheeger(CheegerStats& s, const CheegerResult& r) {
  s.min_margin = s.clusters == 0 ? r.margin : std::min(s.min_margin, r.margin);
  ++s.clusters;
  if (!r.passes) ++s.violations;
}

RealizationResult process_realization(const EmbeddedGraph& g, const PercolationParams& params,
                                      const IdsOptions& opts, std::size_t r, ShapeCache& cache) {
  RealizationResult out;
  const auto omega = sample(g, params, r);
  const auto dec = decompose(g, omega);
  const double n = opts.counting_radius;
  std::map<std::pair<std::size_t, double>, double> acc;
  std::vector<Coeffs> coords;
  std::vector<Edge> edges;

  for (std::int32_t c = 0; c < static_cast<std::int32_t>(dec.cluster_count()); ++c) {
    const auto members = dec.members(c);
    std::size_t inside = 0;
    for (VertexId v : members) inside += norm(g.position(v)) < n ? 1 : 0;
    if (inside == 0) continue;
    const std::size_t size = members.size();
    if (!opts.finite_graph && dec.touches_boundary(c)) {
      out.excluded = true;
      return out;
    }
    if (size > opts.size_cap) {
      out.aborted = true;
      std::ostringstream msg;
      msg << "realization " << r << ": cluster of " << size << " vertices exceeds the size cap "
          << opts.size_cap;
      out.diagnostic = msg.str();
      return out;
    }
    if (size == 1) {
      acc[{1, 0.0}] += 1.0;
      continue;
    }
    if (size == 2) {
      // eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2 put mass 1/2 on each vertex
      acc[{2, 0.0}] += 0.5 * static_cast<double>(inside);
      acc[{2, 2.0}] += 0.5 * static_cast<double>(inside);
      if (opts.cheeger) note_cheeger(out.cheeger, {true, 2.0, 0.25, 1.75});
      continue;
    }
    if (inside == size) {
      const auto order = coordinate_order(g, members);
      coords.clear();
      edges.clear();
      for (VertexId v : order) coords.push_back(g.coord(v));
      for (std::size_t i = 0; i < order.size(); ++i) {
        for (const auto& [w, e] : g.neighbours(order[i])) {
          if (!omega.is_open(e) || g.coord(w) <= g.coord(order[i])) continue;
          const auto it = std::lower_bound(
              order.begin(), order.end(), w,
              [&](VertexId a, VertexId b) { return g.coord(a) < g.coord(b); });
          edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(it - order.begin())});
        }
      }
      auto key = canonicalize(g.basis(), coords, edges);
      auto info = cache.find(key);
      if (!info) {
        const auto lap = cluster_laplacian(g, omega, members);
        const auto spec = eigenvalues(lap);
        info = ShapeInfo{spec.values, std::nullopt};
        if (opts.cheeger) info->cheeger = cheeger_check(lap, spec);
        cache.insert(std::move(key), *info);
      }
      for (double lambda : info->values) acc[{size, lambda}] += 1.0;
      if (opts.cheeger) {
        if (!info->cheeger) {
          info->cheeger = cheeger_check(cluster_laplacian(g, omega, members).matrix, info->values);
        }
        note_cheeger(out.cheeger, *info->cheeger);
      }
      continue;
    }
    // Cluster crossing the counting sphere: partial projector weights.
    const auto lap = cluster_laplacian(g, omega, members);
    const auto spec = eigenvalues(lap);
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
      double w = 0.0;
      for (std::size_t i = 0; i < lap.vertices.size(); ++i) {
        if (norm(g.position(lap.vertices[i])) < n) {
          const double phi = spec.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
          w += phi * phi;
        }
      }
      acc[{size, spec.values[k]}] += w;
    }
    if (opts.cheeger) note_cheeger(out.cheeger, cheeger_check(lap, spec));
  }
  out.weights.assign(acc.begin(), acc.end());
  return out;
}

// Running mean and variance, updated in realization order.
struct Welford {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double std_error() const {
    return count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count))
                     : 0.0;
  }
};

}  // namespace

IdsTable ids_estimate(const EmbeddedGraph& g, const PercolationParams& params,
                      const IdsOptions& opts) {
  params.validate();
  const double n = opts.counting_radius;
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("ids_estimate: counting radius must be positive");
  }
  for (std::size_t k = 0; k < opts.energies.size(); ++k) {
    if (!std::isfinite(opts.energies[k]) || (k > 0 && opts.energies[k] < opts.energies[k - 1])) {
      throw std::invalid_argument("ids_estimate: energies must be finite and ascending");
    }
  }
  if (!opts.finite_graph) {
    const double margin = opts.margin.value_or(20.0 * g.constants().l_max);
    const double support = distance_to_boundary(g.box(), {0.0, 0.0});
    if (n + margin > support) {
      std::ostringstream msg;
      msg << "ids_estimate: counting radius " << n << " plus margin " << margin
          << " exceeds the patch support " << support;
      throw std::invalid_argument(msg.str());
    }
  }

  IdsTable table;
  table.counting_radius = n;
  table.volume = ball_volume(n);
  table.p = params.p;
  table.seed = params.master_seed;
  table.realizations_requested = params.realizations;
  std::size_t inside = 0;
  for (const auto& x : g.positions()) inside += norm(x) < n ? 1 : 0;
  table.rho_hat = static_cast<double>(inside) / table.volume;

  const std::size_t ne = opts.energies.size();
  std::vector<Welford> stat_n(ne), stat_tail(ne);
  Welford stat_n0;
  ShapeCache cache;
  std::vector<double> grid(ne);

  const std::size_t block = std::max<std::size_t>(256, 16 * std::max(1u, opts.threads));
  std::vector<RealizationResult> results;
  for (std::size_t start = 0; start < params.realizations; start += block) {
    const std::size_t count = std::min(block, params.realizations - start);
    results.assign(count, {});
    parallel_for(count, opts.threads, [&](std::size_t i) {
      results[i] = process_realization(g, params, opts, start + i, cache);
    });
    for (auto& res : results) {
      if (res.excluded) {
        ++table.excluded_boundary;
        continue;
      }
      if (res.aborted) {
        ++table.aborted_oversize;
        if (table.diagnostics.size() < 20) table.diagnostics.push_back(res.diagnostic);
        continue;
      }
      ++table.realizations_used;
      if (opts.cheeger) {
        auto& cs = table.cheeger;
        if (res.cheeger.clusters > 0) {
          cs.min_margin = cs.clusters == 0 ? res.cheeger.min_margin
                                           : std::min(cs.min_margin, res.cheeger.min_margin);
        }
        cs.clusters += res.cheeger.clusters;
        cs.violations += res.cheeger.violations;
      }
      // weights are sorted by (size, eigenvalue); re-sort by eigenvalue for the sweep
      std::vector<std::pair<double, double>> byE;
      byE.reserve(res.weights.size());
      for (const auto& [key, w] : res.weights) byE.emplace_back(key.second, w);
      std::sort(byE.begin(), byE.end());
      double zero = 0.0;
      for (const auto& [lambda, w] : byE) {
        if (lambda <= 0.0) zero += w;
      }
      zero /= table.volume;
      std::size_t j = 0;
      double running = 0.0;
      for (std::size_t k = 0; k < ne; ++k) {
        while (j < byE.size() && byE[j].first <= opts.energies[k]) running += byE[j++].second;
        grid[k] = running / table.volume;
      }
      stat_n0.add(zero);
      for (std::size_t k = 0; k < ne; ++k) {
        stat_n[k].add(grid[k]);
        stat_tail[k].add(grid[k] - zero);
      }
      if (opts.keep_steps) {
        for (const auto& [key, w] : res.weights) table.steps[key] += w;
      }
    }
  }
  if (table.realizations_used == 0) {
    std::ostringstream msg;
    msg << "ids_estimate: no usable realization (" << table.excluded_boundary
        << " reached the patch boundary, " << table.aborted_oversize << " exceeded the size cap)";
    throw std::runtime_error(msg.str());
  }
  const double used = static_cast<double>(table.realizations_used);
  for (auto& [key, w] : table.steps) w /= used * table.volume;
  table.n0 = stat_n0.mean;
  table.n0_std_error = stat_n0.std_error();
  for (std::size_t k = 0; k < ne; ++k) {
    table.rows.push_back({opts.energies[k], stat_n[k].mean, stat_n[k].std_error(),
                          stat_tail[k].mean, stat_tail[k].std_error()});
  }
  return table;
}

std::vector<double> bruteforce_ids_oracle(const EmbeddedGraph& g, double p,
                                          std::span<const double> energies,
                                          double counting_radius) {
  return bruteforce_ids_moments(g, p, energies, counting_radius).mean;
}

IdsMoments bruteforce_ids_moments(const EmbeddedGraph& g, double p,
                                  std::span<const double> energies, double counting_radius) {
  const std::size_t m = g.edge_count();
  if (m > kIdsOracleMaxEdges) {
    throw std::invalid_argument("bruteforce_ids_oracle: " + std::to_string(m) +
                                " edges exceed the enumeration limit of " +
                                std::to_string(kIdsOracleMaxEdges));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bruteforce_ids_oracle: p outside [0, 1]");
  const double vol = ball_volume(counting_radius);
  std::vector<char> inside(g.vertex_count());
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    inside[v] = norm(g.positions()[v]) < counting_radius ? 1 : 0;
  }
  std::vector<double> out(energies.size(), 0.0);
  std::vector<double> n(energies.size());
  // per-configuration counts, kept for a second pass over the variance
  std::vector<std::pair<double, std::vector<double>>> samples;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<bool> open(m);
    std::size_t k_open = 0;
    for (std::size_t e = 0; e < m; ++e) {
      open[e] = (mask >> e) & 1u;
      k_open += open[e] ? 1 : 0;
    }
    const double weight = std::pow(p, static_cast<double>(k_open)) *
                          std::pow(1.0 - p, static_cast<double>(m - k_open));
    if (weight == 0.0) continue;
    const BondConfiguration omega(g, open, 0, mask);
    const auto spec = eigenvalues(full_laplacian(g, &omega));
    std::fill(n.begin(), n.end(), 0.0);
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
      double mass = 0.0;
      for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (!inside[v]) continue;
        const double phi = spec.vectors(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k));
        mass += phi * phi;
      }
      for (std::size_t j = 0; j < energies.size(); ++j) {
        if (spec.values[k] <= energies[j]) n[j] += mass / vol;
      }
    }
    for (std::size_t j = 0; j < energies.size(); ++j) {
      out[j] += weight * n[j];
    }
    samples.emplace_back(weight, n);
  }
  IdsMoments res{out, std::vector<double>(energies.size(), 0.0)};
  for (const auto& [weight, counts] : samples) {
    for (std::size_t j = 0; j < energies.size(); ++j) {
      const double d = counts[j] - out[j];
      res.variance[j] += weight * d * d;
    }
  }
  return res;
}

}  // namespace qperc
