#pragma once
// Bernoulli bond percolation on embedded graphs: seeded sampling, cluster
// decomposition, Monte Carlo cluster statistics, the closed-form decay
// constants for the subcritical regime, and an exact enumeration oracle.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qperc/graph.hpp"

namespace qperc {

struct PercolationParams {
  double p = 0.0;
  std::uint64_t master_seed = 0;
  std::size_t realizations = 1;

  /// Throws std::invalid_argument unless 0 <= p <= 1 and realizations > 0.
  void validate() const;
};

/// One realization omega over the edges of a graph (true = open).
class BondConfiguration {
 public:
  BondConfiguration(const EmbeddedGraph& g, std::vector<bool> open, std::uint64_t seed,
                    std::uint64_t realization)
      : graph_(&g), open_(std::move(open)), seed_(seed), realization_(realization) {}

  /// Every edge open (or closed); provenance is zero.
  static BondConfiguration uniform(const EmbeddedGraph& g, bool open) {
    return {g, std::vector<bool>(g.edge_count(), open), 0, 0};
  }

  const EmbeddedGraph& graph() const { return *graph_; }
  bool is_open(EdgeId e) const { return open_[static_cast<std::size_t>(e)]; }
  const std::vector<bool>& bits() const { return open_; }
  std::size_t size() const { return open_.size(); }
  std::size_t open_count() const;
  std::uint64_t seed() const { return seed_; }
  std::uint64_t realization() const { return realization_; }

 private:
  const EmbeddedGraph* graph_;
  std::vector<bool> open_;
  std::uint64_t seed_;
  std::uint64_t realization_;
};

/// Edge e is open iff bond_uniform(seed, realization, e) < p, so configurations
/// for different p drawn from the same seed are monotonically coupled.
BondConfiguration sample(const EmbeddedGraph& g, const PercolationParams& params,
                         std::uint64_t realization);

/// Connected components of G^(omega). Cluster ids are assigned in order of
/// each cluster's smallest vertex; members are stored ascending.
class ClusterDecomposition {
 public:
  std::size_t cluster_count() const { return offsets_.size() - 1; }
  std::int32_t cluster_of(VertexId v) const { return cluster_of_[static_cast<std::size_t>(v)]; }
  std::span<const VertexId> members(std::int32_t c) const {
    const auto b = offsets_[static_cast<std::size_t>(c)];
    const auto e = offsets_[static_cast<std::size_t>(c) + 1];
    return {members_.data() + b, e - b};
  }
  std::size_t size(std::int32_t c) const { return members(c).size(); }
  std::size_t size_of_cluster_containing(VertexId v) const { return size(cluster_of(v)); }
  /// Some member lies within l_max of the patch boundary.
  bool touches_boundary(std::int32_t c) const {
    return touches_boundary_[static_cast<std::size_t>(c)] != 0;
  }

 private:
  friend ClusterDecomposition decompose(const EmbeddedGraph&, const BondConfiguration&);
  std::vector<std::int32_t> cluster_of_;
  std::vector<std::size_t> offsets_{0};
  std::vector<VertexId> members_;
  std::vector<std::uint8_t> touches_boundary_;
};

ClusterDecomposition decompose(const EmbeddedGraph& g, const BondConfiguration& omega);

/// True when v is within l_max of the boundary of g's generation region.
bool near_boundary(const EmbeddedGraph& g, VertexId v);

// Monte Carlo statistics -----------------------------------------------------

struct StatOptions {
  /// Explicit sample vertices; when unset, vertices farther than `margin`
  /// from the patch boundary are used.
  std::optional<std::vector<VertexId>> vertices;
  /// Interior margin; defaults depend on the statistic.
  std::optional<double> margin;
  unsigned threads = 1;
};

struct StatRow {
  double n = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct StatSeries {
  std::vector<StatRow> rows;
  std::size_t realizations = 0;
  std::size_t sample_vertices = 0;  // per realization
  bool truncated = false;           // no feasible sample vertices
};

/// P(|C_v| >= n) averaged over sample vertices; default margin
/// max(n_values) * l_max. Throws std::runtime_error without interior vertices.
StatSeries cluster_size_tail(const EmbeddedGraph& g, const PercolationParams& params,
                             std::span<const double> n_values, const StatOptions& opts = {});

/// P(v is joined by an open path to the complement of B_n(v)). Returns zeros
/// with `truncated` set when no vertex has room for the largest n.
StatSeries boundary_path_probability(const EmbeddedGraph& g, const PercolationParams& params,
                                     std::span<const double> n_values,
                                     const StatOptions& opts = {});

struct MeanEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t realizations = 0;
  std::size_t sample_vertices = 0;
};

/// E|C_v| over sample vertices; default margin 10 * l_max.
MeanEstimate mean_cluster_size(const EmbeddedGraph& g, const PercolationParams& params,
                               const StatOptions& opts = {});

// Closed-form constants ------------------------------------------------------

struct BoundsReport {
  double p = 0.0;
  int d_max = 0;
  double l_max = 0.0;
  double p_c_lower = 0.0;      // 1 / (d_max - 1)
  double psi_decay = 0.0;      // ln(1 / (p (d_max - 1))) / l_max
  double gamma = 0.0;          // -ln p - d_max ln(1 - p)
  std::optional<double> chi;   // mean cluster size used for lambda
  std::optional<double> lambda_decay;  // 1 / (2 chi^2)
  bool lambda_empirical = false;
  double prefactor_d = 2.0;
  bool subcritical = false;    // p (d_max - 1) < 1
};

/// Throws std::invalid_argument for d_max < 2, p outside [0,1] or l_max <= 0.
BoundsReport bounds_report(double p, int d_max, double l_max,
                           std::optional<double> chi_hat = std::nullopt);

// Exact oracle -----------------------------------------------------------------

struct ClusterOracle {
  /// size_pmf[v][s] = P(|C_v| = s)
  std::vector<std::vector<double>> size_pmf;
  /// reach_pmf[v][d] = P(max_{w in C_v} |w - v| = d)
  std::vector<std::map<double, double>> reach_pmf;
  double expected_cluster_count = 0.0;

  double size_tail(VertexId v, double n) const;
  double mean_size(VertexId v) const;
  double reach_tail(VertexId v, double n) const;
};

inline constexpr std::size_t kOracleMaxEdges = 20;

/// Exact expectations by enumerating all 2^|E| configurations.
/// Throws std::invalid_argument for more than kOracleMaxEdges edges.
ClusterOracle bruteforce_cluster_oracle(const EmbeddedGraph& g, double p);

}  // namespace qperc
