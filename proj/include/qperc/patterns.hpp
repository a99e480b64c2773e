#pragma once
// Patterns up to exact translation: census of r-patterns (finite local
// complexity), occurrence counts and frequencies, vertex densities, coloured
// pattern frequencies under percolation, and the patch-level graph metric.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qperc/graph.hpp"
#include "qperc/percolation.hpp"

namespace qperc {

/// Translation-normalized finite subgraph. Vertices are sorted and shifted so
/// that the least one is zero; edges are sorted local index pairs. A coloured
/// pattern carries one colour per edge (1 = open, 0 = closed).
struct CanonicalPattern {
  Basis basis = Basis::square;
  std::vector<Coeffs> vertices;
  std::vector<Edge> edges;
  std::vector<std::uint8_t> colours;  // empty, or one entry per edge

  bool coloured() const { return !colours.empty(); }
  std::size_t open_edges() const;
  std::size_t closed_edges() const { return colours.empty() ? 0 : edges.size() - open_edges(); }

  friend auto operator<=>(const CanonicalPattern&, const CanonicalPattern&) = default;
  friend bool operator==(const CanonicalPattern&, const CanonicalPattern&) = default;
};

/// Canonical form of an arbitrary pattern. `colours`, when non-empty, is
/// aligned with `edges`. Throws std::invalid_argument for an empty vertex list
/// or malformed edges.
CanonicalPattern canonicalize(Basis basis, std::span<const Coeffs> vertices,
                              std::span<const Edge> edges,
                              std::span<const std::uint8_t> colours = {});
CanonicalPattern canonicalize(const CanonicalPattern& p);
CanonicalPattern translate_pattern(const CanonicalPattern& p, const Coeffs& by);

/// Induced pattern of g on the given vertex subset, optionally coloured by omega.
CanonicalPattern pattern_of(const EmbeddedGraph& g, std::span<const VertexId> vertices,
                            const BondConfiguration* omega = nullptr);
/// Pattern as a standalone graph (box: ball around its embedded vertices).
EmbeddedGraph pattern_graph(const CanonicalPattern& p);

struct Census {
  double radius = 0.0;
  std::size_t centers = 0;
  std::map<CanonicalPattern, std::size_t> counts;
  std::size_t distinct() const { return counts.size(); }
};

/// r-pattern census over vertices whose distance to the patch boundary
/// exceeds `radius`. `max_center_radius`, when set, further restricts centers
/// to |v| < max_center_radius. Throws std::runtime_error without eligible centers.
Census extract_r_patterns(const EmbeddedGraph& g, double radius,
                          std::optional<double> max_center_radius = std::nullopt);

/// Number of exact translates x with x + P contained in G restricted to B_n
/// (vertices, edges and, for coloured patterns, the colours under omega).
std::size_t count_occurrences(const CanonicalPattern& p, const EmbeddedGraph& g, double n,
                              const BondConfiguration* omega = nullptr);

struct FrequencyRow {
  double radius = 0.0;
  std::size_t count = 0;
  double volume = 0.0;
  double frequency = 0.0;
};

struct FrequencyReport {
  CanonicalPattern pattern;
  std::vector<FrequencyRow> rows;
  double nu = 0.0;          // mean normalized frequency over the last quartile of radii
  double half_width = 0.0;  // half the spread over the same quartile
};

/// Requires increasing radii no larger than the patch allows.
FrequencyReport frequency_series(const CanonicalPattern& p, const EmbeddedGraph& g,
                                 std::span<const double> radii);
FrequencyReport coloured_frequency(const CanonicalPattern& p, const EmbeddedGraph& g,
                                   const BondConfiguration& omega, std::span<const double> radii);

struct LowerFrequencyResult {
  CanonicalPattern pattern;
  double min_tail_frequency = 0.0;  // minimum over the second half of the radius series
  bool passes = false;
};

std::vector<LowerFrequencyResult> positive_lower_frequency_check(
    const EmbeddedGraph& g, std::span<const CanonicalPattern> patterns,
    std::span<const double> radii);

struct DensityRow {
  double radius = 0.0;
  double rho = 0.0;
  double rho_inf = 0.0;
};

struct DensityReport {
  double rho = 0.0;      // value at the largest radius
  double rho_inf = 0.0;  // vertices in clusters of G that reach the patch boundary
  std::vector<DensityRow> rows;
};

/// Radii must not exceed the patch support minus `safety * l_max`.
DensityReport density_report(const EmbeddedGraph& g, std::span<const double> radii,
                             double safety = 1.0);

struct FactorizationCheck {
  double coloured_frequency = 0.0;  // mean over realizations
  double std_error = 0.0;
  double uncoloured_frequency = 0.0;
  double predicted = 0.0;           // uncoloured * p^open * (1-p)^closed
  double z_score = 0.0;
  std::size_t realizations = 0;
};

/// Monte Carlo estimate of the coloured frequency at radius n compared with
/// the product of the uncoloured frequency and the colouring's probability.
FactorizationCheck factorization_check(const CanonicalPattern& coloured, const EmbeddedGraph& g,
                                       const PercolationParams& params, double n,
                                       unsigned threads = 1);

/// Patch-level version of the hull metric: min(2^-1/2, inf eps) over exact
/// relative shifts between vertices within `shift_search_radius` of the
/// origin. Found by bisection on eps; agreement beyond either patch is never
/// assumed, so identical graphs give 1 / (patch radius).
/// Throws std::invalid_argument for graphs in different bases.
double graph_distance(const EmbeddedGraph& g1, const EmbeddedGraph& g2,
                      double shift_search_radius);

std::string pattern_to_string(const CanonicalPattern& p);
CanonicalPattern pattern_from_string(const std::string& text);

}  // namespace qperc
