#pragma once
// Finite patches of graphs embedded in the plane.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qperc/geometry.hpp"

namespace qperc {

using VertexId = std::int32_t;
using EdgeId = std::int32_t;

struct Edge {
  VertexId u = 0;  // u < v
  VertexId v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Constants of the infinite graph a patch was cut from.
struct GeometryConstants {
  double r = 0.0;                      // uniform-discreteness radius
  std::optional<double> r_dense;       // relative-denseness radius, if known
  double l_max = 0.0;                  // maximal edge length
  int d_max = 0;                       // maximal vertex degree
};

/// Immutable finite graph with exact vertex coordinates. Vertex positions are
/// `origin + embed(coeffs)`; `origin` is a real frame offset that is zero for
/// generated graphs.
class EmbeddedGraph {
 public:
  EmbeddedGraph() = default;
  /// Validates edges (no self-loops, no duplicates, endpoints in range) and
  /// normalizes them to sorted order. Throws std::invalid_argument.
  EmbeddedGraph(Basis basis, std::vector<Coeffs> vertices, std::vector<Edge> edges,
                Region box, GeometryConstants constants, Vec2 origin = {});

  Basis basis() const { return basis_; }
  std::size_t vertex_count() const { return coords_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Coeffs>& coords() const { return coords_; }
  const Coeffs& coord(VertexId v) const { return coords_[static_cast<std::size_t>(v)]; }
  ExactCoord exact(VertexId v) const { return {basis_, coord(v)}; }
  Vec2 position(VertexId v) const { return positions_[static_cast<std::size_t>(v)]; }
  const std::vector<Vec2>& positions() const { return positions_; }
  Vec2 origin() const { return origin_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Neighbours of v as (neighbour, edge id) pairs, ascending by neighbour.
  std::span<const std::pair<VertexId, EdgeId>> neighbours(VertexId v) const {
    const auto b = adj_offsets_[static_cast<std::size_t>(v)];
    const auto e = adj_offsets_[static_cast<std::size_t>(v) + 1];
    return {adj_.data() + b, e - b};
  }
  int degree(VertexId v) const { return static_cast<int>(neighbours(v).size()); }

  std::optional<VertexId> find(const Coeffs& c) const;
  std::optional<EdgeId> find_edge(VertexId a, VertexId b) const;

  const Region& box() const { return box_; }
  const GeometryConstants& constants() const { return constants_; }

  /// Distance from v to the boundary of the generation region.
  double boundary_distance(VertexId v) const { return distance_to_boundary(box_, position(v)); }

  /// Same vertex list, edges and basis (box and constants are metadata).
  friend bool operator==(const EmbeddedGraph& a, const EmbeddedGraph& b) {
    return a.basis_ == b.basis_ && a.coords_ == b.coords_ && a.edges_ == b.edges_ &&
           a.origin_ == b.origin_;
  }

 private:
  Basis basis_ = Basis::square;
  std::vector<Coeffs> coords_;
  std::vector<Vec2> positions_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adj_offsets_{0};
  std::vector<std::pair<VertexId, EdgeId>> adj_;
  std::unordered_map<Coeffs, VertexId, CoeffsHash> index_;
  Region box_ = Ball{};
  GeometryConstants constants_;
  Vec2 origin_{};
};

/// Induced subgraph on the vertices inside `region`; the result's box is `region`.
EmbeddedGraph restrict(const EmbeddedGraph& g, const Region& region);
/// Induced subgraph on the vertices selected by `keep(position)`.
EmbeddedGraph restrict_if(const EmbeddedGraph& g, const std::function<bool(Vec2)>& keep,
                          const Region& new_box);

/// Exact translation by a module vector; the box moves along.
EmbeddedGraph translate(const EmbeddedGraph& g, const Coeffs& by);
/// Exact translation by a real vector. Throws std::invalid_argument when the
/// vector is not in the graph's module.
EmbeddedGraph translate(const EmbeddedGraph& g, Vec2 by);
/// Moves the real frame origin without touching the exact coordinates.
EmbeddedGraph offset_frame(const EmbeddedGraph& g, Vec2 by);

struct GeometryReport {
  double r = 0.0;         // half the minimal pairwise distance; +inf for < 2 vertices
  double min_separation = 0.0;
  double l_max = 0.0;     // 0 when there are no edges
  int d_max = 0;
  std::map<int, std::size_t> degree_histogram;
  std::size_t vertex_count = 0;
  std::size_t edge_count = 0;
};

GeometryReport geometry_report(const EmbeddedGraph& g);

/// Builds a graph and fills its constants from a geometry scan.
EmbeddedGraph make_graph(Basis basis, std::vector<Coeffs> vertices, std::vector<Edge> edges,
                         Region box);

/// Uniform cell grid over vertex positions for radius queries.
class SpatialIndex {
 public:
  SpatialIndex(const std::vector<Vec2>& points, double cell);
  /// Indices i with |points[i] - c| < radius, ascending.
  std::vector<VertexId> query(Vec2 c, double radius) const;
  void query(Vec2 c, double radius, std::vector<VertexId>& out) const;
  /// Minimal pairwise distance (+inf when fewer than two points).
  double min_pair_distance() const;

 private:
  std::pair<long, long> cell_of(Vec2 p) const;
  std::vector<Vec2> points_;
  double cell_;
  Vec2 lo_{};
  long nx_ = 0;
  long ny_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<VertexId> items_;
};

}  // namespace qperc
