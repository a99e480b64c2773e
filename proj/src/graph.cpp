#include "qperc/graph.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace qperc {

EmbeddedGraph::EmbeddedGraph(Basis basis, std::vector<Coeffs> vertices, std::vector<Edge> edges,
                             Region box, GeometryConstants constants, Vec2 origin)
    : basis_(basis),
      coords_(std::move(vertices)),
      edges_(std::move(edges)),
      box_(box),
      constants_(constants),
      origin_(origin) {
  const auto n = static_cast<VertexId>(coords_.size());
  positions_.reserve(coords_.size());
  index_.reserve(coords_.size());
  for (VertexId i = 0; i < n; ++i) {
    positions_.push_back(origin_ + embed(basis_, coords_[static_cast<std::size_t>(i)]));
    if (!index_.emplace(coords_[static_cast<std::size_t>(i)], i).second) {
      throw std::invalid_argument("duplicate vertex coordinate at index " + std::to_string(i));
    }
  }
  for (auto& e : edges_) {
    if (e.u == e.v) throw std::invalid_argument("self-loop at vertex " + std::to_string(e.u));
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw std::invalid_argument("edge endpoint out of range: " + std::to_string(e.u) + " " +
                                  std::to_string(e.v));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw std::invalid_argument("duplicate edge");
  }

  std::vector<std::size_t> deg(coords_.size() + 1, 0);
  for (const auto& e : edges_) {
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  adj_offsets_.assign(coords_.size() + 1, 0);
  for (std::size_t i = 0; i < coords_.size(); ++i) adj_offsets_[i + 1] = adj_offsets_[i] + deg[i];
  adj_.resize(adj_offsets_.back());
  std::vector<std::size_t> fill(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const auto id = static_cast<EdgeId>(k);
    adj_[fill[static_cast<std::size_t>(e.u)]++] = {e.v, id};
    adj_[fill[static_cast<std::size_t>(e.v)]++] = {e.u, id};
  }
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    std::sort(adj_.begin() + static_cast<std::ptrdiff_t>(adj_offsets_[i]),
              adj_.begin() + static_cast<std::ptrdiff_t>(adj_offsets_[i + 1]));
  }
}

std::optional<VertexId> EmbeddedGraph::find(const Coeffs& c) const {
  if (auto it = index_.find(c); it != index_.end()) return it->second;
  return std::nullopt;
}

std::optional<EdgeId> EmbeddedGraph::find_edge(VertexId a, VertexId b) const {
  for (const auto& [w, e] : neighbours(a)) {
    if (w == b) return e;
  }
  return std::nullopt;
}

EmbeddedGraph restrict_if(const EmbeddedGraph& g, const std::function<bool(Vec2)>& keep,
                          const Region& new_box) {
  std::vector<VertexId> remap(g.vertex_count(), -1);
  std::vector<Coeffs> coords;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    if (keep(g.position(v))) {
      remap[static_cast<std::size_t>(v)] = static_cast<VertexId>(coords.size());
      coords.push_back(g.coord(v));
    }
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const auto a = remap[static_cast<std::size_t>(e.u)];
    const auto b = remap[static_cast<std::size_t>(e.v)];
    if (a >= 0 && b >= 0) edges.push_back({a, b});
  }
  return EmbeddedGraph(g.basis(), std::move(coords), std::move(edges), new_box, g.constants(),
                       g.origin());
}

EmbeddedGraph restrict(const EmbeddedGraph& g, const Region& region) {
  return restrict_if(g, [&](Vec2 p) { return contains(region, p); }, region);
}

EmbeddedGraph translate(const EmbeddedGraph& g, const Coeffs& by) {
  std::vector<Coeffs> coords = g.coords();
  for (auto& c : coords) c = c + by;
  const Vec2 shift = embed(g.basis(), by);
  return EmbeddedGraph(g.basis(), std::move(coords), g.edges(), shifted(g.box(), shift),
                       g.constants(), g.origin());
}

EmbeddedGraph translate(const EmbeddedGraph& g, Vec2 by) {
  return translate(g, exact_translation(g.basis(), by));
}

EmbeddedGraph offset_frame(const EmbeddedGraph& g, Vec2 by) {
  return EmbeddedGraph(g.basis(), g.coords(), g.edges(), shifted(g.box(), by), g.constants(),
                       g.origin() + by);
}

GeometryReport geometry_report(const EmbeddedGraph& g) {
  GeometryReport rep;
  rep.vertex_count = g.vertex_count();
  rep.edge_count = g.edge_count();
  for (const auto& e : g.edges()) {
    rep.l_max = std::max(rep.l_max, distance(g.position(e.u), g.position(e.v)));
  }
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    const int d = g.degree(v);
    rep.d_max = std::max(rep.d_max, d);
    ++rep.degree_histogram[d];
  }
  if (g.vertex_count() < 2) {
    rep.min_separation = std::numeric_limits<double>::infinity();
  } else {
    const double cell = rep.l_max > 0.0 ? rep.l_max : 1.0;
    rep.min_separation = SpatialIndex(g.positions(), cell).min_pair_distance();
  }
  rep.r = rep.min_separation / 2.0;
  return rep;
}

EmbeddedGraph make_graph(Basis basis, std::vector<Coeffs> vertices, std::vector<Edge> edges,
                         Region box) {
  EmbeddedGraph tmp(basis, std::move(vertices), std::move(edges), box, {});
  const auto rep = geometry_report(tmp);
  GeometryConstants c;
  c.r = rep.r;
  c.l_max = rep.l_max;
  c.d_max = rep.d_max;
  return EmbeddedGraph(basis, tmp.coords(), tmp.edges(), box, c);
}

// SpatialIndex ----------------------------------------------------------------

SpatialIndex::SpatialIndex(const std::vector<Vec2>& points, double cell)
    : points_(points), cell_(cell) {
  if (!(cell_ > 0.0)) throw std::invalid_argument("spatial index cell must be positive");
  if (points_.empty()) {
    offsets_.assign(1, 0);
    return;
  }
  Vec2 lo = points_.front();
  Vec2 hi = lo;
  for (const auto& p : points_) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  lo_ = lo;
  nx_ = static_cast<long>((hi.x - lo.x) / cell_) + 1;
  ny_ = static_cast<long>((hi.y - lo.y) / cell_) + 1;
  // Very sparse point sets would waste memory on empty cells; coarsen.
  while (static_cast<double>(nx_) * static_cast<double>(ny_) >
         4.0 * static_cast<double>(points_.size()) + 64.0) {
    cell_ *= 2.0;
    nx_ = static_cast<long>((hi.x - lo.x) / cell_) + 1;
    ny_ = static_cast<long>((hi.y - lo.y) / cell_) + 1;
  }
  const auto ncell = static_cast<std::size_t>(nx_ * ny_);
  offsets_.assign(ncell + 1, 0);
  std::vector<std::size_t> which(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto [cx, cy] = cell_of(points_[i]);
    which[i] = static_cast<std::size_t>(cy * nx_ + cx);
    ++offsets_[which[i] + 1];
  }
  for (std::size_t k = 0; k < ncell; ++k) offsets_[k + 1] += offsets_[k];
  items_.resize(points_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    items_[fill[which[i]]++] = static_cast<VertexId>(i);
  }
}

std::pair<long, long> SpatialIndex::cell_of(Vec2 p) const {
  const long cx = std::clamp(static_cast<long>(std::floor((p.x - lo_.x) / cell_)), 0L, nx_ - 1);
  const long cy = std::clamp(static_cast<long>(std::floor((p.y - lo_.y) / cell_)), 0L, ny_ - 1);
  return {cx, cy};
}

void SpatialIndex::query(Vec2 c, double radius, std::vector<VertexId>& out) const {
  out.clear();
  if (points_.empty() || !(radius > 0.0)) return;
  const long x0 = std::max(0L, static_cast<long>(std::floor((c.x - radius - lo_.x) / cell_)));
  const long x1 = std::min(nx_ - 1, static_cast<long>(std::floor((c.x + radius - lo_.x) / cell_)));
  const long y0 = std::max(0L, static_cast<long>(std::floor((c.y - radius - lo_.y) / cell_)));
  const long y1 = std::min(ny_ - 1, static_cast<long>(std::floor((c.y + radius - lo_.y) / cell_)));
  const double r2 = radius * radius;
  for (long cy = y0; cy <= y1; ++cy) {
    for (long cx = x0; cx <= x1; ++cx) {
      const auto k = static_cast<std::size_t>(cy * nx_ + cx);
      for (std::size_t j = offsets_[k]; j < offsets_[k + 1]; ++j) {
        const Vec2 d = points_[static_cast<std::size_t>(items_[j])] - c;
        if (d.x * d.x + d.y * d.y < r2) out.push_back(items_[j]);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<VertexId> SpatialIndex::query(Vec2 c, double radius) const {
  std::vector<VertexId> out;
  query(c, radius, out);
  return out;
}

double SpatialIndex::min_pair_distance() const {
  double best = std::numeric_limits<double>::infinity();
  if (points_.size() < 2) return best;
  // Neighbouring cells are exact whenever the answer is below one cell width.
  for (long cy = 0; cy < ny_; ++cy) {
    for (long cx = 0; cx < nx_; ++cx) {
      const auto k = static_cast<std::size_t>(cy * nx_ + cx);
      for (std::size_t a = offsets_[k]; a < offsets_[k + 1]; ++a) {
        const Vec2 pa = points_[static_cast<std::size_t>(items_[a])];
        for (long dy = -1; dy <= 1; ++dy) {
          for (long dx = -1; dx <= 1; ++dx) {
            const long ox = cx + dx;
            const long oy = cy + dy;
            if (ox < 0 || oy < 0 || ox >= nx_ || oy >= ny_) continue;
            const auto m = static_cast<std::size_t>(oy * nx_ + ox);
            for (std::size_t b = offsets_[m]; b < offsets_[m + 1]; ++b) {
              if (items_[b] <= items_[a]) continue;
              best = std::min(best, distance(pa, points_[static_cast<std::size_t>(items_[b])]));
            }
          }
        }
      }
    }
  }
  if (best <= cell_) return best;
  // Fall back to the full scan.
  for (std::size_t a = 0; a < points_.size(); ++a) {
    for (std::size_t b = a + 1; b < points_.size(); ++b) {
      best = std::min(best, distance(points_[a], points_[b]));
    }
  }
  return best;
}

}  // namespace qperc
