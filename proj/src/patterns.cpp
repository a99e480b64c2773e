#include "qperc/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qperc/parallel.hpp"

namespace qperc {

std::size_t CanonicalPattern::open_edges() const {
  return static_cast<std::size_t>(std::count(colours.begin(), colours.end(), std::uint8_t{1}));
}

CanonicalPattern canonicalize(Basis basis, std::span<const Coeffs> vertices,
                              std::span<const Edge> edges, std::span<const std::uint8_t> colours) {
  if (vertices.empty()) throw std::invalid_argument("pattern has no vertices");
  if (!colours.empty() && colours.size() != edges.size()) {
    throw std::invalid_argument("pattern colouring does not match its edge count");
  }
  const std::size_t n = vertices.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vertices[a] < vertices[b]; });
  std::vector<VertexId> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<VertexId>(i);

  CanonicalPattern p;
  p.basis = basis;
  const Coeffs least = vertices[order[0]];
  p.vertices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && vertices[order[i]] == vertices[order[i - 1]]) {
      throw std::invalid_argument("pattern has duplicate vertices");
    }
    p.vertices.push_back(vertices[order[i]] - least);
  }

  std::vector<std::pair<Edge, std::uint8_t>> es;
  es.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n ||
        static_cast<std::size_t>(e.v) >= n) {
      throw std::invalid_argument("pattern edge endpoint out of range");
    }
    if (e.u == e.v) throw std::invalid_argument("pattern edge is a self-loop");
    const std::uint8_t c = colours.empty() ? 0 : colours[k];
    if (c > 1) throw std::invalid_argument("pattern colour must be 0 or 1");
    VertexId a = rank[static_cast<std::size_t>(e.u)];
    VertexId b = rank[static_cast<std::size_t>(e.v)];
    if (a > b) std::swap(a, b);
    es.push_back({Edge{a, b}, c});
  }
  std::sort(es.begin(), es.end());
  for (std::size_t k = 1; k < es.size(); ++k) {
    if (es[k].first == es[k - 1].first) throw std::invalid_argument("pattern has duplicate edges");
  }
  for (const auto& [e, c] : es) {
    p.edges.push_back(e);
    if (!colours.empty()) p.colours.push_back(c);
  }
  return p;
}

CanonicalPattern canonicalize(const CanonicalPattern& p) {
  return canonicalize(p.basis, p.vertices, p.edges, p.colours);
}

CanonicalPattern translate_pattern(const CanonicalPattern& p, const Coeffs& by) {
  CanonicalPattern q = p;
  for (auto& c : q.vertices) c = c + by;
  return q;
}

CanonicalPattern pattern_of(const EmbeddedGraph& g, std::span<const VertexId> vertices,
                            const BondConfiguration* omega) {
  std::unordered_map<VertexId, VertexId> local;
  std::vector<Coeffs> coords;
  coords.reserve(vertices.size());
  for (const VertexId v : vertices) {
    local.emplace(v, static_cast<VertexId>(coords.size()));
    coords.push_back(g.coord(v));
  }
  std::vector<Edge> edges;
  std::vector<std::uint8_t> colours;
  for (const VertexId v : vertices) {
    for (const auto& [w, e] : g.neighbours(v)) {
      if (w <= v) continue;
      const auto it = local.find(w);
      if (it == local.end()) continue;
      edges.push_back({local.at(v), it->second});
      if (omega) colours.push_back(omega->is_open(e) ? 1 : 0);
    }
  }
  return canonicalize(g.basis(), coords, edges, colours);
}

EmbeddedGraph pattern_graph(const CanonicalPattern& p) {
  double reach = 0.0;
  for (const auto& c : p.vertices) reach = std::max(reach, norm(embed(p.basis, c)));
  return make_graph(p.basis, p.vertices, p.edges, Ball{{0.0, 0.0}, reach + 1.0});
}

// Census -------------------------------------------------------------------------

Census extract_r_patterns(const EmbeddedGraph& g, double radius,
                          std::optional<double> max_center_radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("census radius must be positive and finite");
  }
  Census census;
  census.radius = radius;
  const SpatialIndex index(g.positions(), radius);
  std::vector<VertexId> ball;
  std::vector<Coeffs> coords;
  std::vector<Edge> edges;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    if (!(g.boundary_distance(v) > radius)) continue;
    if (max_center_radius && !(norm(g.position(v)) < *max_center_radius)) continue;
    index.query(g.position(v), radius, ball);
    coords.clear();
    edges.clear();
    for (const VertexId w : ball) coords.push_back(g.coord(w) - g.coord(v));
    for (std::size_t i = 0; i < ball.size(); ++i) {
      for (const auto& [w, e] : g.neighbours(ball[i])) {
        if (w <= ball[i]) continue;
        const auto it = std::lower_bound(ball.begin(), ball.end(), w);
        if (it != ball.end() && *it == w) {
          edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(it - ball.begin())});
        }
      }
    }
    ++census.counts[canonicalize(g.basis(), coords, edges)];
    ++census.centers;
  }
  if (census.centers == 0) {
    std::ostringstream msg;
    msg << "no vertex lies farther than " << radius
        << " from the patch boundary; the census is empty";
    throw std::runtime_error(msg.str());
  }
  return census;
}

// Occurrences --------------------------------------------------------------------

namespace {

// Places the pattern's least vertex on anchor a. On success returns the
// largest |position| over the image and fills the image's edge ids.
std::optional<double> match_at(const CanonicalPattern& p, const EmbeddedGraph& g, VertexId a,
                               const BondConfiguration* omega, std::vector<VertexId>& image,
                               std::vector<EdgeId>* edge_ids = nullptr) {
  image.clear();
  double reach = 0.0;
  const Coeffs base = g.coord(a);
  for (const auto& c : p.vertices) {
    const auto w = g.find(base + c);
    if (!w) return std::nullopt;
    image.push_back(*w);
    reach = std::max(reach, norm(g.position(*w)));
  }
  if (edge_ids) edge_ids->clear();
  for (std::size_t k = 0; k < p.edges.size(); ++k) {
    const auto e = g.find_edge(image[static_cast<std::size_t>(p.edges[k].u)],
                               image[static_cast<std::size_t>(p.edges[k].v)]);
    if (!e) return std::nullopt;
    if (omega && (omega->is_open(*e) ? 1 : 0) != p.colours[k]) return std::nullopt;
    if (edge_ids) edge_ids->push_back(*e);
  }
  return reach;
}

void check_pattern(const CanonicalPattern& p, const EmbeddedGraph& g,
                   const BondConfiguration* omega) {
  if (p.vertices.empty()) throw std::invalid_argument("pattern has no vertices");
  if (p.basis != g.basis()) throw std::invalid_argument("pattern and graph use different bases");
  if (p.coloured() && !omega) {
    throw std::invalid_argument("a coloured pattern needs a bond configuration");
  }
  if (omega && omega->size() != g.edge_count()) {
    throw std::invalid_argument("bond configuration does not belong to this graph");
  }
}

// Image reaches (max |position|) of every match anchored inside B_rmax.
std::vector<double> match_reaches(const CanonicalPattern& p, const EmbeddedGraph& g, double rmax,
                                  const BondConfiguration* omega) {
  std::vector<double> reaches;
  std::vector<VertexId> image;
  for (VertexId a = 0; a < static_cast<VertexId>(g.vertex_count()); ++a) {
    if (!(norm(g.position(a)) < rmax)) continue;
    const auto reach = match_at(p, g, a, omega, image);
    if (reach && *reach < rmax) reaches.push_back(*reach);
  }
  std::sort(reaches.begin(), reaches.end());
  return reaches;
}

std::size_t count_below(const std::vector<double>& sorted, double n) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), n) -
                                  sorted.begin());
}

void check_radii(const EmbeddedGraph& g, std::span<const double> radii) {
  if (radii.empty()) throw std::invalid_argument("radius list is empty");
  const double support = distance_to_boundary(g.box(), {0.0, 0.0});
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) {
      throw std::invalid_argument("radii must be strictly increasing");
    }
    if (radii[i] > support + 1e-9) {
      std::ostringstream msg;
      msg << "radius " << radii[i] << " exceeds the patch support " << support;
      throw std::invalid_argument(msg.str());
    }
  }
}

FrequencyReport build_report(const CanonicalPattern& p, const EmbeddedGraph& g,
                             std::span<const double> radii, const BondConfiguration* omega) {
  check_pattern(p, g, omega);
  check_radii(g, radii);
  const auto reaches = match_reaches(p, g, radii.back(), omega);
  FrequencyReport rep;
  rep.pattern = p;
  for (const double n : radii) {
    FrequencyRow row;
    row.radius = n;
    row.count = count_below(reaches, n);
    row.volume = ball_volume(n);
    row.frequency = static_cast<double>(row.count) / row.volume;
    rep.rows.push_back(row);
  }
  const std::size_t q = std::max<std::size_t>(1, rep.rows.size() / 4);
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  for (std::size_t i = rep.rows.size() - q; i < rep.rows.size(); ++i) {
    const double f = rep.rows[i].frequency;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    sum += f;
  }
  rep.nu = sum / static_cast<double>(q);
  rep.half_width = (hi - lo) / 2.0;
  return rep;
}

}  // namespace

std::size_t count_occurrences(const CanonicalPattern& p, const EmbeddedGraph& g, double n,
                              const BondConfiguration* omega) {
  check_pattern(p, g, omega);
  return match_reaches(p, g, n, omega).size();
}

FrequencyReport frequency_series(const CanonicalPattern& p, const EmbeddedGraph& g,
                                 std::span<const double> radii) {
  if (p.coloured()) {
    CanonicalPattern plain = p;
    plain.colours.clear();
    return build_report(plain, g, radii, nullptr);
  }
  return build_report(p, g, radii, nullptr);
}

FrequencyReport coloured_frequency(const CanonicalPattern& p, const EmbeddedGraph& g,
                                   const BondConfiguration& omega, std::span<const double> radii) {
  if (!p.coloured() && !p.edges.empty()) {
    throw std::invalid_argument("coloured_frequency needs a coloured pattern");
  }
  return build_report(p, g, radii, &omega);
}

std::vector<LowerFrequencyResult> positive_lower_frequency_check(
    const EmbeddedGraph& g, std::span<const CanonicalPattern> patterns,
    std::span<const double> radii) {
  std::vector<LowerFrequencyResult> out;
  for (const auto& p : patterns) {
    const auto rep = frequency_series(p, g, radii);
    LowerFrequencyResult r;
    r.pattern = p;
    r.min_tail_frequency = INFINITY;
    for (std::size_t i = rep.rows.size() / 2; i < rep.rows.size(); ++i) {
      r.min_tail_frequency = std::min(r.min_tail_frequency, rep.rows[i].frequency);
    }
    r.passes = r.min_tail_frequency > 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

DensityReport density_report(const EmbeddedGraph& g, std::span<const double> radii, double safety) {
  if (radii.empty()) throw std::invalid_argument("radius list is empty");
  if (!(safety >= 0.0)) throw std::invalid_argument("safety factor must be nonnegative");
  const double support = distance_to_boundary(g.box(), {0.0, 0.0});
  const double limit = support - safety * g.constants().l_max;
  for (const double n : radii) {
    if (!(n > 0.0) || n > limit + 1e-9) {
      std::ostringstream msg;
      msg << "density radius " << n << " outside (0, " << limit << "]";
      throw std::invalid_argument(msg.str());
    }
  }
  const auto clusters = decompose(g, BondConfiguration::uniform(g, true));
  std::vector<double> all, infinite;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    const double r = norm(g.position(v));
    all.push_back(r);
    if (clusters.touches_boundary(clusters.cluster_of(v))) infinite.push_back(r);
  }
  std::sort(all.begin(), all.end());
  std::sort(infinite.begin(), infinite.end());
  DensityReport rep;
  for (const double n : radii) {
    const double vol = ball_volume(n);
    rep.rows.push_back({n, static_cast<double>(count_below(all, n)) / vol,
                        static_cast<double>(count_below(infinite, n)) / vol});
  }
  rep.rho = rep.rows.back().rho;
  rep.rho_inf = rep.rows.back().rho_inf;
  return rep;
}

FactorizationCheck factorization_check(const CanonicalPattern& coloured, const EmbeddedGraph& g,
                                       const PercolationParams& params, double n,
                                       unsigned threads) {
  params.validate();
  if (!coloured.coloured()) throw std::invalid_argument("factorization needs a coloured pattern");
  const double radii[] = {n};
  check_radii(g, radii);
  CanonicalPattern plain = coloured;
  plain.colours.clear();
  check_pattern(plain, g, nullptr);

  // Edge ids of every uncoloured match inside B_n; colours are then checked per realization.
  std::vector<std::vector<EdgeId>> matches;
  std::vector<VertexId> image;
  std::vector<EdgeId> ids;
  for (VertexId a = 0; a < static_cast<VertexId>(g.vertex_count()); ++a) {
    if (!(norm(g.position(a)) < n)) continue;
    const auto reach = match_at(plain, g, a, nullptr, image, &ids);
    if (reach && *reach < n) matches.push_back(ids);
  }
  const double vol = ball_volume(n);

  std::vector<double> per(params.realizations);
  parallel_for(params.realizations, threads, [&](std::size_t r) {
    const auto omega = sample(g, params, r);
    std::size_t hits = 0;
    for (const auto& m : matches) {
      bool ok = true;
      for (std::size_t k = 0; k < m.size() && ok; ++k) {
        ok = (omega.is_open(m[k]) ? 1 : 0) == coloured.colours[k];
      }
      hits += ok ? 1 : 0;
    }
    per[r] = static_cast<double>(hits) / vol;
  });

  FactorizationCheck out;
  out.realizations = params.realizations;
  double sum = 0.0;
  for (const double f : per) sum += f;
  out.coloured_frequency = sum / static_cast<double>(per.size());
  if (per.size() > 1) {
    double ss = 0.0;
    for (const double f : per) ss += (f - out.coloured_frequency) * (f - out.coloured_frequency);
    out.std_error = std::sqrt(ss / static_cast<double>(per.size() - 1) /
                              static_cast<double>(per.size()));
  }
  out.uncoloured_frequency = static_cast<double>(matches.size()) / vol;
  out.predicted = out.uncoloured_frequency *
                  std::pow(params.p, static_cast<double>(coloured.open_edges())) *
                  std::pow(1.0 - params.p, static_cast<double>(coloured.closed_edges()));
  const double diff = out.coloured_frequency - out.predicted;
  out.z_score = out.std_error > 0.0 ? diff / out.std_error : (diff == 0.0 ? 0.0 : INFINITY);
  return out;
}

// Graph metric -------------------------------------------------------------------

namespace {

// Largest R such that (g1 + d) and g2 agree on B_R(d/2), where g1's vertex c
// sits on g2's vertex c + t and d is the induced real shift.
double agreement_radius(const EmbeddedGraph& g1, const SpatialIndex& idx1, const EmbeddedGraph& g2,
                        const SpatialIndex& idx2, const Coeffs& t, Vec2 d) {
  const Vec2 m = 0.5 * d;
  double best = std::min(distance_to_boundary(g2.box(), m), distance_to_boundary(g1.box(), m - d));
  if (!(best > 0.0)) return 0.0;

  // One side against the other; `shift` maps `a` coordinates to `b`.
  auto scan = [&best](const EmbeddedGraph& a, const SpatialIndex& ia, Vec2 centre_a,
                      const EmbeddedGraph& b, const Coeffs& shift, bool add) {
    const auto near = ia.query(centre_a, best);
    for (const VertexId u : near) {
      const double du = distance(a.position(u), centre_a);
      if (!(du < best)) continue;
      const Coeffs cu = add ? a.coord(u) + shift : a.coord(u) - shift;
      const auto bu = b.find(cu);
      if (!bu) {
        best = du;
        continue;
      }
      for (const auto& [w, e] : a.neighbours(u)) {
        const double dw = distance(a.position(w), centre_a);
        const double de = std::max(du, dw);
        if (!(de < best)) continue;
        const auto bw = b.find(add ? a.coord(w) + shift : a.coord(w) - shift);
        if (!bw) continue;  // vertex discrepancy at w is no farther
        if (!b.find_edge(*bu, *bw)) best = de;
      }
    }
  };
  scan(g1, idx1, m - d, g2, t, true);
  scan(g2, idx2, m, g1, t, false);
  return best;
}

}  // namespace

double graph_distance(const EmbeddedGraph& g1, const EmbeddedGraph& g2,
                      double shift_search_radius) {
  if (g1.basis() != g2.basis()) throw std::invalid_argument("graphs use different bases");
  if (!(shift_search_radius > 0.0)) {
    throw std::invalid_argument("shift search radius must be positive");
  }
  const double cap = 1.0 / std::sqrt(2.0);

  std::set<Coeffs> shifts;
  for (VertexId u = 0; u < static_cast<VertexId>(g1.vertex_count()); ++u) {
    if (!(norm(g1.position(u)) < shift_search_radius)) continue;
    for (VertexId w = 0; w < static_cast<VertexId>(g2.vertex_count()); ++w) {
      if (norm(g2.position(w)) < shift_search_radius) shifts.insert(g2.coord(w) - g1.coord(u));
    }
  }
  if (shifts.empty()) return cap;

  const SpatialIndex idx1(g1.positions(), 1.0);
  const SpatialIndex idx2(g2.positions(), 1.0);
  struct Candidate {
    double half_shift;
    double agreement;
  };
  std::vector<Candidate> cands;
  for (const auto& t : shifts) {
    const Vec2 d = g2.origin() - g1.origin() + embed(g1.basis(), t);
    const double half = norm(d) / 2.0;
    if (half >= cap) continue;
    cands.push_back({half, agreement_radius(g1, idx1, g2, idx2, t, d)});
  }

  // Feasibility of eps is monotone: some shift within eps agrees on B_{1/eps}.
  auto feasible = [&](double eps) {
    return std::any_of(cands.begin(), cands.end(), [eps](const Candidate& c) {
      return c.half_shift <= eps && 1.0 / eps <= c.agreement;
    });
  };
  if (!feasible(cap)) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Pattern files ------------------------------------------------------------------

std::string pattern_to_string(const CanonicalPattern& p) {
  std::ostringstream out;
  out << "pattern\n";
  out << "basis " << basis_name(p.basis) << " d 2 n " << p.vertices.size() << " m "
      << p.edges.size() << '\n';
  const std::size_t rank = basis_rank(p.basis);
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    out << "v " << i;
    for (std::size_t j = 0; j < rank; ++j) out << ' ' << p.vertices[i][j];
    out << '\n';
  }
  for (std::size_t k = 0; k < p.edges.size(); ++k) {
    out << "e " << p.edges[k].u << ' ' << p.edges[k].v;
    if (p.coloured()) out << ' ' << static_cast<int>(p.colours[k]);
    out << '\n';
  }
  return out.str();
}

CanonicalPattern pattern_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> void {
    throw std::runtime_error("pattern file line " + std::to_string(lineno) + ": " + what);
  };
  bool seen_tag = false, seen_header = false;
  Basis basis = Basis::square;
  std::size_t n = 0, m = 0;
  std::vector<Coeffs> coords;
  std::vector<Edge> edges;
  std::vector<std::uint8_t> colours;
  int coloured = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (!seen_tag) {
      if (tag != "pattern") fail("expected 'pattern'");
      seen_tag = true;
      continue;
    }
    if (tag == "basis") {
      std::string name, dtag, ntag, mtag;
      int dim = 0;
      ls >> name >> dtag >> dim >> ntag >> n >> mtag >> m;
      if (!ls || dtag != "d" || ntag != "n" || mtag != "m" || dim != 2) fail("malformed header");
      try {
        basis = parse_basis(name);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      seen_header = true;
    } else if (!seen_header) {
      fail("expected 'basis' header");
    } else if (tag == "v") {
      std::size_t idx = 0;
      ls >> idx;
      if (!ls || idx != coords.size()) fail("vertex index out of sequence");
      Coeffs c{};
      for (std::size_t j = 0; j < basis_rank(basis); ++j) {
        if (!(ls >> c[j])) fail("missing coefficient");
      }
      coords.push_back(c);
    } else if (tag == "e") {
      Edge e;
      ls >> e.u >> e.v;
      if (!ls) fail("malformed edge");
      int c = 0;
      const bool has = static_cast<bool>(ls >> c);
      if (coloured == -1) coloured = has ? 1 : 0;
      if (has != (coloured == 1)) fail("either every edge or no edge carries a colour");
      if (has) {
        if (c != 0 && c != 1) fail("colour must be 0 or 1");
        colours.push_back(static_cast<std::uint8_t>(c));
      }
      edges.push_back(e);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!seen_header) fail("missing header");
  if (coords.size() != n || edges.size() != m) fail("counts do not match header");
  try {
    return canonicalize(basis, coords, edges, colours);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return {};
}

}  // namespace qperc
