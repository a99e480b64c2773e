#include "qperc/generators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qperc {

namespace {

constexpr double kGenericTol = 1e-9;

struct PatchBuilder {
  Basis basis;
  std::set<Coeffs> vertices;
  std::set<std::pair<Coeffs, Coeffs>> edges;

  void add_edge(const Coeffs& a, const Coeffs& b) {
    if (b < a) {
      edges.emplace(b, a);
    } else {
      edges.emplace(a, b);
    }
  }

  EmbeddedGraph build(const Region& box, GeometryConstants constants) const {
    std::vector<Coeffs> coords;
    std::map<Coeffs, VertexId> index;
    for (const auto& c : vertices) {
      if (!contains(box, embed(basis, c))) continue;
      index.emplace(c, static_cast<VertexId>(coords.size()));
      coords.push_back(c);
    }
    std::vector<Edge> out;
    for (const auto& [a, b] : edges) {
      auto ia = index.find(a);
      auto ib = index.find(b);
      if (ia != index.end() && ib != index.end()) out.push_back({ia->second, ib->second});
    }
    return EmbeddedGraph(basis, std::move(coords), std::move(out), box, constants);
  }
};

EmbeddedGraph lattice_patch(Basis basis, double n, std::span<const Coeffs> steps,
                            GeometryConstants constants) {
  const Region box = Ball{{0.0, 0.0}, n};
  // |embed(a,b)| >= |b| * sin(60 deg) for the triangular basis, so this range
  // covers both lattices.
  const auto span = static_cast<std::int64_t>(std::ceil(2.0 * n)) + 1;
  PatchBuilder pb{basis, {}, {}};
  for (std::int64_t b = -span; b <= span; ++b) {
    for (std::int64_t a = -span; a <= span; ++a) {
      const Coeffs c{a, b, 0, 0};
      if (contains(box, embed(basis, c))) pb.vertices.insert(c);
    }
  }
  for (const auto& c : pb.vertices) {
    for (const auto& s : steps) {
      const Coeffs d = c + s;
      if (pb.vertices.count(d)) pb.add_edge(c, d);
    }
  }
  return pb.build(box, constants);
}

EmbeddedGraph pentagrid_patch(const GeneratorSpec& spec) {
  const double n = spec.radius;
  const auto& gamma = spec.pentagrid_offsets;
  std::array<Vec2, 5> e{};
  for (int j = 0; j < 5; ++j) {
    const double a = 2.0 * M_PI * j / 5.0;
    e[static_cast<std::size_t>(j)] = {std::cos(a), std::sin(a)};
  }
  double slack = 6.0;
  for (double g : gamma) slack += std::abs(g);
  // A mesh at grid point z maps to a vertex within `slack` of 2.5 z.
  const double zmax = (n + slack) / 2.5;

  PatchBuilder pb{Basis::penrose, {}, {}};
  auto reduce = [](const std::array<std::int64_t, 5>& k) {
    return Coeffs{k[0] - k[4], k[1] - k[4], k[2] - k[4], k[3] - k[4]};
  };

  for (int r = 0; r < 5; ++r) {
    for (int s = r + 1; s < 5; ++s) {
      const Vec2 er = e[static_cast<std::size_t>(r)];
      const Vec2 es = e[static_cast<std::size_t>(s)];
      const double det = er.x * es.y - er.y * es.x;
      const double gr = gamma[static_cast<std::size_t>(r)];
      const double gs = gamma[static_cast<std::size_t>(s)];
      const auto kr0 = static_cast<std::int64_t>(std::floor(-zmax + gr)) - 1;
      const auto kr1 = static_cast<std::int64_t>(std::ceil(zmax + gr)) + 1;
      const auto ks0 = static_cast<std::int64_t>(std::floor(-zmax + gs)) - 1;
      const auto ks1 = static_cast<std::int64_t>(std::ceil(zmax + gs)) + 1;
      for (std::int64_t kr = kr0; kr <= kr1; ++kr) {
        for (std::int64_t ks = ks0; ks <= ks1; ++ks) {
          // <z, e_r> = kr - g_r and <z, e_s> = ks - g_s
          const double br = static_cast<double>(kr) - gr;
          const double bs = static_cast<double>(ks) - gs;
          const Vec2 z{(br * es.y - bs * er.y) / det, (er.x * bs - es.x * br) / det};
          if (norm(z) > zmax) continue;
          std::array<std::int64_t, 5> k{};
          for (int j = 0; j < 5; ++j) {
            if (j == r) {
              k[static_cast<std::size_t>(j)] = kr;
            } else if (j == s) {
              k[static_cast<std::size_t>(j)] = ks;
            } else {
              const double t = dot(z, e[static_cast<std::size_t>(j)]) + gamma[static_cast<std::size_t>(j)];
              if (std::abs(t - std::round(t)) < kGenericTol) {
                std::ostringstream msg;
                msg << "degenerate pentagrid: grid lines of families " << r << ", " << s << " and "
                    << j << " meet at (" << z.x << ", " << z.y << "); choose generic offsets";
                throw std::invalid_argument(msg.str());
              }
              k[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::ceil(t));
            }
          }
          auto k10 = k;
          k10[static_cast<std::size_t>(r)] += 1;
          auto k11 = k10;
          k11[static_cast<std::size_t>(s)] += 1;
          auto k01 = k;
          k01[static_cast<std::size_t>(s)] += 1;
          const Coeffs v00 = reduce(k), v10 = reduce(k10), v11 = reduce(k11), v01 = reduce(k01);
          pb.vertices.insert({v00, v10, v11, v01});
          pb.add_edge(v00, v10);
          pb.add_edge(v10, v11);
          pb.add_edge(v11, v01);
          pb.add_edge(v01, v00);
        }
      }
    }
  }
  return pb.build(Ball{{0.0, 0.0}, n}, family_constants(Family::penrose_pentagrid));
}

EmbeddedGraph ammann_beenker_patch(const GeneratorSpec& spec) {
  const double n = spec.radius;
  const Vec2 shift = spec.window_shift;
  std::array<Vec2, 4> internal{};
  std::array<Vec2, 4> normals{};
  for (int j = 0; j < 4; ++j) {
    const double a = 3.0 * M_PI * j / 4.0;
    internal[static_cast<std::size_t>(j)] = {std::cos(a), std::sin(a)};
    const double b = M_PI * j / 4.0;
    normals[static_cast<std::size_t>(j)] = {std::cos(b), std::sin(b)};
  }
  // Regular octagon with unit edges: projection of the unit 4-cube.
  const double inradius = (1.0 + std::sqrt(2.0)) / 2.0;
  const double circumradius = inradius / std::cos(M_PI / 8.0);
  auto in_window = [&](Vec2 y) {
    for (const auto& u : normals) {
      const double t = std::abs(dot(y, u));
      if (std::abs(t - inradius) < kGenericTol) {
        std::ostringstream msg;
        msg << "degenerate window shift (" << shift.x << ", " << shift.y
            << "): a lattice point projects onto the window boundary";
        throw std::invalid_argument(msg.str());
      }
      if (t > inradius) return false;
    }
    return true;
  };

  const double reach = circumradius + norm(shift);
  const auto kmax = static_cast<std::int64_t>(std::ceil(std::sqrt((n * n + reach * reach) / 2.0))) + 1;
  const Vec2 dir3 = internal[3];
  const Region box = Ball{{0.0, 0.0}, n};
  PatchBuilder pb{Basis::octagonal, {}, {}};
  for (std::int64_t k0 = -kmax; k0 <= kmax; ++k0) {
    for (std::int64_t k1 = -kmax; k1 <= kmax; ++k1) {
      for (std::int64_t k2 = -kmax; k2 <= kmax; ++k2) {
        const Vec2 y = shift + static_cast<double>(k0) * internal[0] +
                       static_cast<double>(k1) * internal[1] + static_cast<double>(k2) * internal[2];
        const double t = dot(y, dir3);
        const Vec2 perp = y - t * dir3;
        if (norm(perp) > circumradius) continue;
        const auto lo = static_cast<std::int64_t>(std::ceil(-t - circumradius));
        const auto hi = static_cast<std::int64_t>(std::floor(-t + circumradius));
        for (std::int64_t k3 = lo; k3 <= hi; ++k3) {
          const Coeffs c{k0, k1, k2, k3};
          if (!contains(box, embed(Basis::octagonal, c))) continue;
          if (in_window(y + static_cast<double>(k3) * dir3)) pb.vertices.insert(c);
        }
      }
    }
  }
  for (const auto& c : pb.vertices) {
    for (std::size_t j = 0; j < 4; ++j) {
      Coeffs d = c;
      d[j] += 1;
      if (!pb.vertices.count(d)) continue;
      const double len = distance(embed(Basis::octagonal, c), embed(Basis::octagonal, d));
      if (std::abs(len - 1.0) < kGenericTol) pb.add_edge(c, d);
    }
  }
  return pb.build(box, family_constants(Family::ammann_beenker));
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::square: return "square";
    case Family::triangular: return "triangular";
    case Family::penrose_pentagrid: return "penrose_pentagrid";
    case Family::ammann_beenker: return "ammann_beenker";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::square, Family::triangular, Family::penrose_pentagrid,
                   Family::ammann_beenker}) {
    if (family_name(f) == name) return f;
  }
  if (name == "penrose") return Family::penrose_pentagrid;
  throw std::invalid_argument("unknown graph family '" + std::string(name) + "'");
}

GeometryConstants family_constants(Family f) {
  switch (f) {
    case Family::square: return {0.5, std::sqrt(0.5), 1.0, 4};
    case Family::triangular: return {0.5, 1.0 / std::sqrt(3.0), 1.0, 6};
    case Family::penrose_pentagrid: return {std::sin(M_PI / 10.0), std::nullopt, 1.0, 7};
    case Family::ammann_beenker: return {std::sin(M_PI / 8.0), std::nullopt, 1.0, 8};
  }
  return {};
}

void validate(const GeneratorSpec& spec) {
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius)) {
    throw std::invalid_argument("generation radius must be positive and finite");
  }
  if (spec.family == Family::penrose_pentagrid) {
    const double sum = std::accumulate(spec.pentagrid_offsets.begin(), spec.pentagrid_offsets.end(), 0.0);
    if (std::abs(sum) > 1e-12) {
      std::ostringstream msg;
      msg << "pentagrid offsets must sum to 0 (got " << sum << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

EmbeddedGraph generate(const GeneratorSpec& spec) {
  validate(spec);
  switch (spec.family) {
    case Family::square: {
      const std::array<Coeffs, 2> steps{Coeffs{1, 0, 0, 0}, Coeffs{0, 1, 0, 0}};
      return lattice_patch(Basis::square, spec.radius, steps, family_constants(spec.family));
    }
    case Family::triangular: {
      const std::array<Coeffs, 3> steps{Coeffs{1, 0, 0, 0}, Coeffs{0, 1, 0, 0}, Coeffs{-1, 1, 0, 0}};
      return lattice_patch(Basis::triangular, spec.radius, steps, family_constants(spec.family));
    }
    case Family::penrose_pentagrid:
      return pentagrid_patch(spec);
    case Family::ammann_beenker:
      return ammann_beenker_patch(spec);
  }
  throw std::invalid_argument("unknown graph family");
}

}  // namespace qperc
