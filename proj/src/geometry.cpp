#include "qperc/geometry.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qperc {

namespace {

struct UnitVectors {
  std::array<Vec2, 4> v;
};

UnitVectors make_units(Basis b) {
  UnitVectors u{};
  switch (b) {
    case Basis::square:
      u.v = {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}, Vec2{}, Vec2{}};
      break;
    case Basis::triangular:
      u.v = {Vec2{1.0, 0.0}, Vec2{0.5, std::sqrt(3.0) / 2.0}, Vec2{}, Vec2{}};
      break;
    case Basis::penrose:
      for (int j = 0; j < 4; ++j) {
        const double a = 2.0 * M_PI * j / 5.0;
        u.v[j] = {std::cos(a), std::sin(a)};
      }
      break;
    case Basis::octagonal:
      for (int j = 0; j < 4; ++j) {
        const double a = M_PI * j / 4.0;
        u.v[j] = {std::cos(a), std::sin(a)};
      }
      // Exact values where they exist, so Z^2-like sublattices embed cleanly.
      u.v[0] = {1.0, 0.0};
      u.v[2] = {0.0, 1.0};
      break;
  }
  return u;
}

const UnitVectors& units(Basis b) {
  static const std::array<UnitVectors, 4> table = {
      make_units(Basis::square), make_units(Basis::triangular),
      make_units(Basis::penrose), make_units(Basis::octagonal)};
  return table[static_cast<std::size_t>(b)];
}

}  // namespace

std::size_t basis_rank(Basis b) {
  return (b == Basis::square || b == Basis::triangular) ? 2 : 4;
}

std::string_view basis_name(Basis b) {
  switch (b) {
    case Basis::square: return "square";
    case Basis::triangular: return "triangular";
    case Basis::penrose: return "penrose";
    case Basis::octagonal: return "octagonal";
  }
  return "?";
}

Basis parse_basis(std::string_view name) {
  for (Basis b : {Basis::square, Basis::triangular, Basis::penrose, Basis::octagonal}) {
    if (basis_name(b) == name) return b;
  }
  throw std::invalid_argument("unknown coordinate basis '" + std::string(name) + "'");
}

Vec2 embed(Basis basis, const Coeffs& coeffs) {
  const auto& u = units(basis).v;
  Vec2 p{};
  const std::size_t rank = basis_rank(basis);
  for (std::size_t j = 0; j < rank; ++j) {
    const double c = static_cast<double>(coeffs[j]);
    p.x += c * u[j].x;
    p.y += c * u[j].y;
  }
  return p;
}

Coeffs exact_translation(Basis basis, Vec2 v, double tol, int search_bound) {
  const auto& u = units(basis).v;
  if (basis_rank(basis) == 2) {
    const double det = u[0].x * u[1].y - u[0].y * u[1].x;
    const double a = (v.x * u[1].y - v.y * u[1].x) / det;
    const double b = (u[0].x * v.y - u[0].y * v.x) / det;
    const Coeffs c{std::llround(a), std::llround(b), 0, 0};
    if (distance(embed(basis, c), v) <= tol) return c;
  } else {
    // Two coefficients are fixed by the other two; search the free pair.
    const double det = u[0].x * u[1].y - u[0].y * u[1].x;
    for (int c2 = -search_bound; c2 <= search_bound; ++c2) {
      for (int c3 = -search_bound; c3 <= search_bound; ++c3) {
        const Vec2 rest = v - (static_cast<double>(c2) * u[2] + static_cast<double>(c3) * u[3]);
        const double a = (rest.x * u[1].y - rest.y * u[1].x) / det;
        const double b = (u[0].x * rest.y - u[0].y * rest.x) / det;
        const Coeffs c{std::llround(a), std::llround(b), c2, c3};
        if (std::abs(c[0]) <= search_bound && std::abs(c[1]) <= search_bound &&
            distance(embed(basis, c), v) <= tol) {
          return c;
        }
      }
    }
  }
  std::ostringstream msg;
  msg << "translation (" << v.x << ", " << v.y << ") is not a vector of the "
      << basis_name(basis) << " module";
  throw std::invalid_argument(msg.str());
}

bool contains(const Region& region, Vec2 p) {
  if (const auto* b = std::get_if<Ball>(&region)) {
    const Vec2 d = p - b->center;
    return d.x * d.x + d.y * d.y < b->radius * b->radius;
  }
  const auto& r = std::get<Rect>(region);
  return p.x > r.lo.x && p.x < r.hi.x && p.y > r.lo.y && p.y < r.hi.y;
}

double distance_to_boundary(const Region& region, Vec2 p) {
  if (const auto* b = std::get_if<Ball>(&region)) {
    return b->radius - distance(p, b->center);
  }
  const auto& r = std::get<Rect>(region);
  return std::min({p.x - r.lo.x, r.hi.x - p.x, p.y - r.lo.y, r.hi.y - p.y});
}

Region shifted(const Region& region, Vec2 by) {
  if (const auto* b = std::get_if<Ball>(&region)) return Ball{b->center + by, b->radius};
  const auto& r = std::get<Rect>(region);
  return Rect{r.lo + by, r.hi + by};
}

double area(const Region& region) {
  if (const auto* b = std::get_if<Ball>(&region)) return ball_volume(b->radius);
  const auto& r = std::get<Rect>(region);
  return std::max(0.0, r.hi.x - r.lo.x) * std::max(0.0, r.hi.y - r.lo.y);
}

std::string describe(const Region& region) {
  std::ostringstream out;
  out.precision(17);
  if (const auto* b = std::get_if<Ball>(&region)) {
    out << "ball " << b->center.x << ' ' << b->center.y << ' ' << b->radius;
  } else {
    const auto& r = std::get<Rect>(region);
    out << "rect " << r.lo.x << ' ' << r.lo.y << ' ' << r.hi.x << ' ' << r.hi.y;
  }
  return out.str();
}

}  // namespace qperc
