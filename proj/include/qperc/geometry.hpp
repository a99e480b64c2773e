#pragma once
// Exact module coordinates, their float embeddings, and the planar regions
// (open balls and rectangles) used to cut patches out of infinite graphs.

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <variant>

namespace qperc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Coordinate system in which vertex positions are integer vectors.
enum class Basis : std::uint8_t {
  square,      // Z^2, unit vectors (1,0), (0,1)
  triangular,  // rank 2, unit vectors at 0 and 60 degrees
  penrose,     // rank 4, fifth roots of unity 1, z, z^2, z^3 (z^4 eliminated)
  octagonal,   // rank 4, eighth roots of unity at 0, 45, 90, 135 degrees
};

std::size_t basis_rank(Basis b);
std::string_view basis_name(Basis b);
Basis parse_basis(std::string_view name);  // throws std::invalid_argument

using Coeffs = std::array<std::int64_t, 4>;

inline Coeffs operator+(const Coeffs& a, const Coeffs& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Coeffs operator-(const Coeffs& a, const Coeffs& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Coeffs operator-(const Coeffs& a) { return {-a[0], -a[1], -a[2], -a[3]}; }

/// Float position of an integer vector. Pure function: the same input always
/// produces the same bits.
Vec2 embed(Basis basis, const Coeffs& coeffs);

struct CoeffsHash {
  std::size_t operator()(const Coeffs& c) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// A point of the graph's coordinate module. Equality and ordering look only
/// at (basis, coeffs); the embedding is a derived view.
struct ExactCoord {
  Basis basis = Basis::square;
  Coeffs coeffs{};

  Vec2 embed() const { return qperc::embed(basis, coeffs); }

  friend bool operator==(const ExactCoord& a, const ExactCoord& b) {
    return a.basis == b.basis && a.coeffs == b.coeffs;
  }
  friend auto operator<=>(const ExactCoord& a, const ExactCoord& b) {
    if (auto c = a.basis <=> b.basis; c != 0) return c;
    return a.coeffs <=> b.coeffs;
  }
};

/// Finds integer coefficients whose embedding equals `v` within `tol`.
/// Rank-2 bases solve the 2x2 system; rank-4 bases search coefficients with
/// |c_i| <= search_bound. Throws std::invalid_argument when none exists.
Coeffs exact_translation(Basis basis, Vec2 v, double tol = 1e-9, int search_bound = 8);

// Regions ------------------------------------------------------------------

struct Ball {
  Vec2 center{};
  double radius = 0.0;
  friend bool operator==(const Ball&, const Ball&) = default;
};

struct Rect {
  Vec2 lo{};
  Vec2 hi{};
  friend bool operator==(const Rect&, const Rect&) = default;
};

using Region = std::variant<Ball, Rect>;

/// Open-set membership: points on the boundary are outside.
bool contains(const Region& region, Vec2 p);
/// Distance from an interior point to the region boundary (<= 0 outside).
double distance_to_boundary(const Region& region, Vec2 p);
Region shifted(const Region& region, Vec2 by);
double area(const Region& region);
std::string describe(const Region& region);

inline double ball_volume(double radius) { return M_PI * radius * radius; }

}  // namespace qperc
