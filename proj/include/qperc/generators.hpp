#pragma once

#include <array>
#include <string_view>

#include "qperc/graph.hpp"

namespace qperc {

enum class Family { square, triangular, penrose_pentagrid, ammann_beenker };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);  // throws std::invalid_argument

struct GeneratorSpec {
  Family family = Family::square;
  double radius = 10.0;  // generate G_0 restricted to the open ball B_radius
  // De Bruijn grid offsets; must sum to zero for a Penrose tiling.
  std::array<double, 5> pentagrid_offsets{0.13, 0.27, -0.31, 0.42, -0.51};
  // Shift of the octagonal acceptance window in internal space.
  Vec2 window_shift{0.1234, 0.0567};
};

/// Throws std::invalid_argument describing the first violated precondition.
void validate(const GeneratorSpec& spec);

/// G_0 restricted to B_radius. Deterministic: vertices are sorted by exact
/// coefficients, edges by endpoint indices.
EmbeddedGraph generate(const GeneratorSpec& spec);

/// Nominal constants of the infinite graph of a family.
GeometryConstants family_constants(Family f);

}  // namespace qperc
