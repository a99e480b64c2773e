#pragma once
// Line-oriented text serialization of embedded graphs:
//
//   basis <id> d <dim> n <vertexcount> m <edgecount>
//   box ball <cx> <cy> <r> | box rect <x0> <y0> <x1> <y1>     (optional)
//   constants <r> <l_max> <d_max> [<r_dense>]                   (optional)
//   origin <x> <y>                                              (optional)
//   v <index> <coeffs...>
//   e <i> <j>
//
// Reals are written with 17 significant digits, so a write/read cycle
// reproduces every field bit for bit.

#include <iosfwd>
#include <string>

#include "qperc/graph.hpp"

namespace qperc {

void write_graph(std::ostream& out, const EmbeddedGraph& g);
std::string graph_to_string(const EmbeddedGraph& g);
/// Throws std::runtime_error with the offending line number.
EmbeddedGraph read_graph(std::istream& in);
EmbeddedGraph graph_from_string(const std::string& text);

}  // namespace qperc
