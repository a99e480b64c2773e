#include "qperc/graph_io.hpp"

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qperc {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw std::runtime_error("graph file line " + std::to_string(line) + ": " + what);
}

// Accepts "inf" and "nan", which operator>> does not.
bool read_real(std::istream& in, double& out) {
  std::string tok;
  if (!(in >> tok)) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) {
    in.setstate(std::ios::failbit);
    return false;
  }
  return true;
}

}  // namespace

void write_graph(std::ostream& out, const EmbeddedGraph& g) {
  const auto old_precision = out.precision(17);
  const std::size_t rank = basis_rank(g.basis());
  out << "basis " << basis_name(g.basis()) << " d 2 n " << g.vertex_count() << " m "
      << g.edge_count() << '\n';
  out << "box " << describe(g.box()) << '\n';
  const auto& c = g.constants();
  out << "constants " << c.r << ' ' << c.l_max << ' ' << c.d_max;
  if (c.r_dense) out << ' ' << *c.r_dense;
  out << '\n';
  if (g.origin() != Vec2{}) out << "origin " << g.origin().x << ' ' << g.origin().y << '\n';
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertex_count()); ++v) {
    out << "v " << v;
    for (std::size_t j = 0; j < rank; ++j) out << ' ' << g.coord(v)[j];
    out << '\n';
  }
  for (const auto& e : g.edges()) out << "e " << e.u << ' ' << e.v << '\n';
  out.precision(old_precision);
}

std::string graph_to_string(const EmbeddedGraph& g) {
  std::ostringstream out;
  write_graph(out, g);
  return out.str();
}

EmbeddedGraph read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  Basis basis = Basis::square;
  std::size_t n = 0, m = 0;
  bool have_header = false;
  Region box = Ball{{0.0, 0.0}, 0.0};
  GeometryConstants constants;
  Vec2 origin{};
  std::vector<Coeffs> coords;
  std::vector<Edge> edges;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "basis") {
      std::string name, dtag, ntag, mtag;
      int dim = 0;
      ls >> name >> dtag >> dim >> ntag >> n >> mtag >> m;
      if (!ls || dtag != "d" || ntag != "n" || mtag != "m") fail(lineno, "malformed header");
      if (dim != 2) fail(lineno, "only d = 2 is supported");
      try {
        basis = parse_basis(name);
      } catch (const std::invalid_argument& e) {
        fail(lineno, e.what());
      }
      have_header = true;
      coords.reserve(n);
      edges.reserve(m);
      continue;
    }
    if (!have_header) fail(lineno, "expected 'basis' header");
    if (tag == "box") {
      std::string kind;
      ls >> kind;
      if (kind == "ball") {
        Ball b;
        if (!read_real(ls, b.center.x) || !read_real(ls, b.center.y) || !read_real(ls, b.radius)) {
          fail(lineno, "malformed box");
        }
        box = b;
      } else if (kind == "rect") {
        Rect r;
        if (!read_real(ls, r.lo.x) || !read_real(ls, r.lo.y) || !read_real(ls, r.hi.x) ||
            !read_real(ls, r.hi.y)) {
          fail(lineno, "malformed box");
        }
        box = r;
      } else {
        fail(lineno, "unknown box kind '" + kind + "'");
      }
    } else if (tag == "constants") {
      if (!read_real(ls, constants.r) || !read_real(ls, constants.l_max) ||
          !(ls >> constants.d_max)) {
        fail(lineno, "malformed constants");
      }
      double rd = 0.0;
      if (read_real(ls, rd)) constants.r_dense = rd;
    } else if (tag == "origin") {
      if (!read_real(ls, origin.x) || !read_real(ls, origin.y)) fail(lineno, "malformed origin");
    } else if (tag == "v") {
      std::size_t idx = 0;
      ls >> idx;
      if (!ls || idx != coords.size()) fail(lineno, "vertex index out of sequence");
      Coeffs c{};
      for (std::size_t j = 0; j < basis_rank(basis); ++j) {
        if (!(ls >> c[j])) fail(lineno, "missing coefficient");
      }
      coords.push_back(c);
    } else if (tag == "e") {
      Edge e;
      ls >> e.u >> e.v;
      if (!ls) fail(lineno, "malformed edge");
      edges.push_back(e);
    } else {
      fail(lineno, "unknown record '" + tag + "'");
    }
  }
  if (!have_header) fail(lineno, "empty graph file");
  if (coords.size() != n) fail(lineno, "vertex count does not match header");
  if (edges.size() != m) fail(lineno, "edge count does not match header");
  try {
    return EmbeddedGraph(basis, std::move(coords), std::move(edges), box, constants, origin);
  } catch (const std::invalid_argument& e) {
    fail(lineno, e.what());
  }
}

EmbeddedGraph graph_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_graph(in);
}

}  // namespace qperc
