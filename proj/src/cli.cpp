#include "qperc/cli.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qperc/graph_io.hpp"
#include "qperc/lifshits.hpp"
#include "qperc/patterns.hpp"
#include "qperc/percolation.hpp"
#include "qperc/spectral.hpp"

#ifndef QPERC_VERSION
#define QPERC_VERSION "unknown"
#endif

namespace qperc::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  if (!std::isfinite(x)) throw std::invalid_argument("number must be finite");
  return x;
}

std::uint64_t parse_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("expected a nonnegative integer, got '" + std::string(s) + "'");
  }
  return x;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

// Comma-separated numbers; an item lo:hi[:step] expands to lo, lo+step, ... <= hi.
std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (item.empty()) throw std::invalid_argument("empty list item");
    if (const auto c1 = item.find(':'); c1 != std::string_view::npos) {
      const auto c2 = item.find(':', c1 + 1);
      const double lo = parse_double(item.substr(0, c1));
      const double hi = parse_double(item.substr(c1 + 1, c2 == item.npos ? item.npos : c2 - c1 - 1));
      const double step = c2 == item.npos ? 1.0 : parse_double(item.substr(c2 + 1));
      if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad range '" + std::string(item) + "'");
      const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
      for (std::size_t k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
    } else {
      out.push_back(parse_double(item));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += format_number(xs[i]);
  }
  return s;
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  using V = std::string_view;
  static const std::vector<Key> table = {
      {"generator.family", [](C& c, V v) { c.generator.family = parse_family(trim(v)); },
       [](const C& c) { return std::string(family_name(c.generator.family)); }},
      {"generator.radius", [](C& c, V v) { c.generator.radius = parse_double(v); },
       [](const C& c) { return format_number(c.generator.radius); }},
      {"generator.pentagrid_offsets",
       [](C& c, V v) {
         const auto xs = parse_list(v);
         if (xs.size() != 5) throw std::invalid_argument("pentagrid_offsets needs 5 numbers");
         std::copy(xs.begin(), xs.end(), c.generator.pentagrid_offsets.begin());
       },
       [](const C& c) {
         return join({c.generator.pentagrid_offsets.begin(), c.generator.pentagrid_offsets.end()});
       }},
      {"generator.window_shift",
       [](C& c, V v) {
         const auto xs = parse_list(v);
         if (xs.size() != 2) throw std::invalid_argument("window_shift needs 2 numbers");
         c.generator.window_shift = {xs[0], xs[1]};
       },
       [](const C& c) { return join({c.generator.window_shift.x, c.generator.window_shift.y}); }},
      {"percolation.p", [](C& c, V v) { c.p = parse_double(v); },
       [](const C& c) { return format_number(c.p); }},
      {"percolation.seed", [](C& c, V v) { c.seed = parse_uint(v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"percolation.realizations", [](C& c, V v) { c.realizations = parse_uint(v); },
       [](const C& c) { return std::to_string(c.realizations); }},
      {"percolation.n_values", [](C& c, V v) { c.n_values = parse_list(v); },
       [](const C& c) { return join(c.n_values); }},
      {"percolation.p_values", [](C& c, V v) { c.p_values = parse_list(v); },
       [](const C& c) { return join(c.p_values); }},
      {"census.pattern_radius", [](C& c, V v) { c.pattern_radius = parse_double(v); },
       [](const C& c) { return format_number(c.pattern_radius); }},
      {"census.generation_radii", [](C& c, V v) { c.census_radii = parse_list(v); },
       [](const C& c) { return join(c.census_radii); }},
      {"census.frequency_radii", [](C& c, V v) { c.frequency_radii = parse_list(v); },
       [](const C& c) { return join(c.frequency_radii); }},
      {"ids.counting_radius", [](C& c, V v) { c.counting_radius = parse_double(v); },
       [](const C& c) { return format_number(c.counting_radius); }},
      {"ids.margin",
       [](C& c, V v) {
         if (trim(v) == "auto") {
           c.margin.reset();
         } else {
           c.margin = parse_double(v);
         }
       },
       [](const C& c) { return c.margin ? format_number(*c.margin) : std::string("auto"); }},
      {"ids.e_min", [](C& c, V v) { c.energies.min = parse_double(v); },
       [](const C& c) { return format_number(c.energies.min); }},
      {"ids.e_max", [](C& c, V v) { c.energies.max = parse_double(v); },
       [](const C& c) { return format_number(c.energies.max); }},
      {"ids.e_points", [](C& c, V v) { c.energies.points = static_cast<int>(parse_uint(v)); },
       [](const C& c) { return std::to_string(c.energies.points); }},
      {"ids.e_spacing",
       [](C& c, V v) {
         v = trim(v);
         if (v != "log" && v != "linear") throw std::invalid_argument("e_spacing is log or linear");
         c.energies.log = v == "log";
       },
       [](const C& c) { return std::string(c.energies.log ? "log" : "linear"); }},
      {"ids.size_cap", [](C& c, V v) { c.size_cap = parse_uint(v); },
       [](const C& c) { return std::to_string(c.size_cap); }},
      {"ids.eigenvalue_dump", [](C& c, V v) { c.eigenvalue_dump = parse_bool(v); },
       [](const C& c) { return std::string(c.eigenvalue_dump ? "true" : "false"); }},
      {"lifshits.fit_e_min", [](C& c, V v) { c.fit_e_min = parse_double(v); },
       [](const C& c) { return format_number(c.fit_e_min); }},
      {"lifshits.fit_e_max", [](C& c, V v) { c.fit_e_max = parse_double(v); },
       [](const C& c) { return format_number(c.fit_e_max); }},
      {"lifshits.max_relative_error", [](C& c, V v) { c.max_relative_error = parse_double(v); },
       [](const C& c) { return format_number(c.max_relative_error); }},
      {"lifshits.min_points", [](C& c, V v) { c.min_points = parse_uint(v); },
       [](const C& c) { return std::to_string(c.min_points); }},
      {"lifshits.chi_realizations", [](C& c, V v) { c.chi_realizations = parse_uint(v); },
       [](const C& c) { return std::to_string(c.chi_realizations); }},
      {"output.dir", [](C& c, V v) { c.out_dir = std::string(trim(v)); },
       [](const C& c) { return c.out_dir; }},
      {"output.format",
       [](C& c, V v) {
         v = trim(v);
         if (v != "csv" && v != "json") throw std::invalid_argument("format is csv or json");
         c.format = std::string(v);
       },
       [](const C& c) { return c.format; }},
      {"output.threads",
       [](C& c, V v) {
         const auto t = parse_uint(v);
         if (t == 0 || t > 1024) throw std::invalid_argument("threads must lie in [1, 1024]");
         c.threads = static_cast<unsigned>(t);
       },
       [](const C& c) { return std::to_string(c.threads); }},
  };
  return table;
}

std::string where_of(const ExperimentConfig& c, const std::string& key) {
  const auto it = c.origin.find(key);
  return it == c.origin.end() ? "default " + key : it->second + " (" + key + ")";
}

// Tables -----------------------------------------------------------------------------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  static std::string cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_float()) return format_number(v.get<double>());
    return v.dump();
  }
  std::string csv() const {
    std::string s;
    for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    s += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell(row[i]);
      s += '\n';
    }
    return s;
  }
  std::string json_text() const {
    json arr = json::array();
    for (const auto& row : rows) {
      json o = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        const auto& v = row[i];
        o[columns[i]] = v.is_number_float() && !std::isfinite(v.get<double>()) ? json(nullptr) : v;
      }
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::string render(const std::string& format) const { return format == "json" ? json_text() : csv(); }
};

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Run bookkeeping ----------------------------------------------------------------------

class Run {
 public:
  Run(const ExperimentConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), dir_(cfg.out_dir) {
    fs::create_directories(dir_);
  }

  void begin(std::string name) {
    stages_.push_back({std::move(name), 0.0, json::array()});
    t0_ = std::chrono::steady_clock::now();
  }
  void emit(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    stages_.back().outputs.push_back(
        json{{"file", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }
  void emit_table(const std::string& stem, const Table& t) {
    emit(stem + "." + cfg_.format, t.render(cfg_.format));
  }
  void end() {
    stages_.back().seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  void finish(int exit_code, const std::string& error = {}) {
    if (!stages_.empty() && stages_.back().seconds == 0.0) end();
    json m;
    m["tool"] = "qperc";
    m["version"] = QPERC_VERSION;
    m["command"] = command_;
    m["master_seed"] = cfg_.seed;
    json c = json::object();
    for (const auto& [k, v] : config_entries(cfg_)) c[k] = v;
    m["config"] = c;
    json st = json::array();
    for (const auto& s : stages_) {
      st.push_back(json{{"name", s.name}, {"wall_seconds", s.seconds}, {"outputs", s.outputs}});
    }
    m["stages"] = st;
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  struct Stage {
    std::string name;
    double seconds;
    json outputs;
  };
  const ExperimentConfig& cfg_;
  std::string command_;
  fs::path dir_;
  std::vector<Stage> stages_;
  std::chrono::steady_clock::time_point t0_;
};

PercolationParams params_of(const ExperimentConfig& c) { return {c.p, c.seed, c.realizations}; }

double margin_of(const ExperimentConfig& c) {
  return c.margin.value_or(20.0 * family_constants(c.generator.family).l_max);
}

IdsOptions ids_options(const ExperimentConfig& c) {
  IdsOptions o;
  o.counting_radius = c.counting_radius;
  o.margin = margin_of(c);
  o.energies = c.energies.values();
  o.threads = c.threads;
  o.size_cap = c.size_cap;
  o.keep_steps = c.eigenvalue_dump;
  o.cheeger = true;
  return o;
}

// Subcommands ------------------------------------------------------------------------

int cmd_generate(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  run.begin("generate");
  const auto g = generate(cfg.generator);
  const auto rep = geometry_report(g);
  run.emit("graph.txt", graph_to_string(g));
  json j;
  j["family"] = std::string(family_name(cfg.generator.family));
  j["radius"] = cfg.generator.radius;
  j["vertex_count"] = rep.vertex_count;
  j["edge_count"] = rep.edge_count;
  j["min_separation"] = finite_or_null(rep.min_separation);
  j["r"] = finite_or_null(rep.r);
  j["l_max"] = rep.l_max;
  j["d_max"] = rep.d_max;
  json hist = json::object();
  for (const auto& [d, n] : rep.degree_histogram) hist[std::to_string(d)] = n;
  j["degree_histogram"] = hist;
  const auto& k = g.constants();
  j["constants"] = json{{"r", k.r},
                        {"l_max", k.l_max},
                        {"d_max", k.d_max},
                        {"r_dense", k.r_dense ? json(*k.r_dense) : json(nullptr)}};
  run.emit("geometry.json", j.dump(2) + "\n");
  run.end();
  out << family_name(cfg.generator.family) << " radius " << cfg.generator.radius << ": "
      << rep.vertex_count << " vertices, " << rep.edge_count << " edges, d_max " << rep.d_max
      << ", l_max " << rep.l_max << ", min separation " << rep.min_separation << "\n";
  return kExitOk;
}

int cmd_census(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  run.begin("census");
  auto radii = cfg.census_radii;
  std::sort(radii.begin(), radii.end());
  std::vector<std::size_t> distinct;
  EmbeddedGraph big;
  Census census;
  for (double R : radii) {
    auto spec = cfg.generator;
    spec.radius = R;
    auto g = generate(spec);
    census = extract_r_patterns(g, cfg.pattern_radius);
    distinct.push_back(census.distinct());
    big = std::move(g);
  }
  const bool stable = std::adjacent_find(distinct.begin(), distinct.end(),
                                         std::not_equal_to<>()) == distinct.end();
  std::vector<double> fr = cfg.frequency_radii;
  if (fr.empty()) {
    for (int k = 1; k <= 5; ++k) fr.push_back(radii.back() * k / 5.0);
  }

  Table series{{"radius", "n", "count", "volume", "frequency"}, {}};
  Table index{{"pattern", "vertices", "edges", "census_count", "nu", "half_width", "file"}, {}};
  std::size_t idx = 0;
  for (const auto& [pattern, count] : census.counts) {
    const auto rep = frequency_series(pattern, big, fr);
    for (const auto& row : rep.rows) {
      series.rows.push_back({cfg.pattern_radius, row.radius, row.count, row.volume, row.frequency});
    }
    std::ostringstream name;
    name << "patterns/pattern_" << std::setw(3) << std::setfill('0') << idx << ".txt";
    run.emit(name.str(), pattern_to_string(pattern));
    index.rows.push_back({idx, pattern.vertices.size(), pattern.edges.size(), count, rep.nu,
                          rep.half_width, name.str()});
    ++idx;
  }
  run.emit_table("census", series);
  run.emit_table("patterns", index);
  json s;
  s["family"] = std::string(family_name(cfg.generator.family));
  s["pattern_radius"] = cfg.pattern_radius;
  s["generation_radii"] = radii;
  s["distinct_counts"] = distinct;
  s["flc_stable"] = stable;
  s["centers"] = census.centers;
  s["frequency_radii"] = fr;
  run.emit("census_summary.json", s.dump(2) + "\n");
  run.end();
  out << "distinct " << format_number(cfg.pattern_radius) << "-patterns:";
  for (std::size_t i = 0; i < radii.size(); ++i) out << " R=" << radii[i] << ":" << distinct[i];
  out << (stable ? "  (stable)\n" : "  (NOT stable)\n");
  return stable ? kExitOk : kExitFailure;
}

int cmd_percolate(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  run.begin("percolate");
  const auto g = generate(cfg.generator);
  const auto params = params_of(cfg);
  StatOptions so;
  so.threads = cfg.threads;
  const auto tail = cluster_size_tail(g, params, cfg.n_values, so);
  const auto reach = boundary_path_probability(g, params, cfg.n_values, so);
  const auto chi = mean_cluster_size(g, params, so);

  Table t{{"stat", "n_or_p", "estimate", "stderr", "realizations", "seed"}, {}};
  for (const auto& r : tail.rows) {
    t.rows.push_back({"cluster_size_tail", r.n, r.estimate, r.std_error, tail.realizations, cfg.seed});
  }
  for (const auto& r : reach.rows) {
    t.rows.push_back({"boundary_path", r.n, r.estimate, r.std_error, reach.realizations, cfg.seed});
  }
  t.rows.push_back({"mean_cluster_size", cfg.p, chi.value, chi.std_error, chi.realizations, cfg.seed});
  for (double pv : cfg.p_values) {
    const auto m = mean_cluster_size(g, {pv, cfg.seed, cfg.realizations}, so);
    t.rows.push_back({"mean_cluster_size", pv, m.value, m.std_error, m.realizations, cfg.seed});
  }
  run.emit_table("percolate", t);

  const auto& k = g.constants();
  const auto b = bounds_report(cfg.p, k.d_max, k.l_max, chi.value);
  json j;
  j["p"] = b.p;
  j["d_max"] = b.d_max;
  j["l_max"] = b.l_max;
  j["p_c_lower"] = b.p_c_lower;
  j["subcritical"] = b.subcritical;
  j["psi_decay"] = finite_or_null(b.psi_decay);
  j["gamma"] = finite_or_null(b.gamma);
  j["chi"] = chi.value;
  j["chi_stderr"] = chi.std_error;
  j["lambda_decay"] = b.lambda_decay ? finite_or_null(*b.lambda_decay) : json(nullptr);
  j["prefactor_d"] = b.prefactor_d;
  bool pass = true;
  json checks = json::array();
  if (b.subcritical && !reach.truncated) {
    for (const auto& r : reach.rows) {
      const double bound = 2.0 * std::exp(-b.psi_decay * r.n);
      const bool ok = r.estimate <= bound + 4.0 * r.std_error;
      pass = pass && ok;
      checks.push_back(json{{"n", r.n}, {"estimate", r.estimate}, {"stderr", r.std_error},
                            {"bound", bound}, {"ok", ok}});
    }
  }
  j["boundary_path_check"] = checks;
  j["boundary_path_pass"] = pass;
  j["boundary_path_samples"] = reach.sample_vertices * reach.realizations;
  run.emit("bounds.json", j.dump(2) + "\n");
  run.end();
  out << "p " << cfg.p << ": mean cluster size " << chi.value << " +- " << chi.std_error
      << ", p_c >= " << b.p_c_lower << (b.subcritical ? " (subcritical)" : "")
      << ", boundary-path decay " << (pass ? "consistent" : "VIOLATED") << "\n";
  return pass ? kExitOk : kExitFailure;
}

IdsTable run_ids(const ExperimentConfig& cfg, const EmbeddedGraph& g, Run& run, std::ostream& out) {
  run.begin("ids");
  const auto t = ids_estimate(g, params_of(cfg), ids_options(cfg));
  Table tab{{"E", "N", "N_minus_N0", "stderr", "realizations", "n", "p", "seed"}, {}};
  for (const auto& r : t.rows) {
    tab.rows.push_back({r.E, r.N, r.tail, r.tail_std_error, t.realizations_used, t.counting_radius,
                        t.p, t.seed});
  }
  run.emit_table("ids", tab);
  if (cfg.eigenvalue_dump) {
    Table eig{{"cluster_size", "eigenvalue", "weight"}, {}};
    for (const auto& [key, w] : t.steps) eig.rows.push_back({key.first, key.second, w});
    run.emit_table("eigenvalues", eig);
  }
  json s;
  s["counting_radius"] = t.counting_radius;
  s["volume"] = t.volume;
  s["p"] = t.p;
  s["seed"] = t.seed;
  s["rho_hat"] = t.rho_hat;
  s["n0"] = t.n0;
  s["n0_stderr"] = t.n0_std_error;
  s["realizations_requested"] = t.realizations_requested;
  s["realizations_used"] = t.realizations_used;
  s["excluded_boundary"] = t.excluded_boundary;
  s["aborted_oversize"] = t.aborted_oversize;
  s["cheeger"] = json{{"clusters", t.cheeger.clusters},
                      {"violations", t.cheeger.violations},
                      {"min_margin", t.cheeger.min_margin}};
  s["diagnostics"] = t.diagnostics;
  run.emit("ids_summary.json", s.dump(2) + "\n");
  run.end();
  out << "ids: " << t.realizations_used << "/" << t.realizations_requested
      << " realizations used (" << t.excluded_boundary << " reached the boundary, "
      << t.aborted_oversize << " oversize), rho " << t.rho_hat << ", N(0) " << t.n0 << ", "
      << t.cheeger.clusters << " clusters Cheeger-checked, " << t.cheeger.violations
      << " violations\n";
  return t;
}

int cmd_ids(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  const auto g = generate(cfg.generator);
  const auto t = run_ids(cfg, g, run, out);
  return t.cheeger.violations == 0 ? kExitOk : kExitFailure;
}

int cmd_lifshits(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  const auto g = generate(cfg.generator);
  const auto t = run_ids(cfg, g, run, out);
  run.begin("lifshits");
  StatOptions so;
  so.threads = cfg.threads;
  const auto chi = mean_cluster_size(g, {cfg.p, cfg.seed, cfg.chi_realizations}, so);
  const auto& k = g.constants();
  const auto b = bounds_report(cfg.p, k.d_max, k.l_max, chi.value);
  const double radii[] = {cfg.counting_radius};
  const auto dens = density_report(g, radii);
  const double rho = t.rho_hat;
  const double rho_inf = dens.rows.front().rho_inf;

  TailFitOptions fo;
  fo.e_min = cfg.fit_e_min;
  fo.e_max = cfg.fit_e_max;
  fo.max_relative_error = cfg.max_relative_error;
  fo.min_points = cfg.min_points;
  const auto a = tail_fit(t, fo);
  BracketInputs in;
  in.rho = rho;
  in.rho_inf = rho_inf;
  in.p = cfg.p;
  in.d_max = k.d_max;
  in.lambda = b.lambda_decay;
  const auto br = certify_bracketing(a, in);
  const bool exponent_ok = a.r2 >= 0.95 && a.decades >= 1.0;

  json j;
  j["slope"] = a.slope;
  j["slope_stderr"] = a.slope_stderr;
  j["intercept"] = a.intercept;
  j["r2"] = a.r2;
  j["r2_unweighted"] = a.r2_unweighted;
  j["loglog_ratio"] = a.loglog_ratio;
  j["decades"] = a.decades;
  j["reliable_points"] = a.reliable_points;
  j["reliable_e_min"] = a.reliable_e_min;
  j["reliable_e_max"] = a.reliable_e_max;
  j["floor"] = a.floor;
  j["realizations"] = a.realizations;
  j["p"] = cfg.p;
  j["d_max"] = k.d_max;
  j["gamma"] = br.gamma;
  j["chi"] = chi.value;
  j["chi_stderr"] = chi.std_error;
  j["lambda"] = b.lambda_decay ? json(*b.lambda_decay) : json(nullptr);
  j["rho"] = rho;
  j["rho_inf"] = rho_inf;
  j["bracket_pass"] = br.rigorous_pass;
  j["lower_violations"] = br.lower_violations;
  j["upper_diagnostic_pass"] = br.upper_diagnostic_pass;
  j["exponent_fit_pass"] = exponent_ok;

  Table csv{{"E", "tail", "stderr", "reliable", "lower", "upper", "fitted", "lower_ok"}, {}};
  json E = json::array(), tail = json::array(), se = json::array(), rel = json::array(),
       lo = json::array(), up = json::array(), fit = json::array(), ok = json::array();
  for (const auto& pt : a.points) {
    const double lower = lower_bound_with_rate(pt.E, br.gamma, rho_inf);
    const json upper = b.lambda_decay ? json(upper_bound(pt.E, rho, *b.lambda_decay)) : json(nullptr);
    const bool lower_ok = pt.tail + 4.0 * pt.std_error >= lower;
    const double fitted = a.fitted(pt.E);
    csv.rows.push_back({pt.E, pt.tail, pt.std_error, pt.reliable, lower, upper, fitted, lower_ok});
    E.push_back(pt.E);
    tail.push_back(pt.tail);
    se.push_back(pt.std_error);
    rel.push_back(pt.reliable);
    lo.push_back(lower);
    up.push_back(upper);
    fit.push_back(fitted);
    ok.push_back(lower_ok);
  }
  j["points"] = json{{"E", E},     {"tail", tail},     {"stderr", se}, {"reliable", rel},
                     {"lower", lo}, {"upper", up},     {"fitted", fit}, {"lower_ok", ok}};
  run.emit("lifshits.json", j.dump(2) + "\n");
  run.emit("lifshits.csv", csv.csv());
  run.end();
  out << "tail fit: slope " << a.slope << " +- " << a.slope_stderr << ", R^2 " << a.r2
      << " (unweighted " << a.r2_unweighted << ") over " << a.decades << " decades, "
      << a.reliable_points << " reliable points\n"
      << "lower bound " << (br.rigorous_pass ? "holds" : "VIOLATED") << " at every reliable point ("
      << br.lower_violations << " violations); upper diagnostic "
      << (br.upper_diagnostic_pass ? "consistent" : "exceeded") << "\n";
  return br.rigorous_pass ? kExitOk : kExitFailure;
}

int cmd_verify(const ExperimentConfig& cfg, Run& run, std::ostream& out) {
  run.begin("verify");
  const auto checks = verify_checks(cfg.seed, cfg.threads);
  Table t{{"check", "passed", "detail"}, {}};
  bool all = true;
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    all = all && c.passed;
    t.rows.push_back({c.name, c.passed, c.detail});
    out << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width) + 2)
        << c.name << c.detail << "\n";
  }
  run.emit("verify.csv", t.csv());
  run.end();
  out << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? kExitOk : kExitFailure;
}

}  // namespace

// Public helpers --------------------------------------------------------------------------

std::vector<double> EnergyGrid::values() const {
  std::vector<double> e;
  if (points == 1) return {min};
  for (int k = 0; k < points; ++k) {
    const double t = k / (points - 1.0);
    e.push_back(log ? min * std::pow(max / min, t) : min + (max - min) * t);
  }
  e.back() = max;
  return e;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void set_value(ExperimentConfig& cfg, std::string_view key, std::string_view value,
               const std::string& where) {
  const auto& table = keys();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
  if (it == table.end()) throw ConfigError("unknown key '" + std::string(key) + "'", where);
  try {
    it->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what(), where);
  }
  cfg.origin[std::string(key)] = where;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source, ExperimentConfig cfg) {
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto c = line.find_first_of("#;"); c != line.npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", where);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"generator", "percolation", "census", "ids", "lifshits", "output"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        throw ConfigError("unknown section [" + section + "]", where);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == line.npos) throw ConfigError("expected 'key = value'", where);
    if (section.empty()) throw ConfigError("key outside any section", where);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", where);
    set_value(cfg, section + "." + std::string(key), line.substr(eq + 1), where);
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

void validate(const ExperimentConfig& c, std::string_view command) {
  try {
    qperc::validate(c.generator);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), where_of(c, "generator.radius"));
  }
  if (!(c.p >= 0.0 && c.p <= 1.0)) throw ConfigError("p must lie in [0, 1]", where_of(c, "percolation.p"));
  if (c.realizations == 0) {
    throw ConfigError("realizations must be positive", where_of(c, "percolation.realizations"));
  }
  const double R = c.generator.radius;
  const double l_max = family_constants(c.generator.family).l_max;

  if (command == "census") {
    if (!(c.pattern_radius > 0.0)) {
      throw ConfigError("pattern_radius must be positive", where_of(c, "census.pattern_radius"));
    }
    if (c.census_radii.empty()) {
      throw ConfigError("generation_radii must not be empty", where_of(c, "census.generation_radii"));
    }
    for (double r : c.census_radii) {
      if (!(r > c.pattern_radius)) {
        throw ConfigError("generation radii must exceed the pattern radius",
                          where_of(c, "census.generation_radii"));
      }
    }
    const double top = *std::max_element(c.census_radii.begin(), c.census_radii.end());
    for (std::size_t i = 0; i < c.frequency_radii.size(); ++i) {
      if (!(c.frequency_radii[i] > 0.0) || c.frequency_radii[i] > top ||
          (i > 0 && c.frequency_radii[i] <= c.frequency_radii[i - 1])) {
        throw ConfigError("frequency radii must increase and stay within the largest generation radius",
                          where_of(c, "census.frequency_radii"));
      }
    }
  }
  if (command == "percolate") {
    if (c.n_values.empty()) throw ConfigError("n_values must not be empty", where_of(c, "percolation.n_values"));
    const double top = *std::max_element(c.n_values.begin(), c.n_values.end());
    if (!(top * l_max < R)) {
      throw ConfigError("max(n_values) * l_max must stay below the generation radius",
                        where_of(c, "percolation.n_values"));
    }
    for (double pv : c.p_values) {
      if (!(pv >= 0.0 && pv <= 1.0)) {
        throw ConfigError("p_values must lie in [0, 1]", where_of(c, "percolation.p_values"));
      }
    }
  }
  if (command == "ids" || command == "lifshits") {
    if (!(c.counting_radius > 0.0)) {
      throw ConfigError("counting radius must be positive", where_of(c, "ids.counting_radius"));
    }
    if (c.margin && !(*c.margin >= 0.0)) throw ConfigError("margin must be nonnegative", where_of(c, "ids.margin"));
    const double m = margin_of(c);
    if (c.counting_radius + m > R) {
      std::ostringstream msg;
      msg << "counting radius " << c.counting_radius << " plus margin " << m
          << " exceeds the generation radius " << R;
      throw ConfigError(msg.str(), where_of(c, "ids.counting_radius"));
    }
    if (c.energies.points < 1) throw ConfigError("e_points must be positive", where_of(c, "ids.e_points"));
    if (c.energies.max < c.energies.min) throw ConfigError("e_max < e_min", where_of(c, "ids.e_max"));
    if (c.energies.log && !(c.energies.min > 0.0)) {
      throw ConfigError("a log grid needs e_min > 0", where_of(c, "ids.e_min"));
    }
    if (c.size_cap == 0) throw ConfigError("size_cap must be positive", where_of(c, "ids.size_cap"));
  }
  if (command == "lifshits") {
    if (!(c.p > 0.0 && c.p < 1.0)) throw ConfigError("lifshits needs 0 < p < 1", where_of(c, "percolation.p"));
    if (c.realizations < 100) {
      throw ConfigError("lifshits needs at least 100 realizations", where_of(c, "percolation.realizations"));
    }
    if (!(c.fit_e_min > 0.0) || c.fit_e_max <= c.fit_e_min) {
      throw ConfigError("fit range must satisfy 0 < fit_e_min < fit_e_max", where_of(c, "lifshits.fit_e_min"));
    }
    if (c.chi_realizations == 0) {
      throw ConfigError("chi_realizations must be positive", where_of(c, "lifshits.chi_realizations"));
    }
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

void write_atomic(const fs::path& file, std::string_view content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, file);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bond percolation on periodic and aperiodic graphs: generation, pattern census, "
               "cluster statistics, integrated density of states and Lifshits-tail checks."};
  app.name("qperc");
  app.set_version_flag("--version", QPERC_VERSION);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, format;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;
  bool eigs = false;

  const std::pair<const char*, const char*> commands[] = {
      {"generate", "write a graph patch and its geometry report"},
      {"census", "r-pattern census, frequency series and FLC stability"},
      {"percolate", "cluster statistics and subcritical bounds"},
      {"ids", "integrated density of states of the percolation Laplacian"},
      {"lifshits", "IDS tail fit and Lifshits-bracket certification"},
      {"verify", "invariant and oracle checks on small instances"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "config file (key = value with [sections])");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--set", sets, "override a config key: section.key=value");
    if (std::string_view(name) == "ids" || std::string_view(name) == "lifshits") {
      sub->add_flag("--eigenvalues", eigs, "also write the averaged eigenvalue table");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError("cannot open config file", config_path);
      std::stringstream buf;
      buf << f.rdbuf();
      cfg = parse_config(buf.str(), config_path, cfg);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("expected section.key=value", "--set " + s);
      set_value(cfg, trim(std::string_view(s).substr(0, eq)), std::string_view(s).substr(eq + 1), "--set");
    }
    if (seed) set_value(cfg, "percolation.seed", std::to_string(*seed), "--seed");
    if (out_dir) set_value(cfg, "output.dir", *out_dir, "--out");
    if (threads) set_value(cfg, "output.threads", std::to_string(*threads), "--threads");
    if (format) set_value(cfg, "output.format", *format, "--format");
    if (eigs) set_value(cfg, "ids.eigenvalue_dump", "true", "--eigenvalues");
    validate(cfg, command);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::optional<Run> r;
  try {
    r.emplace(cfg, command);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  int code = kExitFailure;
  std::string error;
  try {
    if (command == "generate") code = cmd_generate(cfg, *r, out);
    if (command == "census") code = cmd_census(cfg, *r, out);
    if (command == "percolate") code = cmd_percolate(cfg, *r, out);
    if (command == "ids") code = cmd_ids(cfg, *r, out);
    if (command == "lifshits") code = cmd_lifshits(cfg, *r, out);
    if (command == "verify") code = cmd_verify(cfg, *r, out);
  } catch (const ConfigError& e) {
    error = e.what();
    code = kExitConfig;
  } catch (const std::invalid_argument& e) {
    error = e.what();
    code = kExitConfig;
  } catch (const std::exception& e) {
    error = e.what();
    code = kExitFailure;
  }
  if (!error.empty()) err << (code == kExitConfig ? "config error: " : "error: ") << error << "\n";
  try {
    r->finish(code, error);
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << "\n";
    return kExitFailure;
  }
  return code;
}

}  // namespace qperc::cli
