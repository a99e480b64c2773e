#pragma once
// Command-line front end: experiment configuration, run manifests and the
// subcommands that wire the library into reproducible experiments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qperc/generators.hpp"

namespace qperc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Invalid configuration. `where` names the file and line (or flag) that set
/// the offending value, when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string where = {})
      : std::runtime_error(where.empty() ? message : where + ": " + message),
        where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct EnergyGrid {
  double min = 0.02;
  double max = 0.5;
  int points = 41;
  bool log = true;  // log-spaced, otherwise linear
  std::vector<double> values() const;
};

struct ExperimentConfig {
  // [generator]
  GeneratorSpec generator{Family::square, 60.0, {0.13, 0.27, -0.31, 0.42, -0.51}, {0.1234, 0.0567}};
  // [percolation]
  double p = 0.1;
  std::uint64_t seed = 1;
  std::size_t realizations = 200;
  std::vector<double> n_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> p_values;  // optional mean-cluster-size sweep
  // [census]
  double pattern_radius = 1.1;
  std::vector<double> census_radii{20.0, 40.0};  // generation radii compared for FLC
  std::vector<double> frequency_radii;           // empty: derived from the largest patch
  // [ids]
  double counting_radius = 20.0;
  std::optional<double> margin;  // default 20 * l_max
  EnergyGrid energies;
  std::size_t size_cap = 2000;
  bool eigenvalue_dump = false;
  // [lifshits]
  double fit_e_min = 0.02;
  double fit_e_max = 0.5;
  double max_relative_error = 0.5;
  std::size_t min_points = 8;
  std::size_t chi_realizations = 100;
  // [output]
  std::string out_dir = "out";
  std::string format = "csv";
  unsigned threads = 1;

  /// Where each key was last set ("file:line", "--seed", ...).
  std::map<std::string, std::string> origin;
};

/// Parses `[section]` / `key = value` text; `#` and `;` start comments.
/// Throws ConfigError naming `source` and the line.
ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              ExperimentConfig base = {});

/// Sets `section.key` from text. Throws ConfigError tagged with `where`.
void set_value(ExperimentConfig& cfg, std::string_view key, std::string_view value,
               const std::string& where);

/// Every key with its effective value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

/// Cross-field checks for a subcommand. Throws ConfigError.
void validate(const ExperimentConfig& cfg, std::string_view command);

std::string sha256_hex(std::string_view data);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& file, std::string_view content);

/// Shortest round-trip decimal text of a double.
std::string format_number(double x);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant and oracle checks on small instances.
std::vector<CheckResult> verify_checks(std::uint64_t seed, unsigned threads);

/// Entry point: parses arguments, runs one subcommand and returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qperc::cli
