#pragma once
// Graph Laplacians of percolation clusters, their spectra, the closed-form
// chain spectrum, the Cheeger lower bound and the finite-volume integrated
// density of states.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qperc/graph.hpp"
#include "qperc/percolation.hpp"

namespace qperc {

/// Laplacian of one cluster: degree within the cluster on the diagonal, -1
/// for open edges. Rows follow `vertices`.
struct ClusterLaplacian {
  std::vector<VertexId> vertices;
  Eigen::MatrixXd matrix;
};

/// `cluster` lists the member vertices; rows are ordered by exact coordinate,
/// so equal shapes produce identical matrices. Throws std::invalid_argument
/// for an empty cluster.
ClusterLaplacian cluster_laplacian(const EmbeddedGraph& g, const BondConfiguration& omega,
                                   std::span<const VertexId> cluster);

/// Laplacian of all of G^(omega) (every vertex, open edges only; omega null
/// means every edge open).
Eigen::MatrixXd full_laplacian(const EmbeddedGraph& g, const BondConfiguration* omega = nullptr);

/// Laplacian of the path with l vertices.
Eigen::MatrixXd chain_laplacian(int l);

struct Spectrum {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // column k belongs to values[k]
};

/// Eigenvalues below kZeroSnap in magnitude are reported as exactly zero.
inline constexpr double kZeroSnap = 1e-10;

/// Dense symmetric eigendecomposition. Verifies
/// |M phi_k - lambda_k phi_k| <= tol * |M|_inf for every pair and that all
/// eigenvalues lie in [-tol', 2 max_diag + tol'] with tol' = tol * max(1, |M|_inf).
/// Throws std::runtime_error on non-convergence or a failed check.
Spectrum eigenvalues(const Eigen::MatrixXd& m, double tol = 1e-12);
inline Spectrum eigenvalues(const ClusterLaplacian& c, double tol = 1e-12) {
  return eigenvalues(c.matrix, tol);
}

struct ChainSpectrum {
  std::vector<double> values;                // E_k = 4 sin^2(pi k / 2l), k = 0..l-1
  std::vector<std::vector<double>> vectors;  // vectors[k][j-1] = <delta_j, phi_k>
};

/// Closed form for the path of l vertices. Throws std::invalid_argument for l < 2.
ChainSpectrum chain_spectrum(int l);

struct CheegerResult {
  bool passes = false;
  double e1 = 0.0;      // smallest nonzero eigenvalue
  double bound = 0.0;   // |C|^-2
  double margin = 0.0;  // e1 - bound
};

/// E_1 >= |C|^-2 - tol for a connected cluster with at least two vertices.
/// Throws std::invalid_argument for smaller or disconnected input.
CheegerResult cheeger_check(const Eigen::MatrixXd& m, std::span<const double> eigs,
                            double tol = 1e-9);
inline CheegerResult cheeger_check(const ClusterLaplacian& c, const Spectrum& s,
                                   double tol = 1e-9) {
  return cheeger_check(c.matrix, s.values, tol);
}

// Integrated density of states ----------------------------------------------------

struct IdsOptions {
  double counting_radius = 10.0;  // B_n centred at the origin
  /// Required distance between B_n and the patch boundary; default 20 * l_max.
  std::optional<double> margin;
  /// Energies at which N_n is tabulated (ascending).
  std::vector<double> energies;
  /// Treat the patch as the whole graph: no margin requirement and no
  /// exclusion of clusters that reach the patch boundary.
  bool finite_graph = false;
  unsigned threads = 1;
  std::size_t size_cap = 2000;
  /// Keep the averaged (cluster size, eigenvalue) -> weight table.
  bool keep_steps = false;
  /// Run the Cheeger check on every counted cluster with >= 2 vertices.
  bool cheeger = false;
};

struct IdsRow {
  double E = 0.0;
  double N = 0.0;
  double N_std_error = 0.0;
  double tail = 0.0;  // N(E) - N(0)
  double tail_std_error = 0.0;
};

struct CheegerStats {
  std::size_t clusters = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;
};

struct IdsTable {
  double counting_radius = 0.0;
  double volume = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::size_t realizations_requested = 0;
  std::size_t realizations_used = 0;
  std::size_t excluded_boundary = 0;  // a counted cluster reached the patch boundary
  std::size_t aborted_oversize = 0;   // a counted cluster exceeded the size cap
  double rho_hat = 0.0;               // |V cap B_n| / vol(B_n)
  double n0 = 0.0;
  double n0_std_error = 0.0;
  std::vector<IdsRow> rows;
  /// (cluster size, eigenvalue) -> weight averaged over used realizations.
  std::map<std::pair<std::size_t, double>, double> steps;
  CheegerStats cheeger;
  std::vector<std::string> diagnostics;

  /// N_n(E) from the step table (requires keep_steps).
  double evaluate(double E) const;
};

/// Averages the finite-volume counting function over realizations. Throws
/// std::invalid_argument when the margin is violated and std::runtime_error
/// when no realization survives.
IdsTable ids_estimate(const EmbeddedGraph& g, const PercolationParams& params,
                      const IdsOptions& options);

inline constexpr std::size_t kIdsOracleMaxEdges = 16;

/// Exact expectation of N_n on the energy grid: every configuration's full
/// Laplacian is diagonalized and weighted by the projector mass inside B_n.
/// Throws std::invalid_argument above kIdsOracleMaxEdges edges.
std::vector<double> bruteforce_ids_oracle(const EmbeddedGraph& g, double p,
                                          std::span<const double> energies,
                                          double counting_radius);

struct IdsMoments {
  std::vector<double> mean;      // E[N_n(E)]
  std::vector<double> variance;  // Var[N_n(E)] over configurations
};

/// As above, plus the exact single-realization variance, so Monte Carlo
/// estimates can be compared in units of their true standard error.
IdsMoments bruteforce_ids_moments(const EmbeddedGraph& g, double p,
                                  std::span<const double> energies, double counting_radius);

}  // namespace qperc
