#pragma once

// Linear Coulomb crystal of N identical ions in a harmonic trap.
//
// Units: hbar = M = omega = 1. Lengths are measured in (e^2 / 4 pi eps0 M omega^2)^(1/3),
// times in 1/omega, so one trap period is tau0 = 2 pi.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iongate {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTau0 = 2.0 * kPi;

class CrystalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normal modes over a set of moving coordinates.
///
/// Column k of `vectors` is the orthonormal eigenvector b^k; eigenvalues are
/// sorted ascending. `couplings(n, k) = b_n^k / sqrt(2 omega_k)`.
struct ModeSet {
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd frequencies;
  Eigen::MatrixXd vectors;
  Eigen::MatrixXd couplings;
  /// Crystal ion index (0-based) of each row.
  std::vector<int> ions;

  [[nodiscard]] int size() const { return static_cast<int>(eigenvalues.size()); }
  /// Row of `ion` (0-based crystal index) or -1 when the ion is pinned.
  [[nodiscard]] int row_of(int ion) const;
};

struct Crystal {
  Eigen::VectorXd positions;
  Eigen::MatrixXd coupling;
  ModeSet modes;

  [[nodiscard]] int size() const { return static_cast<int>(positions.size()); }
};

struct EquilibriumOptions {
  double tolerance = 1e-12;
  int max_iterations = 200;
};

/// Net force on every ion; zero at equilibrium.
Eigen::VectorXd equilibrium_residual(const Eigen::VectorXd& positions);

/// Equilibrium positions (ascending) of an n_ions chain, by damped Newton iteration.
Eigen::VectorXd solve_equilibrium(int n_ions, const EquilibriumOptions& options = {});

/// Hessian of the trap plus Coulomb potential at `positions`.
Eigen::MatrixXd build_coupling(const Eigen::VectorXd& positions);

ModeSet solve_modes(const Eigen::MatrixXd& coupling);

Crystal make_crystal(int n_ions);

/// Oscillation frequency of ion `ion` (0-based) with every other ion pinned: sqrt(A_ii).
double local_frequency(const Crystal& crystal, int ion);

/// coth((sqrt(mu_k) / 2) ln(1 + 1/nbar_com)) per mode.
Eigen::VectorXd thermal_betas(double nbar_com, const ModeSet& modes);

/// Modes of the principal submatrix of A on `moving` (0-based ion indices);
/// all other ions stay at their equilibrium positions. Every ion in `required`
/// must be part of the moving set.
ModeSet restricted_modes(const Crystal& crystal, std::span<const int> moving,
                         std::span<const int> required = {});

/// `pair` plus the `n_neighbors` ions closest in index to either gate ion.
std::vector<int> neighbor_set(const Crystal& crystal, int ion_i, int ion_j, int n_neighbors);

}  // namespace iongate
