#pragma once

// Brute-force check of the analytic gate model. Each sigma_z branch
// (s_i, s_j) turns the spin-dependent force into a classical drive on every
// mode,
//
//   H_s(t) = -F(t) sum_k (s_i g_i^k + s_j g_j^k) (a_k^dag e^{i w_k t} + a_k e^{-i w_k t}),
//
// which is integrated in a truncated Fock space with an adaptive Dormand-Prince
// stepper. The gate fidelity then follows from the branch overlaps averaged over
// thermal Fock occupations.

#include "iongate/crystal.hpp"
#include "iongate/gate_physics.hpp"
#include "iongate/pulse_kernel.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace iongate {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evolves Fock-space columns (rows = levels 0..cutoff-1) of one mode under
/// H = -c F(t)(a^dag e^{i w t} + a e^{-i w t}). Throws OracleError when a column
/// norm drifts by more than 1e-6.
Eigen::MatrixXcd evolve_mode(const PulseSchedule& schedule, double omega, double coupling,
                             const Eigen::MatrixXcd& initial, double tolerance = 1e-10);

/// Branch state for spin signs (s_i, s_j) starting from the product Fock state
/// `fock` (one occupation per mode). Modes are evolved separately and combined
/// with a Kronecker product; index order is mode 0 slowest.
Eigen::VectorXcd evolve_branch(const PulseSchedule& schedule, const ModeSet& modes,
                               GatePair rows, int s_i, int s_j, const std::vector<int>& fock,
                               int cutoff, double tolerance = 1e-10);

/// Same state from one integration of the full multi-mode Hamiltonian. Only
/// meant for small product spaces.
Eigen::VectorXcd evolve_branch_joint(const PulseSchedule& schedule, const ModeSet& modes,
                                     GatePair rows, int s_i, int s_j,
                                     const std::vector<int>& fock, int cutoff,
                                     double tolerance = 1e-10);

/// Boltzmann weights p_n = (1 - q) q^n for a mode of frequency `omega`, with the
/// temperature fixed by the COM occupation `nbar_com`. Levels are kept until
/// the discarded tail weighs less than `epsilon`; weights are renormalized.
std::vector<double> thermal_weights(double nbar_com, double omega, double epsilon);

struct OracleConfig {
  PulseSchedule schedule;
  ModeSet modes;
  GatePair rows;
  double nbar = 0;
  int fock_cutoff = 40;
  int max_cutoff = 320;
  double thermal_epsilon = 1e-6;
  double tolerance = 1e-10;
  /// Stop raising the cutoff once two successive fidelities agree this well.
  double convergence = 1e-6;
};

struct CutoffStep {
  int cutoff = 0;
  double fidelity = 0;
};

struct OracleReport {
  double fidelity_numeric = 0;
  /// Analytic fidelity with the exact thermal overlap (full_displacement).
  double fidelity_analytic = 0;
  /// Analytic fidelity in the half_displacement convention.
  double fidelity_half = 0;
  double abs_difference = 0;
  /// phi_ij from the vacuum branch phases and from the phase kernel.
  double phase_numeric = 0;
  double phase_analytic = 0;
  std::vector<CutoffStep> trace;
  bool converged = false;
};

/// Thermal gate fidelity against the CPF target exp(+-i pi/4 sz_i sz_j), the
/// sign following the numerically extracted phase. The amplitudes are used as
/// given; normalize them first.
OracleReport thermal_fidelity(const OracleConfig& config);

}  // namespace iongate
