#pragma once

// Segmented sinusoidal force F(t) = amps[p] sin(mu t) on [p tau/m, (p+1) tau/m)
// and the oscillatory integrals that drive the gate:
//
//   G_{p,k} = int_{seg p} sin(mu t) e^{i omega_k t} dt
//   J^{(k)}_{pq} = int_{seg p} dt2 int_{seg q, t1 < t2} dt1
//                  sin(mu t2) sin(mu t1) sin(omega_k (t2 - t1))

#include "iongate/crystal.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace iongate {

using cplx = std::complex<double>;

struct PulseSchedule {
  double tau = kTau0;
  double mu = 1.0;
  Eigen::VectorXd amps = Eigen::VectorXd::Ones(1);

  [[nodiscard]] int segments() const { return static_cast<int>(amps.size()); }
  /// Boundary t_p = p tau / m, exact at both ends.
  [[nodiscard]] double boundary(int p) const;
  /// Same timing and detuning, unit amplitudes on `m` segments.
  static PulseSchedule uniform(double tau, double mu, int m);
};

/// Throws std::invalid_argument unless tau > 0, mu > 0 and m >= 1.
void validate(const PulseSchedule& schedule);

/// int_{t_start}^{t_end} sin(mu t) e^{i omega t} dt.
cplx segment_moment(double mu, double omega, double t_start, double t_end);

/// Closed-form antiderivative e^{i w t}(mu cos mu t - i w sin mu t)/(w^2 - mu^2),
/// or -e^{2 i mu t}/(4 mu) + i t/2 at exact resonance. Reference route only;
/// it loses precision near resonance.
cplx moment_antiderivative(double mu, double omega, double t);

/// int_0^L ds2 int_0^{s2} ds1 exp(i (x s2 + y s1)), evaluated without
/// cancellation for any x, y.
cplx triangle_exponential(double x, double y, double length);

/// m x K matrix of segment moments for every mode in `modes`.
Eigen::MatrixXcd all_moments(const PulseSchedule& schedule, const ModeSet& modes);

/// Symmetrized m x m kernel for one mode with unit couplings, so that
/// x^T K x = int_0^tau dt2 int_0^{t2} dt1 F(t2) F(t1) sin(omega (t2 - t1)).
/// Only the segment geometry of `schedule` is used.
Eigen::MatrixXd mode_phase_kernel(const PulseSchedule& schedule, double omega);

/// Same kernel by nested adaptive Gauss-Kronrod quadrature.
Eigen::MatrixXd mode_phase_kernel_quadrature(const PulseSchedule& schedule, double omega,
                                             double rel_tol = 1e-11);

/// Per-mode phase kernels for ions (i, j): entry k is 2 g_i^k g_j^k K^{(k)},
/// so that x^T (sum_k entry k) x is the conditional phase phi_ij.
std::vector<Eigen::MatrixXd> pair_phase_kernels(const PulseSchedule& schedule,
                                                const ModeSet& modes, int row_i, int row_j);

/// Sum of pair_phase_kernels.
Eigen::MatrixXd phase_kernel(const PulseSchedule& schedule, const ModeSet& modes, int row_i,
                             int row_j);

}  // namespace iongate
