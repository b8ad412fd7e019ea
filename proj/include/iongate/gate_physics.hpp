#pragma once

// Residual spin-motion displacements, conditional phase and thermal gate
// fidelity for a CPF gate exp(i pi sz_i sz_j / 4) driven by identical forces
// on ions i and j. Initial spin state |+>|+>.

#include "iongate/crystal.hpp"
#include "iongate/pulse_kernel.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace iongate {

class GateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weight of the residual displacements in the fidelity exponents.
///
/// `half_displacement` evaluates G_x = exp(-sum_k |d^k|^2 beta_k / 2), the form
/// behind the reference fidelity landscapes. `full_displacement` evaluates
/// G_x = exp(-2 sum_k |d^k|^2 beta_k), the exact thermal overlap of the two spin
/// branches for sigma_z = +-1 coupling, which brute-force integration confirms.
/// The two agree up to a factor 4 in the exponents.
enum class FidelityConvention { half_displacement, full_displacement };

const char* to_string(FidelityConvention convention);

/// Ions addressed by the gate, 0-based crystal indices.
struct GatePair {
  int i = 0;
  int j = 1;
};

/// Parses "I,J" with 1-based indices.
GatePair parse_pair(const std::string& text, int n_ions);

/// Throws GateError unless i != j and both lie in [0, n_ions).
void validate(const GatePair& pair, int n_ions);

struct PhaseBreakdown {
  double total = 0;
  Eigen::VectorXd per_mode;
};

struct GateOutcome {
  Eigen::VectorXcd alpha_i;
  Eigen::VectorXcd alpha_j;
  double phi_total = 0;
  Eigen::VectorXd phi_per_mode;
  double fidelity = 0;
  /// Global factor applied to the input amplitudes to reach |phi| = pi/4.
  double amp_scale = 1;
  /// Scaled first-segment amplitude.
  double required_amp = 0;
  /// Amplitudes after scaling.
  Eigen::VectorXd amps;
};

/// alpha_n^k = i g_n^k sum_p amps_p G_{p,k} for the ion on row `row` of the mode set.
Eigen::VectorXcd alpha(const PulseSchedule& schedule, const ModeSet& modes, int row);

/// phi_ij split over modes.
PhaseBreakdown conditional_phase(const PulseSchedule& schedule, const ModeSet& modes,
                                 int row_i, int row_j);

/// Thermal fidelity of the gate given residual displacements; assumes the
/// conditional phase is already at its target value.
///
///   F = (2 + 2 G_i + 2 G_j + G_+ + G_-) / 8,   d in {alpha_i, alpha_j, alpha_i +- alpha_j}
///
/// F = 1 for closed loops and F -> 1/4 (fully mixed spins) for large residuals.
double fidelity(const Eigen::VectorXcd& alpha_i, const Eigen::VectorXcd& alpha_j,
                const Eigen::VectorXd& betas,
                FidelityConvention convention = FidelityConvention::half_displacement);

/// Rescales the amplitudes so that |phi_total| = pi/4. The sign of the phase
/// cannot change under real rescaling; a negative phase realizes the conjugate
/// CPF gate, which has the same fidelity. Recomputes nothing but the
/// scalings, so `fidelity` must be refreshed by the caller.
GateOutcome normalize_phase(const GateOutcome& outcome);

/// Non-COM share of the conditional phase. `com_mode` is the index of the
/// centre-of-mass mode in the phase breakdown.
double spectator_fraction(const GateOutcome& outcome, int com_mode = 0);

/// Precomputed segment moments and per-mode phase kernels for one gate
/// configuration; evaluates any amplitude vector in O(m K + m^2 K).
class GateModel {
 public:
  GateModel(const PulseSchedule& geometry, ModeSet modes, GatePair pair, Eigen::VectorXd betas,
            FidelityConvention convention = FidelityConvention::half_displacement);

  [[nodiscard]] const ModeSet& modes() const { return modes_; }
  [[nodiscard]] const Eigen::MatrixXcd& moments() const { return moments_; }
  [[nodiscard]] const Eigen::MatrixXd& kernel() const { return total_kernel_; }
  [[nodiscard]] const std::vector<Eigen::MatrixXd>& mode_kernels() const { return kernels_; }
  [[nodiscard]] const Eigen::VectorXd& betas() const { return betas_; }
  [[nodiscard]] int segments() const { return static_cast<int>(moments_.rows()); }
  [[nodiscard]] int row_i() const { return row_i_; }
  [[nodiscard]] int row_j() const { return row_j_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] double mu() const { return mu_; }
  [[nodiscard]] FidelityConvention convention() const { return convention_; }
  /// Coefficient c in 1 - F ~ c sum_k beta_k (|alpha_i^k|^2 + |alpha_j^k|^2).
  [[nodiscard]] double small_residual_weight() const;

  /// Outcome at the given amplitudes, without normalization.
  [[nodiscard]] GateOutcome evaluate(const Eigen::VectorXd& amps) const;
  /// Outcome rescaled to |phi| = pi/4 with the fidelity recomputed.
  /// Throws GateError for a phase-null amplitude vector.
  [[nodiscard]] GateOutcome evaluate_normalized(const Eigen::VectorXd& amps) const;
  /// Fidelity after normalization; 0 for phase-null vectors. Cheap path for optimizers.
  [[nodiscard]] double normalized_fidelity(const Eigen::VectorXd& amps) const;

 private:
  ModeSet modes_;
  int row_i_;
  int row_j_;
  double tau_;
  double mu_;
  Eigen::VectorXd betas_;
  FidelityConvention convention_;
  Eigen::MatrixXcd moments_;
  std::vector<Eigen::MatrixXd> kernels_;
  Eigen::MatrixXd total_kernel_;
  // Columns of moments_ scaled by the couplings of each gate ion, times i.
  Eigen::MatrixXcd drive_i_;
  Eigen::MatrixXcd drive_j_;
};

}  // namespace iongate
