#pragma once

// Segment-amplitude design for the segmented CPF gate.
//
// Three routes:
//  * exact_null: m = 2K + 1 segments close every phase-space loop exactly;
//  * surrogate_optimize: minimizes the small-residual infidelity
//    x^T M x subject to x^T K x = pi/4 via the generalized eigenproblem M v = lambda K v;
//  * refine: Nelder-Mead polish of the exact fidelity.

#include "iongate/crystal.hpp"
#include "iongate/gate_physics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace iongate {

class OptimizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizeSpec {
  GatePair pair;
  double tau = kTau0;
  double mu = 1.0;
  int segments = 1;
  double nbar = 3.0;
  /// Number of neighbouring ions allowed to move; nullopt = every ion moves.
  std::optional<int> neighbors;
  bool refine = false;
  FidelityConvention convention = FidelityConvention::half_displacement;
};

/// "full" or "n=<k>".
std::string scope_label(const OptimizeSpec& spec);
/// Parses "full" or "n=<k>" into OptimizeSpec::neighbors.
std::optional<int> parse_scope(const std::string& text);

struct RefineOptions {
  double simplex_tolerance = 1e-8;
  int max_evaluations = 2000;
};

struct OptimizeResult {
  /// Amplitudes normalized so that |phi_ij| = pi/4.
  Eigen::VectorXd amps;
  /// Exact fidelity in the optimization model.
  double fidelity = 0;
  double surrogate_infidelity = 0;
  /// Generalized eigenvalue of the chosen surrogate candidate (0 for null-space candidates).
  double eigenvalue = 0;
  int candidates = 0;
  int refine_evaluations = 0;
  double mu = 0;
  double tau = 0;
  int segments = 0;
  std::string scope = "full";
};

/// Builds the gate model for the spec's scope (full or restricted to neighbours).
GateModel build_model(const Crystal& crystal, const OptimizeSpec& spec);

/// M_pq = sum_k beta_k ((g_i^k)^2 + (g_j^k)^2) Re[G_pk conj(G_qk)], so that
/// x^T M x = sum_k beta_k (|alpha_i^k|^2 + |alpha_j^k|^2).
Eigen::MatrixXd surrogate_matrix(const GateModel& model);

/// Small-residual infidelity estimate at the phase-normalized amplitudes.
double surrogate_infidelity(const GateModel& model, const Eigen::VectorXd& amps);

/// Ratios f_p = Omega_p / Omega_1 (f_1 = 1) closing every loop; requires m = 2K + 1.
/// Throws OptimizeError naming the mode when the constraint system is singular.
Eigen::VectorXd exact_null(const GateModel& model);

/// Best surrogate eigen-candidate scored by exact fidelity. Requires m >= 2.
OptimizeResult surrogate_optimize(const GateModel& model);

/// Nelder-Mead on the exact normalized fidelity starting from `start`. The
/// largest-magnitude amplitude of the start stays fixed; the fidelity never decreases.
OptimizeResult refine(const OptimizeResult& start, const GateModel& model,
                      const RefineOptions& options = {});

/// Full pipeline: m = 1 evaluates the single pulse, otherwise surrogate
/// (and refinement when requested).
OptimizeResult optimize(const Crystal& crystal, const OptimizeSpec& spec);
/// Same on a prebuilt model; only segments, scope and refine are read from `spec`.
OptimizeResult optimize(const GateModel& model, const OptimizeSpec& spec);

/// optimize() with only the gate pair and `n_neighbors` nearest ions moving.
OptimizeResult restricted_optimize(const Crystal& crystal, OptimizeSpec spec, int n_neighbors);

/// Amplitudes divided by the first one.
Eigen::VectorXd ratio_normalized(const Eigen::VectorXd& amps);

}  // namespace iongate
