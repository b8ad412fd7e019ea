#include "iongate/gate_physics.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace iongate {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kTargetPhase = kPi / 4;

double exponent_weight(FidelityConvention convention) {
  return convention == FidelityConvention::full_displacement ? 2.0 : 0.5;
}

double overlap_decay(const Eigen::VectorXcd& d, const Eigen::VectorXd& betas, double weight) {
  return std::exp(-weight * (d.cwiseAbs2().array() * betas.array()).sum());
}

int require_row(const ModeSet& modes, int ion) {
  const int row = modes.row_of(ion);
  if (row < 0) {
    throw GateError("gate ion " + std::to_string(ion + 1) + " is not part of the mode set");
  }
  return row;
}

}  // namespace

GatePair parse_pair(const std::string& text, int n_ions) {
  std::istringstream in(text);
  int i = 0;
  int j = 0;
  char comma = 0;
  if (!(in >> i) || !(in >> comma) || comma != ',' || !(in >> j) || !(in >> std::ws).eof()) {
    throw GateError("pair must look like I,J; got '" + text + "'");
  }
  GatePair pair{i - 1, j - 1};
  validate(pair, n_ions);
  return pair;
}

void validate(const GatePair& pair, int n_ions) {
  if (pair.i == pair.j) throw GateError("gate pair needs two distinct ions");
  if (pair.i < 0 || pair.j < 0 || pair.i >= n_ions || pair.j >= n_ions) {
    throw GateError("gate ion out of range 1.." + std::to_string(n_ions));
  }
}

Eigen::VectorXcd alpha(const PulseSchedule& schedule, const ModeSet& modes, int row) {
  validate(schedule);
  const Eigen::MatrixXcd moments = all_moments(schedule, modes);
  const Eigen::VectorXcd drive = moments.transpose() * schedule.amps.cast<cplx>();
  Eigen::VectorXcd result(modes.size());
  for (int k = 0; k < modes.size(); ++k) result[k] = kI * modes.couplings(row, k) * drive[k];
  return result;
}

PhaseBreakdown conditional_phase(const PulseSchedule& schedule, const ModeSet& modes,
                                 int row_i, int row_j) {
  validate(schedule);
  const auto kernels = pair_phase_kernels(schedule, modes, row_i, row_j);
  PhaseBreakdown phase;
  phase.per_mode.resize(modes.size());
  for (int k = 0; k < modes.size(); ++k) {
    phase.per_mode[k] = schedule.amps.dot(kernels[k] * schedule.amps);
  }
  phase.total = phase.per_mode.sum();
  return phase;
}

const char* to_string(FidelityConvention convention) {
  return convention == FidelityConvention::full_displacement ? "full_displacement"
                                                             : "half_displacement";
}

double fidelity(const Eigen::VectorXcd& alpha_i, const Eigen::VectorXcd& alpha_j,
                const Eigen::VectorXd& betas, FidelityConvention convention) {
  if (alpha_i.size() != betas.size() || alpha_j.size() != betas.size()) {
    throw GateError("fidelity: one beta per mode required");
  }
  const double w = exponent_weight(convention);
  const double gamma_i = overlap_decay(alpha_i, betas, w);
  const double gamma_j = overlap_decay(alpha_j, betas, w);
  const double gamma_plus = overlap_decay(alpha_i + alpha_j, betas, w);
  const double gamma_minus = overlap_decay(alpha_i - alpha_j, betas, w);
  return (2.0 + 2.0 * gamma_i + 2.0 * gamma_j + gamma_plus + gamma_minus) / 8.0;
}

GateOutcome normalize_phase(const GateOutcome& outcome) {
  if (outcome.phi_total == 0 || !std::isfinite(outcome.phi_total)) {
    throw GateError("phase-null schedule: conditional phase is zero");
  }
  const double s = std::sqrt(kTargetPhase / std::abs(outcome.phi_total));
  GateOutcome scaled = outcome;
  scaled.alpha_i *= s;
  scaled.alpha_j *= s;
  scaled.phi_total *= s * s;
  scaled.phi_per_mode *= s * s;
  scaled.amp_scale *= s;
  scaled.amps *= s;
  scaled.required_amp = scaled.amps.size() > 0 ? scaled.amps[0] : 0.0;
  return scaled;
}

double spectator_fraction(const GateOutcome& outcome, int com_mode) {
  if (outcome.phi_total == 0) throw GateError("phase-null schedule: conditional phase is zero");
  if (com_mode < 0 || com_mode >= outcome.phi_per_mode.size()) {
    throw GateError("spectator_fraction: COM mode index out of range");
  }
  return (outcome.phi_total - outcome.phi_per_mode[com_mode]) / outcome.phi_total;
}

GateModel::GateModel(const PulseSchedule& geometry, ModeSet modes, GatePair pair,
                     Eigen::VectorXd betas, FidelityConvention convention)
    : modes_(std::move(modes)),
      row_i_(require_row(modes_, pair.i)),
      row_j_(require_row(modes_, pair.j)),
      tau_(geometry.tau),
      mu_(geometry.mu),
      betas_(std::move(betas)),
      convention_(convention) {
  validate(geometry);
  if (pair.i == pair.j) throw GateError("gate pair needs two distinct ions");
  if (betas_.size() != modes_.size()) throw GateError("GateModel: one beta per mode required");
  moments_ = all_moments(geometry, modes_);
  kernels_ = pair_phase_kernels(geometry, modes_, row_i_, row_j_);
  total_kernel_ = Eigen::MatrixXd::Zero(segments(), segments());
  for (const auto& k : kernels_) total_kernel_ += k;
  drive_i_ = moments_;
  drive_j_ = moments_;
  for (int k = 0; k < modes_.size(); ++k) {
    drive_i_.col(k) *= kI * modes_.couplings(row_i_, k);
    drive_j_.col(k) *= kI * modes_.couplings(row_j_, k);
  }
}

double GateModel::small_residual_weight() const { return exponent_weight(convention_) / 2.0; }

GateOutcome GateModel::evaluate(const Eigen::VectorXd& amps) const {
  if (amps.size() != segments()) throw GateError("GateModel: amplitude count mismatch");
  GateOutcome out;
  const Eigen::VectorXcd x = amps.cast<cplx>();
  out.alpha_i = drive_i_.transpose() * x;
  out.alpha_j = drive_j_.transpose() * x;
  out.phi_per_mode.resize(modes_.size());
  for (int k = 0; k < modes_.size(); ++k) out.phi_per_mode[k] = amps.dot(kernels_[k] * amps);
  out.phi_total = out.phi_per_mode.sum();
  out.fidelity = fidelity(out.alpha_i, out.alpha_j, betas_, convention_);
  out.amps = amps;
  out.amp_scale = 1;
  out.required_amp = amps.size() > 0 ? amps[0] : 0.0;
  return out;
}

GateOutcome GateModel::evaluate_normalized(const Eigen::VectorXd& amps) const {
  GateOutcome out = normalize_phase(evaluate(amps));
  out.fidelity = fidelity(out.alpha_i, out.alpha_j, betas_, convention_);
  return out;
}

double GateModel::normalized_fidelity(const Eigen::VectorXd& amps) const {
  const double phase = amps.dot(total_kernel_ * amps);
  if (phase == 0 || !std::isfinite(phase)) return 0.0;
  const double s = std::sqrt(kTargetPhase / std::abs(phase));
  const Eigen::VectorXcd x = (s * amps).cast<cplx>();
  return fidelity(drive_i_.transpose() * x, drive_j_.transpose() * x, betas_, convention_);
}

}  // namespace iongate
