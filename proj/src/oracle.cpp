#include "iongate/oracle.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace iongate {

namespace {

using State = std::vector<cplx>;
namespace odeint = boost::numeric::odeint;

constexpr cplx kI{0.0, 1.0};
constexpr std::array<std::array<int, 2>, 4> kBranches{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

// Integrates psi' = rhs(psi, t) across every segment, restarting the stepper
// at each amplitude jump.
template <class Rhs>
void integrate_segments(const PulseSchedule& schedule, double tolerance, State& psi, Rhs rhs) {
  for (int p = 0; p < schedule.segments(); ++p) {
    const double amp = schedule.amps[p];
    if (amp == 0) continue;
    const double t0 = schedule.boundary(p);
    const double t1 = schedule.boundary(p + 1);
    auto system = [&](const State& x, State& dxdt, double t) { rhs(x, dxdt, t, amp); };
    odeint::integrate_adaptive(
        odeint::make_controlled(tolerance, tolerance, odeint::runge_kutta_dopri5<State>()),
        system, psi, t0, t1, (t1 - t0) / 64);
  }
}

void check_norms(const Eigen::MatrixXcd& before, const Eigen::MatrixXcd& after) {
  for (Eigen::Index c = 0; c < before.cols(); ++c) {
    const double drift = std::abs(after.col(c).norm() - before.col(c).norm());
    if (drift > 1e-6) {
      std::ostringstream msg;
      msg << "cutoff or tolerance insufficient: norm drift " << drift << " on column " << c;
      throw OracleError(msg.str());
    }
  }
}

double mode_coupling(const ModeSet& modes, GatePair rows, int k, int s_i, int s_j) {
  return s_i * modes.couplings(rows.i, k) + s_j * modes.couplings(rows.j, k);
}

Eigen::VectorXcd fock_state(int level, int cutoff) {
  if (level < 0 || level >= cutoff) throw OracleError("initial Fock level outside the cutoff");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(cutoff);
  v[level] = 1.0;
  return v;
}

// phi_ij from the vacuum amplitudes <0|U_s|0> = e^{-|beta_s|^2 / 2 + i Phi_s}:
// 2 phi_ij = sum_k (Phi_{++} - Phi_{+-}). The drive is scaled down until every
// vacuum amplitude stays large and every per-mode phase difference small, and
// the quadratic scaling of the phase undoes the reduction.
double vacuum_phase(const OracleConfig& config) {
  const auto vac = fock_state(0, std::max(config.fock_cutoff, 2));
  PulseSchedule scaled = config.schedule;
  double lambda = 1.0;
  for (int attempt = 0; attempt < 40; ++attempt, lambda *= 0.5) {
    scaled.amps = lambda * config.schedule.amps;
    double sum = 0;
    bool resolved = true;
    for (int k = 0; k < config.modes.size() && resolved; ++k) {
      const double w = config.modes.frequencies[k];
      const cplx same = evolve_mode(scaled, w, mode_coupling(config.modes, config.rows, k, 1, 1),
                                    vac, config.tolerance)(0, 0);
      const cplx opposite =
          evolve_mode(scaled, w, mode_coupling(config.modes, config.rows, k, 1, -1), vac,
                      config.tolerance)(0, 0);
      const double diff = std::arg(same * std::conj(opposite));
      resolved = std::abs(same) > 0.8 && std::abs(opposite) > 0.8 && std::abs(diff) < 0.5;
      sum += diff;
    }
    if (resolved) return 0.5 * sum / (lambda * lambda);
  }
  throw OracleError("could not resolve the branch phase");
}

}  // namespace

Eigen::MatrixXcd evolve_mode(const PulseSchedule& schedule, double omega, double coupling,
                             const Eigen::MatrixXcd& initial, double tolerance) {
  validate(schedule);
  const auto dim = static_cast<std::size_t>(initial.rows());
  const auto cols = static_cast<std::size_t>(initial.cols());
  if (dim < 2) throw OracleError("Fock cutoff must be >= 2");

  std::vector<double> root(dim + 1);
  for (std::size_t n = 0; n <= dim; ++n) root[n] = std::sqrt(static_cast<double>(n));

  State psi(initial.data(), initial.data() + initial.size());
  const double mu = schedule.mu;
  integrate_segments(schedule, tolerance, psi,
                     [&](const State& x, State& dxdt, double t, double amp) {
    const cplx up = kI * (coupling * amp * std::sin(mu * t)) * std::exp(kI * (omega * t));
    const cplx down = -std::conj(up);  // i f e^{-i w t}
    dxdt.resize(x.size());
    for (std::size_t c = 0; c < cols; ++c) {
      const cplx* v = x.data() + c * dim;
      cplx* d = dxdt.data() + c * dim;
      for (std::size_t n = 0; n < dim; ++n) {
        cplx acc = 0.0;
        if (n > 0) acc += up * root[n] * v[n - 1];
        if (n + 1 < dim) acc += down * root[n + 1] * v[n + 1];
        d[n] = acc;
      }
    }
  });

  Eigen::MatrixXcd result = Eigen::Map<const Eigen::MatrixXcd>(
      psi.data(), initial.rows(), initial.cols());
  check_norms(initial, result);
  return result;
}

Eigen::VectorXcd evolve_branch(const PulseSchedule& schedule, const ModeSet& modes,
                               GatePair rows, int s_i, int s_j, const std::vector<int>& fock,
                               int cutoff, double tolerance) {
  if (static_cast<int>(fock.size()) != modes.size()) {
    throw OracleError("one initial occupation per mode required");
  }
  Eigen::VectorXcd state = Eigen::VectorXcd::Ones(1);
  for (int k = 0; k < modes.size(); ++k) {
    const Eigen::VectorXcd mode = evolve_mode(schedule, modes.frequencies[k],
                                              mode_coupling(modes, rows, k, s_i, s_j),
                                              fock_state(fock[k], cutoff), tolerance);
    Eigen::VectorXcd next(state.size() * cutoff);
    for (Eigen::Index a = 0; a < state.size(); ++a) next.segment(a * cutoff, cutoff) = state[a] * mode;
    state = std::move(next);
  }
  return state;
}

Eigen::VectorXcd evolve_branch_joint(const PulseSchedule& schedule, const ModeSet& modes,
                                     GatePair rows, int s_i, int s_j,
                                     const std::vector<int>& fock, int cutoff,
                                     double tolerance) {
  validate(schedule);
  const int n_modes = modes.size();
  if (static_cast<int>(fock.size()) != n_modes) {
    throw OracleError("one initial occupation per mode required");
  }
  if (std::pow(static_cast<double>(cutoff), n_modes) > 2e5) {
    throw OracleError("joint Fock space too large");
  }
  std::vector<std::size_t> stride(static_cast<std::size_t>(n_modes));
  std::size_t dim = 1;
  for (int k = n_modes - 1; k >= 0; --k) {
    stride[k] = dim;
    dim *= static_cast<std::size_t>(cutoff);
  }
  std::vector<double> coupling(static_cast<std::size_t>(n_modes));
  for (int k = 0; k < n_modes; ++k) coupling[k] = mode_coupling(modes, rows, k, s_i, s_j);

  State psi(dim, 0.0);
  std::size_t start = 0;
  for (int k = 0; k < n_modes; ++k) {
    if (fock[k] < 0 || fock[k] >= cutoff) throw OracleError("initial Fock level outside the cutoff");
    start += static_cast<std::size_t>(fock[k]) * stride[k];
  }
  psi[start] = 1.0;

  const double mu = schedule.mu;
  std::vector<cplx> up(static_cast<std::size_t>(n_modes));
  integrate_segments(schedule, tolerance, psi,
                     [&](const State& x, State& dxdt, double t, double amp) {
    for (int k = 0; k < n_modes; ++k) {
      up[k] = kI * (coupling[k] * amp * std::sin(mu * t)) *
              std::exp(kI * (modes.frequencies[k] * t));
    }
    dxdt.assign(x.size(), 0.0);
    for (std::size_t idx = 0; idx < dim; ++idx) {
      cplx acc = 0.0;
      for (int k = 0; k < n_modes; ++k) {
        const auto n = static_cast<int>((idx / stride[k]) % static_cast<std::size_t>(cutoff));
        if (n > 0) acc += up[k] * std::sqrt(static_cast<double>(n)) * x[idx - stride[k]];
        if (n + 1 < cutoff) {
          acc -= std::conj(up[k]) * std::sqrt(static_cast<double>(n + 1)) * x[idx + stride[k]];
        }
      }
      dxdt[idx] = acc;
    }
  });
  Eigen::VectorXcd result = Eigen::Map<const Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(dim));
  if (std::abs(result.norm() - 1.0) > 1e-6) {
    throw OracleError("cutoff or tolerance insufficient: joint norm drift");
  }
  return result;
}

std::vector<double> thermal_weights(double nbar_com, double omega, double epsilon) {
  if (!(nbar_com >= 0)) throw OracleError("nbar must be non-negative");
  if (!(epsilon > 0 && epsilon < 0.1)) throw OracleError("thermal epsilon must lie in (0, 0.1)");
  if (nbar_com == 0) return {1.0};
  const double q = std::exp(-omega * std::log1p(1.0 / nbar_com));
  std::vector<double> weights;
  double tail = 1.0;  // q^L after keeping L levels
  while (tail >= epsilon) {
    weights.push_back((1 - q) * tail);
    tail *= q;
  }
  const double kept = 1.0 - tail;
  for (double& w : weights) w /= kept;
  return weights;
}

OracleReport thermal_fidelity(const OracleConfig& config) {
  const PulseSchedule& schedule = config.schedule;
  const ModeSet& modes = config.modes;
  validate(schedule);
  const int n_modes = modes.size();

  std::vector<std::vector<double>> weights;
  int deepest = 0;
  for (int k = 0; k < n_modes; ++k) {
    weights.push_back(thermal_weights(config.nbar, modes.frequencies[k], config.thermal_epsilon));
    deepest = std::max(deepest, static_cast<int>(weights.back().size()));
  }

  OracleReport report;
  report.phase_numeric = vacuum_phase(config);
  report.phase_analytic = conditional_phase(schedule, modes, config.rows.i, config.rows.j).total;
  const double target = report.phase_numeric < 0 ? -kPi / 4 : kPi / 4;

  int cutoff = std::max(config.fock_cutoff, deepest + 20);
  double previous = 0;
  while (true) {
    // overlap[k](a, b) = sum_n p_n <psi_{b,n} | psi_{a,n}> for branches a, b.
    std::vector<Eigen::Matrix4cd> overlap(static_cast<std::size_t>(n_modes));
    for (int k = 0; k < n_modes; ++k) {
      const auto levels = static_cast<Eigen::Index>(weights[k].size());
      const Eigen::MatrixXcd start = Eigen::MatrixXcd::Identity(cutoff, levels);
      std::array<Eigen::MatrixXcd, 4> evolved;
      for (int b = 0; b < 2; ++b) {
        evolved[b] = evolve_mode(schedule, modes.frequencies[k],
                                 mode_coupling(modes, config.rows, k, kBranches[b][0],
                                               kBranches[b][1]),
                                 start, config.tolerance);
        // Flipping both spins negates the drive: U(-c) = P U(c) P, P = (-1)^{a^dag a}.
        evolved[3 - b] = evolved[b];
        for (Eigen::Index r = 0; r < cutoff; ++r) {
          for (Eigen::Index n = 0; n < levels; ++n) {
            if ((r + n) % 2 != 0) evolved[3 - b](r, n) = -evolved[3 - b](r, n);
          }
        }
      }
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          cplx sum = 0.0;
          for (Eigen::Index n = 0; n < levels; ++n) {
            sum += weights[k][n] * evolved[b].col(n).dot(evolved[a].col(n));
          }
          overlap[k](a, b) = sum;
        }
      }
    }
    cplx total = 0.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const double parity = kBranches[a][0] * kBranches[a][1] - kBranches[b][0] * kBranches[b][1];
        cplx term = std::exp(-kI * (target * parity));
        for (int k = 0; k < n_modes; ++k) term *= overlap[k](a, b);
        total += term;
      }
    }
    const double value = total.real() / 16.0;
    report.trace.push_back({cutoff, value});
    if (report.trace.size() >= 2 && std::abs(value - previous) < config.convergence) {
      report.converged = true;
      break;
    }
    previous = value;
    if (cutoff >= config.max_cutoff) break;
    cutoff = std::min(config.max_cutoff, cutoff + std::max(10, cutoff / 2));
  }
  if (!report.converged) {
    std::ostringstream msg;
    msg << "oracle fidelity did not converge in the Fock cutoff (last " << cutoff << ")";
    throw OracleError(msg.str());
  }
  report.fidelity_numeric = report.trace.back().fidelity;

  const Eigen::VectorXcd a_i = alpha(schedule, modes, config.rows.i);
  const Eigen::VectorXcd a_j = alpha(schedule, modes, config.rows.j);
  const Eigen::VectorXd betas = thermal_betas(config.nbar, modes);
  report.fidelity_analytic = fidelity(a_i, a_j, betas, FidelityConvention::full_displacement);
  report.fidelity_half = fidelity(a_i, a_j, betas, FidelityConvention::half_displacement);
  report.abs_difference = std::abs(report.fidelity_numeric - report.fidelity_analytic);
  return report;
}

}  // namespace iongate
