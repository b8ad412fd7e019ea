#include "iongate/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace iongate {

int ModeSet::row_of(int ion) const {
  const auto it = std::find(ions.begin(), ions.end(), ion);
  return it == ions.end() ? -1 : static_cast<int>(it - ions.begin());
}

Eigen::VectorXd equilibrium_residual(const Eigen::VectorXd& positions) {
  const Eigen::Index n = positions.size();
  Eigen::VectorXd force = -positions;
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index p = 0; p < n; ++p) {
      if (p == l) continue;
      const double d = positions[l] - positions[p];
      force[l] += (d > 0 ? 1.0 : -1.0) / (d * d);
    }
  }
  return force;
}

Eigen::MatrixXd build_coupling(const Eigen::VectorXd& positions) {
  const Eigen::Index n = positions.size();
  for (Eigen::Index l = 1; l < n; ++l) {
    if (!(positions[l] > positions[l - 1])) {
      throw CrystalError("build_coupling: positions must be strictly ascending (ions " +
                         std::to_string(l) + " and " + std::to_string(l + 1) + ")");
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    double diag = 1.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      if (p == l) continue;
      const double d = std::abs(positions[l] - positions[p]);
      const double c = 2.0 / (d * d * d);
      a(l, p) = -c;
      diag += c;
    }
    a(l, l) = diag;
  }
  return a;
}

Eigen::VectorXd solve_equilibrium(int n_ions, const EquilibriumOptions& options) {
  if (n_ions < 2) throw CrystalError("solve_equilibrium: need at least 2 ions");
  const double n = n_ions;
  Eigen::VectorXd u(n_ions);
  for (int i = 0; i < n_ions; ++i) {
    u[i] = 2.018 * ((i + 1) - (n + 1) / 2) / std::pow(n, 0.559);
  }

  auto ordered = [](const Eigen::VectorXd& x) {
    for (Eigen::Index i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) return false;
    return true;
  };

  Eigen::VectorXd force = equilibrium_residual(u);
  double residual = force.cwiseAbs().maxCoeff();
  for (int iter = 0; iter < options.max_iterations && residual >= options.tolerance; ++iter) {
    // The Jacobian of the force is -A, so the Newton step is A^{-1} f.
    const Eigen::VectorXd step = build_coupling(u).ldlt().solve(force);
    double damping = 1.0;
    Eigen::VectorXd trial;
    double trial_residual = 0;
    for (int halvings = 0; halvings < 60; ++halvings, damping *= 0.5) {
      trial = u + damping * step;
      if (!ordered(trial)) continue;
      trial_residual = equilibrium_residual(trial).cwiseAbs().maxCoeff();
      if (trial_residual < residual || residual < 1e-10) break;
    }
    u = trial;
    // Enforce the reflection symmetry of the potential exactly.
    u = 0.5 * (u - u.reverse()).eval();
    force = equilibrium_residual(u);
    residual = force.cwiseAbs().maxCoeff();
  }
  if (!(residual < options.tolerance)) {
    std::ostringstream msg;
    msg << "solve_equilibrium: no convergence for N=" << n_ions
        << ", max residual force " << residual;
    throw CrystalError(msg.str());
  }
  return u;
}

ModeSet solve_modes(const Eigen::MatrixXd& coupling) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(coupling);
  if (solver.info() != Eigen::Success) throw CrystalError("solve_modes: eigensolver failed");

  ModeSet modes;
  modes.eigenvalues = solver.eigenvalues();
  modes.vectors = solver.eigenvectors();
  const Eigen::Index n = coupling.rows();
  // Fix the global sign: first largest-magnitude component positive.
  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = modes.vectors.col(k);
    const double peak = col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col[i]) >= peak * (1 - 1e-8)) {
        if (col[i] < 0) col = -col;
        break;
      }
    }
  }
  modes.frequencies = modes.eigenvalues.cwiseSqrt();
  modes.couplings.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    modes.couplings.col(k) = modes.vectors.col(k) / std::sqrt(2.0 * modes.frequencies[k]);
  }
  modes.ions.resize(static_cast<std::size_t>(n));
  std::iota(modes.ions.begin(), modes.ions.end(), 0);
  return modes;
}

Crystal make_crystal(int n_ions) {
  Crystal crystal;
  crystal.positions = solve_equilibrium(n_ions);
  crystal.coupling = build_coupling(crystal.positions);
  crystal.modes = solve_modes(crystal.coupling);
  return crystal;
}

double local_frequency(const Crystal& crystal, int ion) {
  if (ion < 0 || ion >= crystal.size()) {
    throw CrystalError("local_frequency: ion index " + std::to_string(ion) + " out of range");
  }
  return std::sqrt(crystal.coupling(ion, ion));
}

Eigen::VectorXd thermal_betas(double nbar_com, const ModeSet& modes) {
  if (!(nbar_com >= 0)) throw CrystalError("thermal_betas: nbar must be non-negative");
  if (nbar_com == 0) return Eigen::VectorXd::Ones(modes.size());
  const double log_ratio = std::log1p(1.0 / nbar_com);
  Eigen::VectorXd betas(modes.size());
  for (int k = 0; k < modes.size(); ++k) {
    betas[k] = 1.0 / std::tanh(0.5 * modes.frequencies[k] * log_ratio);
  }
  return betas;
}

ModeSet restricted_modes(const Crystal& crystal, std::span<const int> moving,
                         std::span<const int> required) {
  if (moving.empty()) throw CrystalError("restricted_modes: empty moving set");
  std::vector<int> ions(moving.begin(), moving.end());
  std::sort(ions.begin(), ions.end());
  if (std::adjacent_find(ions.begin(), ions.end()) != ions.end()) {
    throw CrystalError("restricted_modes: duplicate ion in moving set");
  }
  if (ions.front() < 0 || ions.back() >= crystal.size()) {
    throw CrystalError("restricted_modes: ion index out of range");
  }
  for (const int r : required) {
    if (!std::binary_search(ions.begin(), ions.end(), r)) {
      throw CrystalError("restricted_modes: gate ion " + std::to_string(r + 1) +
                         " is not in the moving set");
    }
  }
  const auto n = static_cast<Eigen::Index>(ions.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = crystal.coupling(ions[a], ions[b]);
  ModeSet modes = solve_modes(sub);
  modes.ions = std::move(ions);
  return modes;
}

std::vector<int> neighbor_set(const Crystal& crystal, int ion_i, int ion_j, int n_neighbors) {
  const int n = crystal.size();
  if (ion_i < 0 || ion_j < 0 || ion_i >= n || ion_j >= n || ion_i == ion_j) {
    throw CrystalError("neighbor_set: invalid gate pair");
  }
  if (n_neighbors < 0 || n_neighbors > n - 2) {
    throw CrystalError("neighbor_set: neighbor count " + std::to_string(n_neighbors) +
                       " outside [0, " + std::to_string(n - 2) + "]");
  }
  std::vector<int> others;
  for (int k = 0; k < n; ++k)
    if (k != ion_i && k != ion_j) others.push_back(k);
  auto distance = [&](int k) { return std::min(std::abs(k - ion_i), std::abs(k - ion_j)); };
  std::stable_sort(others.begin(), others.end(),
                   [&](int a, int b) { return distance(a) < distance(b); });
  std::vector<int> set{ion_i, ion_j};
  set.insert(set.end(), others.begin(), others.begin() + n_neighbors);
  std::sort(set.begin(), set.end());
  return set;
}

}  // namespace iongate
