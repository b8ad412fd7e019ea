#include "iongate/optimizer.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace iongate {

namespace {

constexpr double kTiny = 1e-300;

// Flip so that the first component above 1e-8 of the peak is positive.
Eigen::VectorXd canonical_sign(Eigen::VectorXd x) {
  const double peak = x.cwiseAbs().maxCoeff();
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    if (std::abs(x[p]) > 1e-8 * peak) {
      if (x[p] < 0) x = -x;
      break;
    }
  }
  return x;
}

OptimizeResult make_result(const GateModel& model, const Eigen::VectorXd& direction) {
  const GateOutcome out = model.evaluate_normalized(canonical_sign(direction));
  OptimizeResult result;
  result.amps = out.amps;
  result.fidelity = out.fidelity;
  result.surrogate_infidelity = surrogate_infidelity(model, out.amps);
  result.mu = model.mu();
  result.tau = model.tau();
  result.segments = model.segments();
  return result;
}

struct Candidate {
  Eigen::VectorXd x;
  double eigenvalue;
};

struct SimplexState {
  const GateModel* model;
  Eigen::VectorXd base;
  Eigen::Index fixed;
  int evaluations = 0;
};

Eigen::VectorXd expand(const SimplexState& state, const gsl_vector* free) {
  Eigen::VectorXd x = state.base;
  std::size_t k = 0;
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    if (p == state.fixed) continue;
    x[p] = gsl_vector_get(free, k++);
  }
  return x;
}

double simplex_objective(const gsl_vector* free, void* params) {
  auto* state = static_cast<SimplexState*>(params);
  ++state->evaluations;
  return 1.0 - state->model->normalized_fidelity(expand(*state, free));
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

std::string scope_label(const OptimizeSpec& spec) {
  return spec.neighbors ? "n=" + std::to_string(*spec.neighbors) : std::string("full");
}

std::optional<int> parse_scope(const std::string& text) {
  if (text == "full") return std::nullopt;
  if (text.rfind("n=", 0) == 0) {
    std::size_t used = 0;
    const std::string digits = text.substr(2);
    int n = -1;
    try {
      n = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == digits.size() && !digits.empty() && n >= 0) return n;
  }
  throw OptimizeError("scope must be 'full' or 'n=<k>'; got '" + text + "'");
}

GateModel build_model(const Crystal& crystal, const OptimizeSpec& spec) {
  validate(spec.pair, crystal.size());
  if (spec.segments < 1) throw OptimizeError("segment count must be >= 1");
  if (!(spec.mu > 0)) throw OptimizeError("detuning must be > 0");
  const PulseSchedule geometry = PulseSchedule::uniform(spec.tau, spec.mu, spec.segments);
  ModeSet modes = crystal.modes;
  if (spec.neighbors) {
    const auto moving = neighbor_set(crystal, spec.pair.i, spec.pair.j, *spec.neighbors);
    const int gate_ions[] = {spec.pair.i, spec.pair.j};
    modes = restricted_modes(crystal, moving, gate_ions);
  }
  Eigen::VectorXd betas = thermal_betas(spec.nbar, modes);
  return GateModel(geometry, std::move(modes), spec.pair, std::move(betas), spec.convention);
}

Eigen::MatrixXd surrogate_matrix(const GateModel& model) {
  const ModeSet& modes = model.modes();
  const Eigen::MatrixXcd& g = model.moments();
  const int m = model.segments();
  Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < modes.size(); ++k) {
    const double gi = modes.couplings(model.row_i(), k);
    const double gj = modes.couplings(model.row_j(), k);
    const double w = model.betas()[k] * (gi * gi + gj * gj);
    const Eigen::VectorXcd col = g.col(k);
    weighted += w * (col * col.adjoint()).real();
  }
  return 0.5 * (weighted + weighted.transpose());
}

double surrogate_infidelity(const GateModel& model, const Eigen::VectorXd& amps) {
  const double phase = amps.dot(model.kernel() * amps);
  if (phase == 0) return std::numeric_limits<double>::infinity();
  const double scale2 = (kPi / 4) / std::abs(phase);
  return model.small_residual_weight() * scale2 * amps.dot(surrogate_matrix(model) * amps);
}

Eigen::VectorXd exact_null(const GateModel& model) {
  const int modes = model.modes().size();
  const int m = model.segments();
  if (m != 2 * modes + 1) {
    throw OptimizeError("exact_null needs m = 2K+1 = " + std::to_string(2 * modes + 1) +
                        " segments, got " + std::to_string(m));
  }
  const Eigen::MatrixXcd& g = model.moments();
  Eigen::MatrixXd system(2 * modes, m - 1);
  Eigen::VectorXd rhs(2 * modes);
  for (int k = 0; k < modes; ++k) {
    for (int p = 1; p < m; ++p) {
      system(2 * k, p - 1) = g(p, k).real();
      system(2 * k + 1, p - 1) = g(p, k).imag();
    }
    rhs[2 * k] = -g(0, k).real();
    rhs[2 * k + 1] = -g(0, k).imag();
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  lu.setThreshold(1e-13);
  if (lu.rank() < 2 * modes) {
    // Name the first mode whose constraints are dependent on the others.
    int offending = 0;
    for (int k = 0; k < modes; ++k) {
      Eigen::MatrixXd reduced(2 * modes - 2, m - 1);
      int row = 0;
      for (int r = 0; r < 2 * modes; ++r)
        if (r / 2 != k) reduced.row(row++) = system.row(r);
      Eigen::FullPivLU<Eigen::MatrixXd> sub(reduced);
      sub.setThreshold(1e-13);
      if (sub.rank() == 2 * modes - 2) {
        offending = k;
        break;
      }
    }
    std::ostringstream msg;
    msg << "exact_null: singular loop-closure system at mu=" << model.mu() << ", mode "
        << offending + 1 << " (omega=" << model.modes().frequencies[offending] << ")";
    throw OptimizeError(msg.str());
  }
  Eigen::VectorXd ratios(m);
  ratios[0] = 1.0;
  ratios.tail(m - 1) = lu.solve(rhs);
  return ratios;
}

OptimizeResult surrogate_optimize(const GateModel& model) {
  const int m = model.segments();
  if (m < 2) throw OptimizeError("surrogate_optimize needs at least 2 segments");
  const Eigen::MatrixXd weight = surrogate_matrix(model);
  const Eigen::MatrixXd& kernel = model.kernel();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> weight_eig(weight);
  const Eigen::VectorXd d = weight_eig.eigenvalues();
  const Eigen::MatrixXd& v = weight_eig.eigenvectors();
  const double d_max = std::max(d.maxCoeff(), kTiny);
  const double null_tol = 1e-14 * d_max;

  std::vector<int> range_idx;
  std::vector<int> null_idx;
  for (int k = 0; k < m; ++k) (d[k] > null_tol ? range_idx : null_idx).push_back(k);

  std::vector<Candidate> candidates;
  if (!null_idx.empty()) {
    Eigen::MatrixXd basis(m, static_cast<Eigen::Index>(null_idx.size()));
    for (std::size_t c = 0; c < null_idx.size(); ++c) basis.col(c) = v.col(null_idx[c]);
    const Eigen::MatrixXd projected = basis.transpose() * kernel * basis;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (projected + projected.transpose()));
    for (Eigen::Index c = 0; c < eig.eigenvalues().size(); ++c) {
      candidates.push_back({basis * eig.eigenvectors().col(c), 0.0});
    }
  }
  if (!range_idx.empty()) {
    // Whitening W = V_r D_r^{-1/2} turns M v = lambda K v into a standard problem.
    Eigen::MatrixXd whiten(m, static_cast<Eigen::Index>(range_idx.size()));
    for (std::size_t c = 0; c < range_idx.size(); ++c) {
      whiten.col(c) = v.col(range_idx[c]) / std::sqrt(d[range_idx[c]]);
    }
    const Eigen::MatrixXd projected = whiten.transpose() * kernel * whiten;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (projected + projected.transpose()));
    const double nu_max = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), kTiny);
    for (Eigen::Index c = 0; c < eig.eigenvalues().size(); ++c) {
      const double nu = eig.eigenvalues()[c];
      if (std::abs(nu) < 1e-14 * nu_max) continue;
      candidates.push_back({whiten * eig.eigenvectors().col(c), 1.0 / nu});
    }
  }

  const Candidate* best = nullptr;
  double best_fidelity = -1;
  double best_amp = std::numeric_limits<double>::infinity();
  int scored = 0;
  for (const Candidate& c : candidates) {
    const double phase = c.x.dot(kernel * c.x);
    if (phase == 0 || !std::isfinite(phase)) continue;
    ++scored;
    const double f = model.normalized_fidelity(c.x);
    const double amp = std::abs(c.x[0]) * std::sqrt((kPi / 4) / std::abs(phase));
    const bool better = f > best_fidelity + 1e-13 ||
                        (std::abs(f - best_fidelity) <= 1e-13 && amp < best_amp);
    if (better) {
      best = &c;
      best_fidelity = f;
      best_amp = amp;
    }
  }
  if (best == nullptr) throw OptimizeError("surrogate_optimize: every candidate is phase-null");

  OptimizeResult result = make_result(model, best->x);
  result.eigenvalue = best->eigenvalue;
  result.candidates = scored;
  return result;
}

OptimizeResult refine(const OptimizeResult& start, const GateModel& model,
                      const RefineOptions& options) {
  const Eigen::Index m = start.amps.size();
  if (m != model.segments()) throw OptimizeError("refine: amplitude count mismatch");
  if (m < 2) return start;
  [[maybe_unused]] static const gsl_error_handler_t* previous = gsl_set_error_handler_off();

  SimplexState state{&model, start.amps, 0};
  start.amps.cwiseAbs().maxCoeff(&state.fixed);
  const double peak = std::abs(start.amps[state.fixed]);

  const auto free_count = static_cast<std::size_t>(m - 1);
  std::unique_ptr<gsl_vector, VectorDeleter> x0(gsl_vector_alloc(free_count));
  std::unique_ptr<gsl_vector, VectorDeleter> steps(gsl_vector_alloc(free_count));
  std::size_t k = 0;
  for (Eigen::Index p = 0; p < m; ++p) {
    if (p == state.fixed) continue;
    gsl_vector_set(x0.get(), k, start.amps[p]);
    gsl_vector_set(steps.get(), k, 0.05 * peak);
    ++k;
  }

  gsl_multimin_function objective{&simplex_objective, free_count, &state};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, free_count));
  gsl_multimin_fminimizer_set(minimizer.get(), &objective, x0.get(), steps.get());

  // Simplex size is measured relative to the fixed amplitude.
  while (state.evaluations < options.max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(minimizer.get());
    if (gsl_multimin_test_size(size, options.simplex_tolerance * peak) == GSL_SUCCESS) break;
  }

  const Eigen::VectorXd best = expand(state, gsl_multimin_fminimizer_x(minimizer.get()));
  OptimizeResult refined = start;
  refined.refine_evaluations = state.evaluations;
  if (model.normalized_fidelity(best) > start.fidelity) {
    OptimizeResult improved = make_result(model, best);
    improved.eigenvalue = start.eigenvalue;
    improved.candidates = start.candidates;
    improved.refine_evaluations = state.evaluations;
    improved.scope = start.scope;
    if (improved.fidelity > start.fidelity) refined = improved;
  }
  return refined;
}

OptimizeResult optimize(const Crystal& crystal, const OptimizeSpec& spec) {
  return optimize(build_model(crystal, spec), spec);
}

OptimizeResult optimize(const GateModel& model, const OptimizeSpec& spec) {
  OptimizeResult result = spec.segments == 1 ? make_result(model, Eigen::VectorXd::Ones(1))
                                             : surrogate_optimize(model);
  if (spec.segments == 1) result.candidates = 1;
  result.scope = scope_label(spec);
  if (spec.refine) result = refine(result, model);
  return result;
}

OptimizeResult restricted_optimize(const Crystal& crystal, OptimizeSpec spec, int n_neighbors) {
  spec.neighbors = n_neighbors;
  return optimize(crystal, spec);
}

Eigen::VectorXd ratio_normalized(const Eigen::VectorXd& amps) {
  if (amps.size() == 0 || amps[0] == 0) {
    throw OptimizeError("ratio_normalized: first amplitude is zero");
  }
  return amps / amps[0];
}

}  // namespace iongate
