#include "iongate/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iongate;

namespace {

const Crystal& twenty() {
  static const Crystal c = make_crystal(20);
  return c;
}

OptimizeSpec centre_spec(double tau_over_tau0, double mu, int m) {
  OptimizeSpec spec;
  spec.pair = {9, 10};
  spec.tau = tau_over_tau0 * kTau0;
  spec.mu = mu;
  spec.segments = m;
  spec.nbar = 3.0;
  return spec;
}

}  // namespace

TEST_CASE("surrogate matrix is symmetric PSD and reproduces the residual sum") {
  const GateModel model = build_model(twenty(), centre_spec(0.3, 4.2, 6));
  const Eigen::MatrixXd w = surrogate_matrix(model);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12 * eig.eigenvalues().maxCoeff());

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(6);
    for (auto& v : x) v = normal(rng);
    const GateOutcome out = model.evaluate(x);
    double direct = 0;
    for (int k = 0; k < 20; ++k) {
      direct += model.betas()[k] * (std::norm(out.alpha_i[k]) + std::norm(out.alpha_j[k]));
    }
    CHECK(x.dot(w * x) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("surrogate infidelity tracks the exact one for small residuals") {
  const GateModel model = build_model(twenty(), centre_spec(2.0, 0.5, 1));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const double exact = 1.0 - model.normalized_fidelity(one);
  const double estimate = surrogate_infidelity(model, one);
  CHECK(exact < 1e-3);
  CHECK(std::abs(estimate - exact) < 0.1 * exact);
}

TEST_CASE("exact null closes every loop") {
  SUBCASE("two ions, five segments") {
    const Crystal c = make_crystal(2);
    OptimizeSpec spec;
    spec.pair = {0, 1};
    spec.tau = 0.9 * kTau0;
    spec.mu = 1.6;
    spec.segments = 5;
    const GateModel model = build_model(c, spec);
    const Eigen::VectorXd f = exact_null(model);
    CHECK(f[0] == 1.0);
    const Eigen::VectorXcd residual = model.moments().transpose() * f.cast<cplx>();
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("twenty ions, 41 segments") {
    const GateModel model = build_model(twenty(), centre_spec(2.0, 1.3, 41));
    const GateOutcome out = model.evaluate_normalized(exact_null(model));
    CHECK(1.0 - out.fidelity < 1e-9);
  }
  SUBCASE("wrong segment count") {
    const GateModel model = build_model(twenty(), centre_spec(2.0, 1.3, 5));
    CHECK_THROWS_WITH_AS(exact_null(model), doctest::Contains("2K+1"), OptimizeError);
  }
}

TEST_CASE("surrogate finds the closed-loop solution when one exists") {
  const Crystal c = make_crystal(2);
  OptimizeSpec spec;
  spec.pair = {0, 1};
  spec.tau = 0.9 * kTau0;
  spec.mu = 1.6;
  spec.segments = 5;
  const GateModel model = build_model(c, spec);
  const OptimizeResult r = surrogate_optimize(model);
  CHECK(1.0 - r.fidelity < 1e-9);
  CHECK(r.candidates >= 1);
  CHECK(std::abs(std::abs(model.evaluate(r.amps).phi_total) - kPi / 4) < 1e-12);
}

TEST_CASE("five segments at tau = 0.1 tau0, mu = 10") {
  const OptimizeResult r = optimize(twenty(), centre_spec(0.1, 10.0, 5));
  CHECK(std::abs(r.fidelity - 0.9976) < 0.002);
  CHECK(r.segments == 5);
  CHECK(r.scope == "full");
}

TEST_CASE("refinement never lowers the fidelity") {
  for (const double mu : {5.4, 7.0, 10.7}) {
    CAPTURE(mu);
    OptimizeSpec spec = centre_spec(0.1, mu, 5);
    const GateModel model = build_model(twenty(), spec);
    const OptimizeResult start = surrogate_optimize(model);
    const OptimizeResult polished = refine(start, model);
    CHECK(polished.fidelity >= start.fidelity);
    CHECK(polished.refine_evaluations > 0);
  }
  const Crystal c = make_crystal(2);
  OptimizeSpec spec;
  spec.pair = {0, 1};
  spec.tau = 0.9 * kTau0;
  spec.mu = 1.6;
  spec.segments = 5;
  const GateModel model = build_model(c, spec);
  const OptimizeResult start = surrogate_optimize(model);
  const OptimizeResult polished = refine(start, model);
  CHECK(polished.fidelity == start.fidelity);
  CHECK((polished.amps - start.amps).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a scope covering every ion equals the full crystal") {
  const OptimizeSpec spec = centre_spec(0.5, 3.1, 5);
  const OptimizeResult full = optimize(twenty(), spec);
  const OptimizeResult all = restricted_optimize(twenty(), spec, 18);
  CHECK(all.scope == "n=18");
  CHECK(all.fidelity == doctest::Approx(full.fidelity).epsilon(1e-9));
  CHECK((ratio_normalized(all.amps) - ratio_normalized(full.amps)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("the candidate set does not depend on an overall thermal scale") {
  // Scaling every beta scales M; the generalized eigenvectors stay put.
  const GateModel base = build_model(twenty(), centre_spec(0.1, 10.0, 5));
  const PulseSchedule geometry = PulseSchedule::uniform(base.tau(), base.mu(), 5);
  const GateModel scaled(geometry, base.modes(), {9, 10}, 1.5 * base.betas());
  const OptimizeResult a = surrogate_optimize(base);
  const OptimizeResult b = surrogate_optimize(scaled);
  CHECK((ratio_normalized(a.amps) - ratio_normalized(b.amps)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(b.fidelity < a.fidelity);
  // Half-displacement weights at 4 beta are the full-displacement weights at beta.
  const GateModel full(geometry, base.modes(), {9, 10}, base.betas(),
                       FidelityConvention::full_displacement);
  const GateModel quadrupled(geometry, base.modes(), {9, 10}, 4.0 * base.betas());
  const OptimizeResult c = surrogate_optimize(full);
  const OptimizeResult d = surrogate_optimize(quadrupled);
  CHECK(c.fidelity == doctest::Approx(d.fidelity).epsilon(1e-12));
  CHECK((c.amps - d.amps).cwiseAbs().maxCoeff() < 1e-8 * c.amps.cwiseAbs().maxCoeff());
}

TEST_CASE("optimization is deterministic") {
  OptimizeSpec spec = centre_spec(0.1, 7.0, 5);
  spec.refine = true;
  const OptimizeResult a = optimize(twenty(), spec);
  const OptimizeResult b = optimize(twenty(), spec);
  CHECK((a.amps - b.amps).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.fidelity == b.fidelity);
}

TEST_CASE("scope parsing") {
  CHECK_FALSE(parse_scope("full").has_value());
  CHECK(parse_scope("n=0") == 0);
  CHECK(parse_scope("n=12") == 12);
  CHECK_THROWS_AS(parse_scope("n="), OptimizeError);
  CHECK_THROWS_AS(parse_scope("n=-1"), OptimizeError);
  CHECK_THROWS_AS(parse_scope("n=3x"), OptimizeError);
  CHECK_THROWS_AS(parse_scope("all"), OptimizeError);
  CHECK_THROWS_AS(ratio_normalized(Eigen::Vector2d(0.0, 1.0)), OptimizeError);
}

TEST_CASE("bad specs are rejected") {
  OptimizeSpec spec = centre_spec(1.0, 1.0, 0);
  CHECK_THROWS_AS(build_model(twenty(), spec), OptimizeError);
  spec.segments = 3;
  spec.mu = 0;
  CHECK_THROWS_AS(build_model(twenty(), spec), OptimizeError);
  spec.mu = 1;
  spec.pair = {3, 20};
  CHECK_THROWS(build_model(twenty(), spec));
  CHECK_THROWS_AS(surrogate_optimize(build_model(twenty(), centre_spec(1.0, 1.0, 1))),
                  OptimizeError);
}
