#include "iongate/pulse_kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace iongate;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr cplx kI{0.0, 1.0};

// int_a^b sin(mu t) e^{i w t} dt, real and imaginary parts separately.
cplx moment_by_quadrature(double mu, double w, double a, double b) {
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::sin(mu * t) * std::cos(w * t); }, a, b, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::sin(mu * t) * std::sin(w * t); }, a, b, 15, 1e-14);
  return {re, im};
}

double force(const PulseSchedule& s, double t) {
  const int p = std::min(s.segments() - 1, static_cast<int>(t / s.tau * s.segments()));
  return s.amps[p] * std::sin(s.mu * t);
}

// Straight from the definition: int_0^tau dt2 int_0^{t2} dt1 F(t2) F(t1) sin(w (t2 - t1)),
// split at the segment boundaries so every integrand is smooth.
double double_integral(const PulseSchedule& s, double w) {
  double total = 0;
  for (int p = 0; p < s.segments(); ++p) {
    const auto outer = [&](double t2) {
      double inner = 0;
      for (int q = 0; q <= p; ++q) {
        const double hi = q == p ? t2 : s.boundary(q + 1);
        if (hi <= s.boundary(q)) continue;
        inner += gauss_kronrod<double, 61>::integrate(
            [&](double t1) { return force(s, t1) * std::sin(w * (t2 - t1)); }, s.boundary(q), hi,
            10, 1e-13);
      }
      return force(s, t2) * inner;
    };
    total += gauss_kronrod<double, 61>::integrate(outer, s.boundary(p), s.boundary(p + 1), 10,
                                                  1e-13);
  }
  return total;
}

}  // namespace

TEST_CASE("empty interval has no moment") {
  CHECK(segment_moment(2.0, 1.0, 0.7, 0.7) == cplx(0.0, 0.0));
}

TEST_CASE("moment matches quadrature") {
  const cplx g = segment_moment(2.0, 1.0, 0.0, kPi);
  const cplx q = moment_by_quadrature(2.0, 1.0, 0.0, kPi);
  CHECK(std::abs(g - q) < 1e-10 * std::abs(q));
  // Closed form antiderivative, away from resonance.
  const cplx f = moment_antiderivative(2.0, 1.0, kPi) - moment_antiderivative(2.0, 1.0, 0.0);
  CHECK(std::abs(g - f) < 1e-12);
}

TEST_CASE("resonant moment over one period is i pi") {
  const cplx expected = kI * kPi;
  CHECK(std::abs(segment_moment(1.0, 1.0, 0.0, kTau0) - expected) < 1e-13);
  const cplx limit = moment_antiderivative(1.0, 1.0, kTau0) - moment_antiderivative(1.0, 1.0, 0.0);
  CHECK(std::abs(limit - expected) < 1e-13);
}

TEST_CASE("moment is continuous through resonance") {
  const double w = 3.7;
  const double a = 0.4;
  const double b = 2.9;
  const cplx at = segment_moment(w, w, a, b);
  const cplx limit = moment_antiderivative(w, w, b) - moment_antiderivative(w, w, a);
  CHECK(std::abs(at - limit) < 1e-12);
  for (const double delta : {1e-5, -1e-5}) {
    const double mu = w + delta;
    const cplx generic = moment_antiderivative(mu, w, b) - moment_antiderivative(mu, w, a);
    CHECK(std::abs(segment_moment(mu, w, a, b) - generic) < 1e-9);
  }
  CHECK(std::abs(segment_moment(w + 1e-9, w, a, b) - at) < 1e-8);
  CHECK(std::abs(segment_moment(w, w, a, b) - moment_by_quadrature(w, w, a, b)) < 1e-12);
}

TEST_CASE("all_moments batches segment_moment") {
  const Crystal c = make_crystal(2);
  const PulseSchedule one = PulseSchedule::uniform(kTau0, 0.8, 1);
  const Eigen::MatrixXcd g = all_moments(one, c.modes);
  REQUIRE(g.rows() == 1);
  for (int k = 0; k < 2; ++k) {
    CHECK(g(0, k) == segment_moment(0.8, c.modes.frequencies[k], 0.0, kTau0));
  }

  const PulseSchedule five = PulseSchedule::uniform(0.1 * kTau0, 10.0, 5);
  const Eigen::MatrixXcd g5 = all_moments(five, c.modes);
  for (int p = 0; p < 5; ++p) {
    for (int k = 0; k < 2; ++k) {
      const cplx q = moment_by_quadrature(10.0, c.modes.frequencies[k], five.boundary(p),
                                          five.boundary(p + 1));
      CHECK(std::abs(g5(p, k) - q) < 1e-10 * std::abs(q));
    }
  }
}

TEST_CASE("segment boundaries are exact") {
  const PulseSchedule s = PulseSchedule::uniform(0.3, 1.0, 7);
  CHECK(s.boundary(0) == 0.0);
  CHECK(s.boundary(7) == 0.3);
  CHECK(s.boundary(3) == 0.3 * 3 / 7);
  CHECK_THROWS(PulseSchedule::uniform(1.0, 1.0, 0));
  CHECK_THROWS(validate(PulseSchedule{-1.0, 1.0, Eigen::VectorXd::Ones(2)}));
  CHECK_THROWS(validate(PulseSchedule{1.0, 0.0, Eigen::VectorXd::Ones(2)}));
}

TEST_CASE("refining the segment grid changes nothing") {
  const Crystal c = make_crystal(5);
  Eigen::VectorXd x(3);
  x << 0.7, -1.3, 2.1;
  Eigen::VectorXd fine(6);
  fine << 0.7, 0.7, -1.3, -1.3, 2.1, 2.1;
  const PulseSchedule coarse{1.7 * kTau0, 1.9, x};
  const PulseSchedule split{1.7 * kTau0, 1.9, fine};

  const Eigen::VectorXcd d1 = all_moments(coarse, c.modes).transpose() * x.cast<cplx>();
  const Eigen::VectorXcd d2 = all_moments(split, c.modes).transpose() * fine.cast<cplx>();
  CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-11);

  const double p1 = x.dot(phase_kernel(coarse, c.modes, 1, 3) * x);
  const double p2 = fine.dot(phase_kernel(split, c.modes, 1, 3) * fine);
  CHECK(std::abs(p1 - p2) < 1e-11);
}

TEST_CASE("kernel vanishes with the gate time") {
  const Eigen::MatrixXd k = mode_phase_kernel(PulseSchedule::uniform(1e-4, 3.0, 4), 2.0);
  CHECK(k.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kernel contraction equals the defining double integral") {
  Eigen::VectorXd x(3);
  x << 1.0, -0.4, 0.9;
  const PulseSchedule s{0.8 * kTau0, 2.3, x};
  for (const double w : {1.0, 2.3, 4.1}) {
    CAPTURE(w);
    const double expected = double_integral(s, w);
    const double got = x.dot(mode_phase_kernel(s, w) * x);
    CHECK(std::abs(got - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("two ions, one segment: analytic kernel against quadrature") {
  const Crystal c = make_crystal(2);
  const PulseSchedule s = PulseSchedule::uniform(kTau0, 2.0, 1);
  for (int k = 0; k < 2; ++k) {
    const double w = c.modes.frequencies[k];
    const double a = mode_phase_kernel(s, w)(0, 0);
    const double q = mode_phase_kernel_quadrature(s, w)(0, 0);
    CHECK(std::abs(a - q) < 1e-9 * std::abs(q));
  }
  const double total = phase_kernel(s, c.modes, 0, 1)(0, 0);
  const double direct = double_integral(s, c.modes.frequencies[0]) * 2 * c.modes.couplings(0, 0) *
                            c.modes.couplings(1, 0) +
                        double_integral(s, c.modes.frequencies[1]) * 2 * c.modes.couplings(0, 1) *
                            c.modes.couplings(1, 1);
  CHECK(std::abs(total - direct) < 1e-9 * std::abs(direct));
}

TEST_CASE("twenty ions, five segments: analytic kernel against quadrature") {
  const Crystal c = make_crystal(20);
  const PulseSchedule s = PulseSchedule::uniform(0.1 * kTau0, 10.0, 5);
  const auto analytic = pair_phase_kernels(s, c.modes, 9, 10);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(5, 5);
  Eigen::MatrixXd total_quad = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k < 20; ++k) {
    const double weight = 2 * c.modes.couplings(9, k) * c.modes.couplings(10, k);
    total += analytic[k];
    total_quad += weight * mode_phase_kernel_quadrature(s, c.modes.frequencies[k]);
  }
  CHECK((total - total_quad).cwiseAbs().maxCoeff() < 1e-9 * total.norm());
  CHECK((total - total.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((total - phase_kernel(s, c.modes, 9, 10)).cwiseAbs().maxCoeff() < 1e-14 * total.norm());
}

TEST_CASE("random battery: analytic kernel against quadrature") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> mu(0.5, 12.0);
  std::uniform_real_distribution<double> w(1.0, 12.0);
  std::uniform_real_distribution<double> tau(0.05, 1.0);
  std::uniform_int_distribution<int> m(1, 6);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const PulseSchedule s = PulseSchedule::uniform(tau(rng) * kTau0, mu(rng), m(rng));
    const double omega = w(rng);
    const Eigen::MatrixXd a = mode_phase_kernel(s, omega);
    const Eigen::MatrixXd q = mode_phase_kernel_quadrature(s, omega);
    worst = std::max(worst, (a - q).cwiseAbs().maxCoeff() / q.cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("triangle integral across its evaluation branches") {
  // int_0^L ds2 int_0^s2 ds1 e^{i (x s2 + y s1)} by quadrature.
  auto reference = [](double x, double y, double length) {
    const auto part = [&](bool imag) {
      return gauss_kronrod<double, 61>::integrate(
          [&](double s2) {
            return gauss_kronrod<double, 61>::integrate(
                [&](double s1) {
                  const cplx v = std::exp(kI * (x * s2 + y * s1));
                  return imag ? v.imag() : v.real();
                },
                0.0, s2, 8, 1e-13);
          },
          0.0, length, 8, 1e-13);
    };
    return cplx(part(false), part(true));
  };
  const double cases[][3] = {{3.0, -3.0, 1.0},  {40.0, -40.0, 1.0}, {40.0, -39.9, 1.0},
                             {0.1, 0.05, 2.0},  {-5.0, 2.0, 0.7},   {60.0, 1e-4, 1.0},
                             {1e-9, 1e-9, 1.0}, {0.0, 0.0, 1.5}};
  for (const auto& c : cases) {
    CAPTURE(c[0]);
    CAPTURE(c[1]);
    const cplx ref = reference(c[0], c[1], c[2]);
    CHECK(std::abs(triangle_exponential(c[0], c[1], c[2]) - ref) < 1e-11 * std::abs(ref) + 1e-15);
  }
}
