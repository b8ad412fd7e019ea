#include "iongate/pulse_kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace iongate {

namespace {

constexpr cplx kI{0.0, 1.0};

// (e^z - 1) / z
cplx phi1(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term = 1.0;
    cplx sum = 1.0;
    for (int n = 2; n < 30; ++n) {
      term *= z / static_cast<double>(n);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::exp(z) - 1.0) / z;
}

// int_0^L e^{i nu s} ds
cplx exp_integral(double nu, double length) { return length * phi1(kI * (nu * length)); }

// Second divided difference of exp at nodes {0, a, a + d}, d small and |a| large:
// sum_{n>=1} I_n(a) d^{n-1} / n!, I_n(a) = int_0^1 t^n e^{a t} dt.
cplx divided_difference_series(cplx a, cplx d) {
  const cplx ea = std::exp(a);
  cplx moment = (ea - 1.0) / a;
  cplx sum = 0.0;
  cplx power = 1.0;  // d^{n-1} / n!
  for (int n = 1; n < 40; ++n) {
    moment = (ea - static_cast<double>(n) * moment) / a;
    power /= static_cast<double>(n);
    const cplx term = moment * power;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    power *= d;
  }
  return sum;
}

}  // namespace

double PulseSchedule::boundary(int p) const {
  const int m = segments();
  if (p <= 0) return 0.0;
  if (p >= m) return tau;
  return tau * static_cast<double>(p) / static_cast<double>(m);
}

PulseSchedule PulseSchedule::uniform(double tau, double mu, int m) {
  if (m < 1) throw std::invalid_argument("PulseSchedule: segment count must be >= 1");
  return PulseSchedule{tau, mu, Eigen::VectorXd::Ones(m)};
}

void validate(const PulseSchedule& schedule) {
  if (!(schedule.tau > 0)) throw std::invalid_argument("PulseSchedule: tau must be > 0");
  if (!(schedule.mu > 0)) throw std::invalid_argument("PulseSchedule: detuning must be > 0");
  if (schedule.segments() < 1) {
    throw std::invalid_argument("PulseSchedule: segment count must be >= 1");
  }
}

cplx segment_moment(double mu, double omega, double t_start, double t_end) {
  const double length = t_end - t_start;
  if (length == 0) return 0.0;
  // sin(mu t) e^{i w t} = (e^{i (w + mu) t} - e^{i (w - mu) t}) / 2i
  const double sum = omega + mu;
  const double diff = omega - mu;
  const cplx plus = std::exp(kI * (sum * t_start)) * exp_integral(sum, length);
  const cplx minus = std::exp(kI * (diff * t_start)) * exp_integral(diff, length);
  return (plus - minus) / (2.0 * kI);
}

cplx moment_antiderivative(double mu, double omega, double t) {
  if (omega == mu) return -std::exp(2.0 * kI * mu * t) / (4.0 * mu) + kI * t / 2.0;
  return std::exp(kI * omega * t) * (mu * std::cos(mu * t) - kI * omega * std::sin(mu * t)) /
         (omega * omega - mu * mu);
}

cplx triangle_exponential(double x, double y, double length) {
  if (length == 0) return 0.0;
  const cplx a = kI * (x * length);
  const cplx d = kI * (y * length);
  const double scale = length * length;
  if (std::abs(d) >= 0.5) return scale * (phi1(a + d) - phi1(a)) / d;
  if (std::abs(a) > 30.0) return scale * divided_difference_series(a, d);
  // int_0^1 s e^{a s} phi1(d s) ds: at most ~5 oscillations over the interval.
  const auto integrand = [&](double s) { return s * std::exp(a * s) * phi1(d * s); };
  const auto re = boost::math::quadrature::gauss<double, 60>::integrate(
      [&](double s) { return integrand(s).real(); }, 0.0, 1.0);
  const auto im = boost::math::quadrature::gauss<double, 60>::integrate(
      [&](double s) { return integrand(s).imag(); }, 0.0, 1.0);
  return scale * cplx(re, im);
}

Eigen::MatrixXcd all_moments(const PulseSchedule& schedule, const ModeSet& modes) {
  const int m = schedule.segments();
  Eigen::MatrixXcd moments(m, modes.size());
  for (int k = 0; k < modes.size(); ++k) {
    for (int p = 0; p < m; ++p) {
      moments(p, k) = segment_moment(schedule.mu, modes.frequencies[k], schedule.boundary(p),
                                     schedule.boundary(p + 1));
    }
  }
  return moments;
}

Eigen::MatrixXd mode_phase_kernel(const PulseSchedule& schedule, double omega) {
  const int m = schedule.segments();
  const double mu = schedule.mu;
  const double sum = omega + mu;
  const double diff = omega - mu;

  std::vector<cplx> moments(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) {
    moments[p] = segment_moment(mu, omega, schedule.boundary(p), schedule.boundary(p + 1));
  }

  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (int p = 0; p < m; ++p) {
    // Later segment p against earlier segment q: the domain is a full rectangle.
    for (int q = 0; q < p; ++q) {
      const double value = (moments[p] * std::conj(moments[q])).imag();
      kernel(p, q) = 0.5 * value;
      kernel(q, p) = 0.5 * value;
    }
    // Same segment: triangle t1 < t2. sin(mu t2) e^{i w t2} sin(mu t1) e^{-i w t1}
    // expands into four exponentials in (t2, t1).
    const double start = schedule.boundary(p);
    const double length = schedule.boundary(p + 1) - start;
    const cplx shift_up = std::exp(2.0 * kI * (mu * start));
    const cplx tri = triangle_exponential(sum, -sum, length) -
                     shift_up * triangle_exponential(sum, -diff, length) -
                     std::conj(shift_up) * triangle_exponential(diff, -sum, length) +
                     triangle_exponential(diff, -diff, length);
    kernel(p, p) = 0.25 * tri.imag();
  }
  return kernel;
}

Eigen::MatrixXd mode_phase_kernel_quadrature(const PulseSchedule& schedule, double omega,
                                             double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  const int m = schedule.segments();
  const double mu = schedule.mu;
  constexpr unsigned kDepth = 8;

  auto block = [&](double a2, double b2, double a1, double b1, bool triangle) {
    const auto outer = [&](double t2) {
      const double upper = triangle ? t2 : b1;
      if (upper <= a1) return 0.0;
      const auto inner = [&](double t1) { return std::sin(mu * t1) * std::sin(omega * (t2 - t1)); };
      return std::sin(mu * t2) *
             gauss_kronrod<double, 61>::integrate(inner, a1, upper, kDepth, rel_tol);
    };
    return gauss_kronrod<double, 61>::integrate(outer, a2, b2, kDepth, rel_tol);
  };

  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (int p = 0; p < m; ++p) {
    const double a2 = schedule.boundary(p);
    const double b2 = schedule.boundary(p + 1);
    for (int q = 0; q < p; ++q) {
      const double value = block(a2, b2, schedule.boundary(q), schedule.boundary(q + 1), false);
      kernel(p, q) = 0.5 * value;
      kernel(q, p) = 0.5 * value;
    }
    kernel(p, p) = block(a2, b2, a2, b2, true);
  }
  return kernel;
}

std::vector<Eigen::MatrixXd> pair_phase_kernels(const PulseSchedule& schedule,
                                                const ModeSet& modes, int row_i, int row_j) {
  if (row_i < 0 || row_j < 0 || row_i >= modes.size() || row_j >= modes.size()) {
    throw std::invalid_argument("pair_phase_kernels: ion row out of range");
  }
  std::vector<Eigen::MatrixXd> kernels;
  kernels.reserve(static_cast<std::size_t>(modes.size()));
  for (int k = 0; k < modes.size(); ++k) {
    const double weight = 2.0 * modes.couplings(row_i, k) * modes.couplings(row_j, k);
    kernels.push_back(weight * mode_phase_kernel(schedule, modes.frequencies[k]));
  }
  return kernels;
}

Eigen::MatrixXd phase_kernel(const PulseSchedule& schedule, const ModeSet& modes, int row_i,
                             int row_j) {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(schedule.segments(), schedule.segments());
  for (const auto& k : pair_phase_kernels(schedule, modes, row_i, row_j)) total += k;
  return total;
}

}  // namespace iongate
