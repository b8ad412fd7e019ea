#include "iongate/crystal.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace iongate;

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two ions balance at u^3 = 1/4") {
  const Eigen::VectorXd u = solve_equilibrium(2);
  const double expected = std::cbrt(0.25);
  CHECK(u[0] == doctest::Approx(-expected).epsilon(1e-13));
  CHECK(u[1] == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(0.6300).epsilon(1e-4));
}

TEST_CASE("three ions balance at u^3 = 5/4") {
  const Eigen::VectorXd u = solve_equilibrium(3);
  const double expected = std::cbrt(1.25);
  CHECK(u[0] == doctest::Approx(-expected).epsilon(1e-13));
  CHECK(std::abs(u[1]) < 1e-13);
  CHECK(u[2] == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("equilibria up to 64 ions are force free, ordered and antisymmetric") {
  for (int n = 2; n <= 64; ++n) {
    CAPTURE(n);
    const Eigen::VectorXd u = solve_equilibrium(n);
    CHECK(max_abs(equilibrium_residual(u)) < 1e-12);
    CHECK(max_abs(u + u.reverse()) < 1e-12);
    for (int i = 1; i < n; ++i) CHECK(u[i] > u[i - 1]);
  }
}

TEST_CASE("fewer than two ions is rejected") {
  CHECK_THROWS_AS(solve_equilibrium(1), CrystalError);
}

TEST_CASE("coupling matrix is symmetric with unit row sums") {
  for (const int n : {2, 3, 7, 20, 40}) {
    CAPTURE(n);
    const Eigen::MatrixXd a = build_coupling(solve_equilibrium(n));
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs(a.rowwise().sum() - Eigen::VectorXd::Ones(n)) < 1e-12);
  }
}

TEST_CASE("coincident or unordered positions are rejected") {
  Eigen::VectorXd u(3);
  u << -1.0, 0.5, 0.5;
  CHECK_THROWS_AS(build_coupling(u), CrystalError);
  u << 1.0, 0.0, -1.0;
  CHECK_THROWS_AS(build_coupling(u), CrystalError);
}

TEST_CASE("two-ion coupling matrix and spectrum in closed form") {
  const double d = 2.0 * std::pow(2.0, -2.0 / 3.0);
  const double off = 2.0 / (d * d * d);
  const Crystal c = make_crystal(2);
  CHECK(c.coupling(0, 0) == doctest::Approx(1 + off).epsilon(1e-13));
  CHECK(c.coupling(0, 1) == doctest::Approx(-off).epsilon(1e-13));
  // Eigenvalues of [[1+o, -o], [-o, 1+o]] are 1 and 1 + 2o = 3.
  CHECK(c.modes.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c.modes.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-13));
  // A_11 = 1 + 2/d^3 = 2 exactly.
  CHECK(local_frequency(c, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("COM and breathing modes are exact for every size") {
  for (const int n : {2, 3, 5, 10, 20, 40}) {
    CAPTURE(n);
    const Crystal c = make_crystal(n);
    CHECK(std::abs(c.modes.eigenvalues[0] - 1.0) < 1e-9);
    CHECK(std::abs(c.modes.eigenvalues[1] - 3.0) < 1e-9);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(n));
    CHECK(max_abs(c.modes.vectors.col(0) - uniform) < 1e-10);
    // The stretch mode is parallel to the positions.
    const Eigen::VectorXd stretch = c.positions.normalized();
    CHECK(std::abs(std::abs(stretch.dot(c.modes.vectors.col(1))) - 1.0) < 1e-10);
  }
}

TEST_CASE("modes are orthonormal, ascending and reconstruct A") {
  const Crystal c = make_crystal(20);
  const auto& b = c.modes.vectors;
  CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 0; k < 20; ++k) {
    if (k > 0) CHECK(c.modes.eigenvalues[k] >= c.modes.eigenvalues[k - 1]);
    CHECK((c.coupling * b.col(k) - c.modes.eigenvalues[k] * b.col(k)).norm() < 1e-10);
    CHECK(c.modes.frequencies[k] == doctest::Approx(std::sqrt(c.modes.eigenvalues[k])));
    CHECK(c.modes.couplings(3, k) ==
          doctest::Approx(b(3, k) / std::sqrt(2 * c.modes.frequencies[k])));
    // Sign convention: the first largest-magnitude component is positive. Mirror
    // partners tie in magnitude up to rounding, hence the relative slack.
    const double peak = b.col(k).cwiseAbs().maxCoeff();
    Eigen::Index at = 0;
    while (std::abs(b(at, k)) < peak * (1 - 1e-8)) ++at;
    CHECK(b(at, k) > 0);
  }
}

TEST_CASE("local frequencies of the centre ions") {
  const Crystal c20 = make_crystal(20);
  CHECK(local_frequency(c20, 9) == doctest::Approx(9.2).epsilon(0.02));
  CHECK(c20.coupling(9, 9) == doctest::Approx(9.2 * 9.2).epsilon(0.02));
  const Crystal c40 = make_crystal(40);
  CHECK(std::abs(local_frequency(c40, 19) - 16.7) < 0.1);
  for (int i = 0; i < 20; ++i) CHECK(local_frequency(c20, i) >= 1.0);
  CHECK_THROWS_AS(local_frequency(c20, 20), CrystalError);
}

TEST_CASE("thermal factors") {
  const Crystal c = make_crystal(5);
  SUBCASE("ground state") {
    CHECK(thermal_betas(0.0, c.modes).cwiseAbs().maxCoeff() == 1.0);
    CHECK(thermal_betas(0.0, c.modes).minCoeff() == 1.0);
  }
  SUBCASE("COM identity 2 nbar + 1") {
    for (const double nbar : {0.1, 1.0, 3.0, 10.0}) {
      CAPTURE(nbar);
      CHECK(std::abs(thermal_betas(nbar, c.modes)[0] - (2 * nbar + 1)) < 1e-12);
    }
    CHECK(thermal_betas(3.0, c.modes)[0] == doctest::Approx(7.0).epsilon(1e-13));
  }
  SUBCASE("breathing mode against cosh/sinh") {
    const double x = 0.5 * std::sqrt(3.0) * std::log(4.0 / 3.0);
    CHECK(thermal_betas(3.0, c.modes)[1] ==
          doctest::Approx(std::cosh(x) / std::sinh(x)).epsilon(1e-13));
  }
  SUBCASE("at least one and decreasing in frequency") {
    const Eigen::VectorXd betas = thermal_betas(3.0, c.modes);
    for (int k = 0; k < 5; ++k) {
      CHECK(betas[k] >= 1.0);
      if (k > 0) CHECK(betas[k] < betas[k - 1]);
    }
    CHECK(thermal_betas(1e-6, c.modes).maxCoeff() == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK_THROWS_AS(thermal_betas(-0.5, c.modes), CrystalError);
}

TEST_CASE("restricted modes") {
  const Crystal c = make_crystal(20);
  SUBCASE("all ions reproduce the full spectrum") {
    std::vector<int> all(20);
    for (int i = 0; i < 20; ++i) all[i] = i;
    const ModeSet m = restricted_modes(c, all);
    CHECK(max_abs(m.eigenvalues - c.modes.eigenvalues) < 1e-10);
  }
  SUBCASE("single ion oscillates at its local frequency") {
    const std::vector<int> one{4};
    const ModeSet m = restricted_modes(c, one);
    REQUIRE(m.size() == 1);
    CHECK(m.frequencies[0] == doctest::Approx(local_frequency(c, 4)).epsilon(1e-14));
  }
  SUBCASE("two centre ions follow the 2x2 closed form") {
    const std::vector<int> pair{9, 10};
    const ModeSet m = restricted_modes(c, pair);
    const double diag = c.coupling(9, 9);
    const double off = c.coupling(9, 10);
    CHECK(m.frequencies[0] == doctest::Approx(std::sqrt(diag + off)).epsilon(1e-13));
    CHECK(m.frequencies[1] == doctest::Approx(std::sqrt(diag - off)).epsilon(1e-13));
    CHECK(m.row_of(9) == 0);
    CHECK(m.row_of(10) == 1);
    CHECK(m.row_of(3) == -1);
  }
  SUBCASE("gate ions must move") {
    const std::vector<int> moving{8, 9};
    const std::vector<int> gate{9, 10};
    CHECK_THROWS_AS(restricted_modes(c, moving, gate), CrystalError);
  }
}

TEST_CASE("neighbour sets grow outward from the pair") {
  const Crystal c = make_crystal(20);
  CHECK(neighbor_set(c, 9, 10, 0) == std::vector<int>{9, 10});
  CHECK(neighbor_set(c, 9, 10, 2) == std::vector<int>{8, 9, 10, 11});
  CHECK(neighbor_set(c, 9, 10, 4) == std::vector<int>{7, 8, 9, 10, 11, 12});
  CHECK(neighbor_set(c, 9, 10, 18).size() == 20);
  CHECK(neighbor_set(c, 0, 1, 1) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(neighbor_set(c, 9, 10, 19), CrystalError);
  CHECK_THROWS_AS(neighbor_set(c, 9, 9, 2), CrystalError);
}
