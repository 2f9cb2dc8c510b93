#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"

using namespace sepcov;

namespace {

SpectralModel two_atom() {
  return build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, 1000, 2000);
}

SpectralModel null_mp(long n, long big_n) {
  return build_model({{1.0, 1.0}}, {{1.0, 1.0}}, n, big_n);
}

}  // namespace

TEST_CASE("golden-ratio fixed point of the null model") {
  const DysonSolution s = solve_at(null_mp(100, 100), {-1.0, 1e-9});
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  CHECK(std::abs(s.mc - g) < 1e-8);
  CHECK(std::abs(s.m1c - g) < 1e-8);
  CHECK(std::abs(s.m2c - g) < 1e-8);
}

TEST_CASE("null model matches the closed-form Stieltjes transform") {
  for (double d : {0.25, 0.5, 1.0}) {
    const SpectralModel m = null_mp(static_cast<long>(1000 * d), 1000);
    for (const ComplexPoint z : {ComplexPoint(0.5, 0.01), ComplexPoint(2.0, 1e-4),
                                 ComplexPoint(5.0, 0.3), ComplexPoint(-2.0, 1e-6)}) {
      const DysonSolution s = solve_at(m, z);
      CHECK(std::abs(s.mc - oracle::mp_stieltjes(z.z(), d)) < 1e-9);
    }
  }
}

TEST_CASE("large-|z| asymptotics and degenerate A") {
  // m(z) = -1/z - mu_1/z^2 + O(z^-3), mu_1 = (mean of A)(mean of B) = 6.25.
  const DysonSolution far = solve_at(two_atom(), {0.0, 100.0});
  const cplx w(0.0, 100.0);
  CHECK(std::abs(far.mc - (-1.0 / w - 6.25 / (w * w))) < 1e-4);

  const SpectralModel zero_a = build_model({{0.0, 1.0}}, {{1.0, 0.5}, {4.0, 0.5}}, 100, 200);
  const ComplexPoint z{1.5, 0.2};
  const DysonSolution s = solve_at(zero_a, z);
  CHECK(std::abs(s.m1c) < 1e-14);
  CHECK(std::abs(s.mc + 1.0 / z.z()) < 1e-12);
}

TEST_CASE("upper half plane and residual contract on a grid") {
  const SpectralModel m = two_atom();
  SolverConfig cfg;
  for (double e = -1.0; e <= 30.0; e += 0.77) {
    for (double eta : {1e-6, 1e-3, 0.5}) {
      const DysonSolution s = solve_at(m, {e, eta}, cfg);
      CHECK(s.m1c.imag() > 0.0);
      CHECK(s.m2c.imag() > 0.0);
      CHECK(s.mc.imag() > 0.0);
      CHECK(s.residual <= cfg.tol);
      CHECK(pair_residual(m, s.z.z(), s.m1c, s.m2c) <= 1e-10);
    }
  }
}

TEST_CASE("solver rejects bad input") {
  SolverConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(solve_at(two_atom(), {1.0, 0.1}, bad), DomainError);
  SolverConfig bad_damping;
  bad_damping.damping = 1.5;
  CHECK_THROWS_AS(solve_at(two_atom(), {1.0, 0.1}, bad_damping), DomainError);
}

TEST_CASE("density grid against the closed-form Marchenko-Pastur density") {
  const DensityCurve c = density_grid(null_mp(500, 500), -1.0, 5.0, 1e-4, 601);
  REQUIRE(c.failures.empty());
  REQUIRE(c.grid.size() == 601);
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    CHECK(c.rho_c[i] >= -1e-10);
    const double x = c.grid[i];
    // Away from the hard edge at 0 the eta smearing is O(eta).
    if (x > 0.05 && std::abs(x - 4.0) > 0.01) {
      CHECK(c.rho_c[i] == doctest::Approx(oracle::mp_density(x, 1.0)).epsilon(2e-3));
    }
  }
  const double at2 = c.rho_c[300];
  CHECK(c.grid[300] == doctest::Approx(2.0));
  CHECK(at2 == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-4));
}

TEST_CASE("density vanishes far right of the support") {
  const SpectralModel m = two_atom();
  const double far = 10.0 * m.sigma1() * m.tilde_sigma1();
  const DensityCurve c = density_grid(m, far, far + 1.0, 1e-6, 3);
  for (double r : c.rho_c) CHECK(r <= 1e-6);
}

TEST_CASE("vector Dyson route agrees with the pair solver") {
  CHECK(vector_dyson_check(null_mp(100, 100), {-1.0, 1e-9}) <= 1e-10);
  const SpectralModel m = two_atom();
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  CHECK(vector_dyson_check(m, {e.lambda_plus + 0.5, 0.01}) <= 1e-9);
  const SpectralModel single = build_model({{2.0, 1.0}}, {{1.0, 0.5}, {4.0, 0.5}}, 300, 600);
  CHECK(vector_dyson_check(single, {3.0, 0.05}) <= 1e-12);
}

TEST_CASE("Im m2c follows the square-root dichotomy near the edge") {
  // Im m2c ~ sqrt(kappa + eta) inside and eta / sqrt(kappa + eta) outside,
  // with model-dependent constants: the ratios stay within a bounded band.
  const SpectralModel m = two_atom();
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  std::vector<double> in_ratio, out_ratio;
  for (double kappa : {1e-4, 1e-3, 1e-2, 0.1}) {
    for (double eta : {1e-4, 1e-2}) {
      const double k = kappa + eta;
      in_ratio.push_back(solve_at(m, {e.lambda_plus - kappa, eta}).m2c.imag() / std::sqrt(k));
      out_ratio.push_back(solve_at(m, {e.lambda_plus + kappa, eta}).m2c.imag() * std::sqrt(k) / eta);
    }
  }
  for (const auto* r : {&in_ratio, &out_ratio}) {
    const auto [lo, hi] = std::minmax_element(r->begin(), r->end());
    CHECK(*lo > 0.0);
    CHECK(*hi / *lo <= 10.0);
  }
}

TEST_CASE("m2c increases along the real axis right of the support") {
  const SpectralModel m = two_atom();
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  double prev = -1e300;
  for (double x = e.lambda_plus + 0.01; x < e.lambda_plus + 20.0; x += 0.5) {
    const double v = solve_at(m, {x, 1e-12}).m2c.real();
    CHECK(v > prev);
    prev = v;
  }
}
