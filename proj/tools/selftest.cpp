#include "selftest.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>

#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"
#include "sepcov/ensemble.hpp"
#include "sepcov/law_probes.hpp"
#include "sepcov/spectral_quadrature.hpp"
#include "sepcov/stats_tests.hpp"

namespace sepcov::cli {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

SelftestCheck guarded(const std::string& name, const std::function<SelftestCheck()>& body) {
  try {
    SelftestCheck c = body();
    c.name = name;
    return c;
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

SpectralModel null_mp(long n, long big_n) {
  return build_model({{1.0, 1.0}}, {{1.0, 1.0}}, n, big_n);
}

SelftestCheck golden_ratio() {
  const DysonSolution s = solve_at(null_mp(1000, 1000), {-1.0, 1e-14});
  const double want = (std::sqrt(5.0) - 1.0) / 2.0;
  const double err = std::abs(s.mc - cplx(want, 0.0));
  return {"", err <= 1e-10, fmt("m_c(-1) = %.12f, error %.2e", s.mc.real(), err)};
}

SelftestCheck mp_edges() {
  double worst = 0.0;
  for (long n : {250L, 500L, 1000L}) {
    const EdgeReport e = find_rightmost_edge(null_mp(n, 1000), 0.1);
    const double d = static_cast<double>(n) / 1000.0;
    const double want = (1.0 + std::sqrt(d)) * (1.0 + std::sqrt(d));
    worst = std::max(worst, std::abs(e.lambda_plus - want));
  }
  return {"", worst <= 1e-8, fmt("max |lambda_+ - (1 + sqrt d)^2| = %.2e over d in {0.25, 0.5, 1}", worst)};
}

SelftestCheck normalization() {
  const SpectralModel m = null_mp(500, 1000);
  const EdgeReport e = find_rightmost_edge(m, 0.1);
  const SupportQuadrature q(m, e.support, DensityKind::c);
  const double err = std::abs(q.total_mass() - 1.0);
  return {"", err <= 1e-6, fmt("mass of rho_c = %.10f, error %.2e", q.total_mass(), err)};
}

// Pi averages back to the Stieltjes transforms:
//   sum_i w_i Pi_upper,i = z m_c and sum_mu w_mu Pi_lower,mu = d m_c - (1 - d) / z.
SelftestCheck pi_identity() {
  const SpectralModel m = build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, 1000, 2000);
  const DysonSolution s = solve_at(m, {2.0, 0.05});
  const PiLimit pi = deterministic_limit_pi(m, s);
  const cplx z = s.z.z();
  cplx up = 0.0, low = 0.0;
  for (std::size_t i = 0; i < pi.upper.size(); ++i) up += m.pi_a.atoms()[i].weight * pi.upper[i];
  for (std::size_t i = 0; i < pi.lower.size(); ++i) low += m.pi_b.atoms()[i].weight * pi.lower[i];
  const double err = std::max(std::abs(up - z * s.mc), std::abs(low - (m.d * s.mc - (1.0 - m.d) / z)));
  return {"", err <= 1e-10, fmt("trace identities off by %.2e", err)};
}

// Linearization H(z) = [[-I, M], [M^T, -z I]] has inverse
// [[z G1, M G2], [M^T G1, G2]]; compare with the spectral formula.
SelftestCheck dense_inverse() {
  const SpectralModel m = build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, 20, 30);
  const SampleSpectrum s = sample_spectrum(m, make_entry_law(LawKind::gaussian), 20240611, true, true);
  // Rebuild M from the singular triplets.
  Eigen::MatrixXd factor = s.xi * Eigen::VectorXd::Map(s.eigenvalues.data(),
                                                        static_cast<long>(s.eigenvalues.size()))
                                      .cwiseSqrt()
                                      .asDiagonal() *
                           s.zeta.transpose();
  const ComplexPoint z{1.3, 0.02};
  const long n = factor.rows(), big_n = factor.cols();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n + big_n, n + big_n);
  h.topLeftCorner(n, n) = -Eigen::MatrixXcd::Identity(n, n);
  h.topRightCorner(n, big_n) = factor.cast<cplx>();
  h.bottomLeftCorner(big_n, n) = factor.transpose().cast<cplx>();
  h.bottomRightCorner(big_n, big_n) = -z.z() * Eigen::MatrixXcd::Identity(big_n, big_n);
  const Eigen::MatrixXcd dense = h.inverse();
  const Eigen::MatrixXcd spectral = resolvent_from_spectrum(s, z);
  const double err = (dense - spectral).cwiseAbs().maxCoeff();
  return {"", err <= 1e-8, fmt("max entry difference %.2e at n = 20, N = 30", err)};
}

SelftestCheck vector_dyson() {
  const SpectralModel m = build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, 1000, 2000);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const double err = vector_dyson_check(m, {e.lambda_plus + 0.5, 0.01});
  return {"", err <= 1e-9, fmt("vector vs pair discrepancy %.2e", err)};
}

SelftestCheck tw1_asset(const std::optional<std::filesystem::path>& path) {
  const Tw1Table table = path ? Tw1Table::load(*path) : Tw1Table::embedded();
  const bool mono = table.monotone();
  const double mean = table.mean(), sd = table.sd();
  const double f0 = table.cdf(0.0);
  const double f0_direct = tw1_fredholm(0.0);
  const bool ok = mono && std::abs(mean + 1.2065) < 0.01 && std::abs(sd - 1.268) < 0.01 &&
                  std::abs(f0 - f0_direct) < 1e-6;
  SelftestCheck c{"", ok, ""};
  c.detail = std::string(mono ? "monotone" : "NOT monotone") +
             fmt(", mean %.4f, sd %.4f", mean, sd) +
             fmt(", F1(0) table %.8f vs determinant %.8f", f0, f0_direct);
  return c;
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const std::optional<std::filesystem::path>& tw1_table) {
  return {
      guarded("golden_ratio", golden_ratio),
      guarded("mp_edges", mp_edges),
      guarded("density_normalization", normalization),
      guarded("pi_identity", pi_identity),
      guarded("dense_inverse_n20", dense_inverse),
      guarded("vector_dyson", vector_dyson),
      guarded("tw1_asset", [&] { return tw1_asset(tw1_table); }),
  };
}

}  // namespace sepcov::cli
