// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when a
// gating criterion fails. AC10 is advisory and never gates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sepcov/detection.hpp"
#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"
#include "sepcov/ensemble.hpp"
#include "sepcov/law_probes.hpp"
#include "sepcov/stats_tests.hpp"

using namespace sepcov;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a = 0.0, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SpectralModel two_atom(long n, long big_n) {
  return build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, n, big_n);
}

SpectralModel null_mp(long n, long big_n) {
  return build_model({{1.0, 1.0}}, {{1.0, 1.0}}, n, big_n);
}

EnsembleBatch batch(const SpectralModel& m, const EntryLaw& law, const EdgeReport& e, int reps,
                    std::uint64_t seed, bool rotated = false, bool keep_spectra = false,
                    bool keep_vectors = false) {
  BatchConfig cfg;
  cfg.reps = reps;
  cfg.master_seed = seed;
  cfg.rotated = rotated;
  cfg.keep_spectra = keep_spectra;
  cfg.keep_vectors = keep_vectors;
  return run_batch(m, law, e, cfg);
}

Outcome ac1() {
  const SpectralModel m = null_mp(1000, 1000);
  // z = -1 sits on the real axis; the solver works in the open upper half
  // plane, so eta is taken at 1e-14.
  const ComplexPoint z{-1.0, 1e-14};
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const int repeats = 2000;
  double err = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) err = std::max(err, std::abs(solve_at(m, z).mc - golden));
  const double ms = 1e3 * seconds_since(t0) / repeats;
  return {err <= 1e-10 && ms < 1.0, fmt("|m_c - golden| = %.2e, %.4f ms per solve", err, ms)};
}

Outcome ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_edge = 0.0, worst_scale = 0.0, worst_res = 0.0;
  auto residuals = [&](const EdgeReport& e) {
    worst_res = std::max({worst_res, std::abs(e.f_residual), std::abs(e.df_dalpha_residual)});
  };
  for (double d : {0.25, 0.5, 1.0}) {
    const EdgeReport e = find_rightmost_edge(null_mp(static_cast<long>(1000 * d), 1000), 0.1);
    residuals(e);
    worst_edge = std::max(worst_edge, std::abs(e.lambda_plus - oracle::mp_upper(d)));
  }
  const EdgeReport base = find_rightmost_edge(two_atom(1000, 2000), 0.2);
  const EdgeReport scaled = find_rightmost_edge(
      build_model({{4.0, 0.5}, {16.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, 1000, 2000), 0.05);
  const EdgeReport null_scaled =
      find_rightmost_edge(build_model({{4.0, 1.0}}, {{1.0, 1.0}}, 500, 1000), 0.1);
  residuals(base);
  residuals(scaled);
  residuals(null_scaled);
  worst_scale = std::max(std::abs(scaled.lambda_plus - 4.0 * base.lambda_plus),
                         std::abs(null_scaled.lambda_plus - 4.0 * oracle::mp_upper(0.5)));
  const double s = seconds_since(t0);
  const bool ok = worst_edge <= 1e-8 && worst_scale <= 1e-10 && worst_res <= 1e-8 && s < 1.0;
  return {ok, fmt("edge err %.2e, scaling err %.2e, max residual %.2e, %.3f s", worst_edge, worst_scale,
                  worst_res, s)};
}

Outcome ac3() {
  const SpectralModel m = two_atom(1000, 2000);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const int k = 41;
  std::vector<double> lx, lr;
  for (int i = 0; i < k; ++i) {
    const double x = std::pow(10.0, -3.0 + static_cast<double>(i) / (k - 1));
    const double rho = solve_at(m, {e.lambda_plus - x, 1e-6}).mc.imag() / std::numbers::pi;
    lx.push_back(std::log(x));
    lr.push_back(std::log(rho));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += lx[i] / k;
    my += lr[i] / k;
  }
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < k; ++i) {
    sxy += (lx[i] - mx) * (lr[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  // Coefficient at the square-root exponent: geometric mean of rho / sqrt(x).
  const double coeff = std::exp(my - 0.5 * mx);
  const double rel = std::abs(coeff / e.sqrt_coeff_c - 1.0);
  return {slope >= 0.45 && slope <= 0.55 && rel <= 0.05,
          fmt("exponent %.4f, coefficient %.6g vs %.6g (rel %.2e)", slope, coeff, e.sqrt_coeff_c, rel)};
}

Outcome ac4() {
  const SpectralModel m = two_atom(1000, 2000);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const double lo = -0.5, hi = e.lambda_plus + 1.0;
  const int points = 200001;
  const DensityCurve c = density_grid(m, lo, hi, 1e-3, points);
  if (!c.failures.empty()) return {false, "density grid had solver failures"};
  const double h = (hi - lo) / (points - 1);
  double mass = c.rho_c.front() + c.rho_c.back();
  for (int i = 1; i < points - 1; ++i) mass += c.rho_c[static_cast<std::size_t>(i)] * (i % 2 ? 4.0 : 2.0);
  mass *= h / 3.0;
  return {mass >= 0.99 && mass <= 1.01, fmt("mass %.6f", mass)};
}

Outcome ac5() {
  const SpectralModel m = two_atom(200, 400);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EnsembleBatch g = batch(m, make_entry_law(LawKind::gaussian), e, 1000, 501);
  const EnsembleBatch h = batch(m, make_entry_law(LawKind::heavy_tail), e, 1000, 502);
  const UniversalitySummary u = universality_report(g, h);
  std::vector<double> doubled = h.rescaled;
  for (double& t : doubled) t *= 2.0;
  const TestResult control = ks_two_sample(g.rescaled, doubled);
  return {u.ks.p_value > 1e-3 && control.p_value < 1e-6,
          fmt("KS p = %.4f (D = %.4f); doubled gamma0 control p = %.2e", u.ks.p_value, u.ks.statistic,
              control.p_value)};
}

Outcome ac6() {
  const SpectralModel m = two_atom(200, 400);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EnsembleBatch rot = batch(m, make_entry_law(LawKind::gaussian), e, 500, 601, true);
  const EnsembleBatch diag = batch(m, make_entry_law(LawKind::gaussian), e, 500, 602, false);
  const TestResult r = ks_two_sample(rot.rescaled, diag.rescaled);
  return {r.p_value > 0.01, fmt("KS p = %.4f (D = %.4f)", r.p_value, r.statistic)};
}

Outcome ac7() {
  const SpectralModel m = null_mp(500, 500);
  const EdgeReport e = find_rightmost_edge(m, 0.1);
  const ClassicalLocations cl = classical_locations(m, e, 250);
  const EnsembleBatch b = batch(m, make_entry_law(LawKind::gaussian), e, 50, 701, false, true);
  ProbeConfig cfg;
  cfg.c = 10.0;
  cfg.eps = 0.0;
  int ok = 0;
  double worst = 0.0;
  for (const SampleSpectrum& s : b.spectra) {
    const ProbeReport r = rigidity_probe(s, cl, 10, 250, cfg);
    ok += r.passed() ? 1 : 0;
    worst = std::max(worst, r.max_ratio);
  }
  const double frac = ok / static_cast<double>(b.spectra.size());
  return {frac >= 0.95, fmt("%.0f of %.0f reps within 10 (largest ratio %.3f)", ok,
                            static_cast<double>(b.spectra.size()), worst)};
}

Outcome ac8() {
  const SpectralModel m = two_atom(500, 1000);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EnsembleBatch b = batch(m, make_entry_law(LawKind::gaussian), e, 100, 801, false, true);
  const ComplexPoint z{e.lambda_plus, std::pow(1000.0, -2.0 / 3.0)};
  ProbeConfig cfg;
  cfg.c = 10.0;
  cfg.eps = 0.1;
  const ProbeReport r = averaged_law_probe(m, b.spectra, {z}, e, cfg);
  if (r.rows.empty() || !r.rows.front().in_domain) return {false, "z outside the probe domain"};
  return {r.pass_fraction >= 0.95, fmt("pass fraction %.3f, mean error / envelope %.4f (threshold %.3f)",
                                       r.pass_fraction, r.rows.front().ratio, r.threshold)};
}

// Largest |(G - G_dense)_{ij}| at n = 20, with M built directly from X.
double dense_oracle_gap() {
  const SpectralModel m = two_atom(20, 40);
  const std::uint64_t seed = 901;
  const EntryLaw law = make_entry_law(LawKind::gaussian);
  const SampleSpectrum s = sample_spectrum(m, law, seed, false, true);
  Rng rng(seed);
  Eigen::MatrixXd x(20, 40);
  for (int j = 0; j < 40; ++j) {
    for (int i = 0; i < 20; ++i) x(i, j) = law.sample(rng) / std::sqrt(40.0);
  }
  const std::vector<double> a = expand_atoms(m.pi_a, 20), bb = expand_atoms(m.pi_b, 40);
  const Eigen::VectorXd sa = Eigen::VectorXd::Map(a.data(), 20).cwiseSqrt();
  const Eigen::VectorXd sb = Eigen::VectorXd::Map(bb.data(), 40).cwiseSqrt();
  const Eigen::MatrixXd factor = sa.asDiagonal() * x * sb.asDiagonal();
  double gap = 0.0;
  for (const ComplexPoint z : {ComplexPoint(5.0, 0.05), ComplexPoint(26.0, 0.2), ComplexPoint(1.0, 1e-3)}) {
    const Eigen::MatrixXcd dense = oracle::dense_resolvent(factor, z.z());
    gap = std::max(gap, (dense - resolvent_from_spectrum(s, z)).cwiseAbs().maxCoeff());
  }
  return gap;
}

Outcome ac9() {
  const SpectralModel m = two_atom(400, 800);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EntryLaw law = make_entry_law(LawKind::gaussian);
  const EnsembleBatch b = batch(m, law, e, 50, 902, false, true, true);
  const ComplexPoint z{e.lambda_plus, 1.0 / std::sqrt(800.0)};
  const double q = support_parameter(law, 800);
  ProbeConfig cfg;
  cfg.c = 10.0;
  cfg.eps = 0.1;
  int ok = 0;
  double worst = 0.0;
  for (std::size_t r = 0; r < b.spectra.size(); ++r) {
    const ProbeReport p = anisotropic_probe(m, b.spectra[r], z, 20, split_seed(903, r), q, cfg);
    ok += p.passed() ? 1 : 0;
    worst = std::max(worst, p.max_ratio);
  }
  const double frac = ok / static_cast<double>(b.spectra.size());
  const double gap = dense_oracle_gap();
  return {frac >= 0.9 && gap <= 1e-8,
          fmt("%.0f of 50 reps pass (largest ratio %.3f vs %.3f); dense oracle gap %.2e", ok, worst,
              10.0 * std::pow(800.0, 0.1), gap)};
}

Outcome ac10() {
  const SpectralModel m = two_atom(400, 800);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EnsembleBatch b = batch(m, make_entry_law(LawKind::gaussian), e, 2000, 1001);
  const TestResult r = ks_one_sample(b.rescaled, tw1_cdf);
  return {r.statistic < 0.08, fmt("KS distance %.4f (mean %.4f, sd %.4f)", r.statistic,
                                  sample_mean(b.rescaled), sample_sd(b.rescaled))};
}

struct DetectionSetup {
  NullHypothesis null;
  Eigen::MatrixXd colour_a, colour_b;  // A~^{1/2}, B~^{1/2}
};

DetectionSetup detection_setup(long n, long big_n) {
  DetectionSetup s{NullHypothesis{two_atom(n, big_n), haar_orthogonal(static_cast<int>(n), 1101),
                                  haar_orthogonal(static_cast<int>(big_n), 1102)},
                   {}, {}};
  auto half = [](const AtomicMeasure& m, long dim, const Eigen::MatrixXd& f) {
    const std::vector<double> d = expand_atoms(m, static_cast<int>(dim));
    const Eigen::VectorXd v = Eigen::VectorXd::Map(d.data(), dim).cwiseSqrt();
    return Eigen::MatrixXd(f * v.asDiagonal() * f.transpose());
  };
  s.colour_a = half(s.null.model.pi_a, n, *s.null.frame_a);
  s.colour_b = half(s.null.model.pi_b, big_n, *s.null.frame_b);
  return s;
}

Outcome ac11() {
  const long n = 40, big_n = 80;
  const DetectionSetup s = detection_setup(n, big_n);
  const double white_edge = oracle::mp_upper(0.5);
  // Alternative: the whitened spatial covariance gains one eigenvalue
  // 5 lambda_+ along a fixed direction.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(0) = 1.0;
  v = *s.null.frame_a * v;
  const Eigen::MatrixXd spike =
      Eigen::MatrixXd::Identity(n, n) + (std::sqrt(5.0 * white_edge) - 1.0) * v * v.transpose();
  DetectionConfig cfg;
  cfg.reps = 199;
  cfg.level = 0.05;
  const int trials = 100;
  int size_rejects = 0, power_rejects = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(split_seed(1103, static_cast<std::uint64_t>(t)));
    Eigen::MatrixXd z(n, big_n);
    for (long j = 0; j < big_n; ++j) {
      for (long i = 0; i < n; ++i) z(i, j) = rng.normal();
    }
    cfg.seed = split_seed(1104, static_cast<std::uint64_t>(t));
    size_rejects += detect_signal(s.colour_a * z * s.colour_b, s.null, cfg).reject ? 1 : 0;
    power_rejects += detect_signal(s.colour_a * spike * z * s.colour_b, s.null, cfg).reject ? 1 : 0;
  }
  const double size = size_rejects / static_cast<double>(trials);
  const double power = power_rejects / static_cast<double>(trials);
  return {size >= 0.01 && size <= 0.12 && power >= 0.95, fmt("size %.3f, power %.3f", size, power)};
}

Outcome ac12() {
  const SpectralModel m = two_atom(1000, 2000);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const double energy = -1.0 + (e.lambda_plus + 6.0) * i / 24.0;
    for (double eta : {1e-3, 0.3}) worst = std::max(worst, vector_dyson_check(m, {energy, eta}));
  }
  return {worst <= 1e-9, fmt("max discrepancy %.2e over 50 points", worst)};
}

// The asset against Monte Carlo GOE largest eigenvalues at n = 1000.
Outcome tw1_goe() {
  Rng rng(1201);
  std::vector<double> t(1000);
  for (double& v : t) v = oracle::goe_rescaled_lambda1(1000, rng);
  const TestResult r = ks_one_sample(t, tw1_cdf);
  return {r.p_value > 1e-3, fmt("KS p = %.4f (D = %.4f), mean %.4f, sd %.4f", r.p_value, r.statistic,
                                sample_mean(t), sample_sd(t))};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    bool gating;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", ac1, true},   {"AC2", ac2, true},   {"AC3", ac3, true},   {"AC4", ac4, true},
      {"AC5", ac5, true},   {"AC6", ac6, true},   {"AC7", ac7, true},   {"AC8", ac8, true},
      {"AC9", ac9, true},   {"AC10", ac10, false}, {"AC11", ac11, true}, {"AC12", ac12, true},
      {"TW1-GOE", tw1_goe, true},
  };
  int gating_failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("threw: ") + ex.what()};
    }
    std::printf("%s %s%s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, c.gating ? "" : " (advisory)",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass && c.gating) ++gating_failures;
  }
  std::printf("acceptance: %d gating failure(s)\n", gating_failures);
  return gating_failures == 0 ? 0 : 1;
}
