#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "sepcov/errors.hpp"
#include "sepcov/rng.hpp"
#include "sepcov/stats_tests.hpp"

using namespace sepcov;

TEST_CASE("two-sample KS basics") {
  const std::vector<double> a = {0.1, 0.5, 0.9, 1.3};
  const TestResult same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const TestResult apart = ks_two_sample({0.0}, {1.0});
  CHECK(apart.statistic == 1.0);
  CHECK(apart.p_value >= 0.0);
  CHECK(apart.p_value <= 1.0);

  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), DomainError);

  Rng rng(1);
  std::vector<double> x(300), y(250);
  for (double& v : x) v = rng.normal();
  for (double& v : y) v = rng.normal() + 0.2;
  const TestResult r = ks_two_sample(x, y);
  const TestResult sym = ks_two_sample(y, x);
  CHECK(r.statistic == sym.statistic);
  CHECK(r.p_value == sym.p_value);
  // Invariant under a strictly increasing map applied to both samples.
  std::vector<double> ex = x, ey = y;
  for (double& v : ex) v = std::exp(v);
  for (double& v : ey) v = std::exp(v);
  CHECK(ks_two_sample(ex, ey).statistic == doctest::Approx(r.statistic).epsilon(1e-15));

  // Brute-force statistic over the pooled sample.
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  double d = 0.0;
  for (double t : pooled) {
    const double fx = static_cast<double>(std::count_if(x.begin(), x.end(), [t](double v) { return v <= t; })) / x.size();
    const double fy = static_cast<double>(std::count_if(y.begin(), y.end(), [t](double v) { return v <= t; })) / y.size();
    d = std::max(d, std::abs(fx - fy));
  }
  CHECK(r.statistic == doctest::Approx(d).epsilon(1e-14));
}

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.0505).epsilon(0.02));
  CHECK(kolmogorov_q(1.63) == doctest::Approx(0.0100).epsilon(0.03));
  // Continuous across the switch between the two series.
  CHECK(std::abs(kolmogorov_q(1.18 - 1e-9) - kolmogorov_q(1.18 + 1e-9)) < 1e-7);
  double prev = 1.0;
  for (double l = 0.05; l < 4.0; l += 0.05) {
    const double q = kolmogorov_q(l);
    CHECK(q <= prev);
    prev = q;
  }
}

TEST_CASE("one-sample KS is calibrated under the null") {
  Rng rng(3);
  int rejections = 0;
  const auto cdf = [](double s) { return 0.5 * std::erfc(-s / std::sqrt(2.0)); };
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(200);
    for (double& v : x) v = rng.normal();
    rejections += ks_one_sample(x, cdf).p_value < 0.05 ? 1 : 0;
  }
  CHECK(rejections >= 2);
  CHECK(rejections <= 22);
}

TEST_CASE("embedded TW1 table") {
  const Tw1Table& t = Tw1Table::embedded();
  CHECK(t.monotone());
  CHECK(t.s().size() == 1601);
  CHECK(t.s().front() == -10.0);
  CHECK(t.s().back() == 6.0);
  CHECK(tw1_cdf(-10.0) < 1e-7);
  // The true upper tail 1 - F1(6) is about 2e-6.
  CHECK(tw1_cdf(6.0) > 1.0 - 1e-5);
  CHECK(tw1_cdf(-1.2065) == doctest::Approx(0.52).epsilon(0.04));
  CHECK(t.mean() == doctest::Approx(-1.2065).epsilon(1e-3));
  CHECK(t.sd() == doctest::Approx(1.2680).epsilon(1e-3));
  CHECK(tw1_cdf(-20.0) == 0.0);
  CHECK(tw1_cdf(20.0) == 1.0);
  // Monotone interpolation stays between neighbouring knots.
  for (std::size_t i = 0; i + 1 < t.s().size(); i += 37) {
    const double mid = tw1_cdf(0.5 * (t.s()[i] + t.s()[i + 1]));
    CHECK(mid >= t.f()[i]);
    CHECK(mid <= t.f()[i + 1]);
  }
  CHECK_FALSE(t.provenance().empty());
}

TEST_CASE("Fredholm determinant spot checks") {
  for (double s : {-3.0, -1.0, 0.0, 2.0}) {
    CHECK(tw1_fredholm(s) == doctest::Approx(tw1_cdf(s)).epsilon(1e-8));
    CHECK(std::abs(tw1_fredholm(s, 120) - tw1_fredholm(s, 200)) < 1e-10);
  }
  CHECK(tw1_fredholm(0.0) == doctest::Approx(0.83190806).epsilon(1e-7));
}

TEST_CASE("TW1 table parsing") {
  const Tw1Table ok = Tw1Table::parse("# note\ns,F1\n-1,0.1\n0,0.5\n1,0.9\n2,0.95\n");
  CHECK(ok.monotone());
  CHECK(ok.cdf(0.0) == doctest::Approx(0.5));
  CHECK(ok.provenance() == " note\n");
  const Tw1Table bad = Tw1Table::parse("s,F1\n-1,0.1\n0,0.6\n1,0.5\n2,0.7\n");
  CHECK_FALSE(bad.monotone());
  CHECK_THROWS_AS(Tw1Table::parse("s,F1\n-1,abc\n0,0.1\n1,0.2\n2,0.3\n"), Error);
  CHECK_THROWS_AS(Tw1Table::parse("s,F1\n0,0\n1,0.5\n"), DomainError);
  CHECK_THROWS_AS(Tw1Table::parse("s,F1\n0,0\n0,0.1\n1,0.5\n2,0.6\n"), DomainError);
}

TEST_CASE("universality report") {
  EnsembleBatch a, b;
  a.model_hash = b.model_hash = "h";
  a.law_id = "gaussian";
  b.law_id = "bernoulli";
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    a.rescaled.push_back(rng.normal());
    b.rescaled.push_back(rng.normal());
  }
  const UniversalitySummary ab = universality_report(a, b);
  const UniversalitySummary ba = universality_report(b, a);
  CHECK(ab.ks.statistic == ba.ks.statistic);
  CHECK(ab.ks.p_value == ba.ks.p_value);
  CHECK(ab.law_a == "gaussian");
  CHECK(ab.tw1_mean == doctest::Approx(-1.2065).epsilon(1e-3));
  CHECK(to_json(ab).contains("ks"));
  b.model_hash = "other";
  CHECK_THROWS_AS(universality_report(a, b), DomainError);
}

TEST_CASE("sample moments") {
  CHECK(sample_mean({1.0, 2.0, 3.0}) == 2.0);
  CHECK(sample_sd({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
}
