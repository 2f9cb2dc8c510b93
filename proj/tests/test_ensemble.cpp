#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "sepcov/ensemble.hpp"
#include "sepcov/errors.hpp"
#include "sepcov/stats_tests.hpp"

using namespace sepcov;

namespace {

SpectralModel two_atom(long n, long big_n) {
  return build_model({{1.0, 0.5}, {4.0, 0.5}}, {{1.0, 0.5}, {4.0, 0.5}}, n, big_n);
}

}  // namespace

TEST_CASE("expand_atoms realizes the measure") {
  const AtomicMeasure m = AtomicMeasure::from_atoms({{1.0, 0.5}, {4.0, 0.5}});
  const std::vector<double> d = expand_atoms(m, 7);
  REQUIRE(d.size() == 7);
  CHECK(std::is_sorted(d.rbegin(), d.rend()));
  CHECK(std::count(d.begin(), d.end(), 4.0) + std::count(d.begin(), d.end(), 1.0) == 7);
  const AtomicMeasure three = AtomicMeasure::from_atoms({{3.0, 0.2}, {2.0, 0.3}, {1.0, 0.5}});
  const std::vector<double> e = expand_atoms(three, 10);
  CHECK(std::count(e.begin(), e.end(), 3.0) == 2);
  CHECK(std::count(e.begin(), e.end(), 2.0) == 3);
  CHECK(std::count(e.begin(), e.end(), 1.0) == 5);
}

TEST_CASE("Haar orthogonal matrices") {
  const Eigen::MatrixXd one = haar_orthogonal(1, 5);
  CHECK(std::abs(std::abs(one(0, 0)) - 1.0) < 1e-15);
  const Eigen::MatrixXd q = haar_orthogonal(50, 6);
  CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() <= 1e-10);
  // Diagonal entries have variance 1/dim.
  Rng rng(7);
  double ss = 0.0;
  int count = 0;
  for (int r = 0; r < 500; ++r) {
    const Eigen::MatrixXd h = haar_orthogonal(200, rng);
    for (int i = 0; i < 200; ++i) ss += h(i, i) * h(i, i);
    count += 200;
  }
  CHECK(ss / count == doctest::Approx(1.0 / 200.0).epsilon(0.3));
}

TEST_CASE("sample spectra: ordering, zeros and the Q1/Q2 duality") {
  const SpectralModel zero = build_model({{0.0, 1.0}}, {{0.0, 1.0}}, 10, 20);
  const SampleSpectrum z = sample_spectrum(zero, make_entry_law(LawKind::gaussian), 1, false, false);
  for (double v : z.eigenvalues) CHECK(v == 0.0);

  const SpectralModel m = two_atom(12, 30);
  const SampleSpectrum s = sample_spectrum(m, make_entry_law(LawKind::gaussian), 2, true, true);
  REQUIRE(s.eigenvalues.size() == 12);
  CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
  // Rebuild M and compare the nonzero spectra of M M^T and M^T M.
  Eigen::VectorXd sv = Eigen::VectorXd::Map(s.eigenvalues.data(), 12).cwiseSqrt();
  const Eigen::MatrixXd factor = s.xi * sv.asDiagonal() * s.zeta.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q1(factor * factor.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q2(factor.transpose() * factor);
  for (int k = 0; k < 12; ++k) {
    CHECK(std::abs(q1.eigenvalues()(11 - k) - s.eigenvalues[static_cast<std::size_t>(k)]) < 1e-10);
    CHECK(std::abs(q2.eigenvalues()(29 - k) - s.eigenvalues[static_cast<std::size_t>(k)]) < 1e-10);
  }
  const SampleSpectrum values_only = sample_spectrum(m, make_entry_law(LawKind::gaussian), 2, true, false);
  for (int k = 0; k < 12; ++k) {
    CHECK(values_only.eigenvalues[static_cast<std::size_t>(k)] ==
          doctest::Approx(s.eigenvalues[static_cast<std::size_t>(k)]).epsilon(1e-10));
  }
}

TEST_CASE("sampling matches a direct construction of the separable product") {
  const SpectralModel m = two_atom(6, 9);
  const std::uint64_t seed = 3;
  const SampleSpectrum s = sample_spectrum(m, make_entry_law(LawKind::gaussian), seed, true, false);
  // Same stream: X column by column, then U, then V.
  Rng rng(seed);
  Eigen::MatrixXd x(6, 9);
  for (int j = 0; j < 9; ++j) {
    for (int i = 0; i < 6; ++i) x(i, j) = rng.normal() / 3.0;
  }
  const Frames f = draw_frames(6, 9, rng);
  const std::vector<double> a = expand_atoms(m.pi_a, 6), b = expand_atoms(m.pi_b, 9);
  const Eigen::MatrixXd big_a = f.u * Eigen::VectorXd::Map(a.data(), 6).asDiagonal() * f.u.transpose();
  const Eigen::MatrixXd big_b = f.v * Eigen::VectorXd::Map(b.data(), 9).asDiagonal() * f.v.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sa(big_a);
  const Eigen::MatrixXd a_half = sa.operatorSqrt();
  const Eigen::MatrixXd q1 = a_half * x * big_b * x.transpose() * a_half;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q1);
  for (int k = 0; k < 6; ++k) {
    CHECK(es.eigenvalues()(5 - k) == doctest::Approx(s.eigenvalues[static_cast<std::size_t>(k)]).epsilon(1e-9));
  }
}

TEST_CASE("batches are reproducible and thread-count independent") {
  const SpectralModel m = two_atom(40, 80);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  const EntryLaw law = make_entry_law(LawKind::gaussian);
  BatchConfig cfg;
  cfg.reps = 24;
  cfg.master_seed = 99;
  cfg.rotated = true;
  const EnsembleBatch a = run_batch(m, law, e, cfg);
  cfg.threads = 4;
  const EnsembleBatch b = run_batch(m, law, e, cfg);
  CHECK(a.lambda1s == b.lambda1s);
  CHECK(a.rescaled == b.rescaled);
  for (std::size_t i = 0; i < a.lambda1s.size(); ++i) {
    CHECK(a.rescaled[i] == rescale_stat(a.lambda1s[i], e, m.big_n));
    CHECK(a.seeds[i] == split_seed(99, i));
  }

  BatchConfig one;
  one.reps = 1;
  one.master_seed = 5;
  const EnsembleBatch single = run_batch(m, law, e, one);
  const SampleSpectrum direct = sample_spectrum(m, law, split_seed(5, 0), false, false);
  CHECK(single.lambda1s.front() == direct.eigenvalues.front());

  cfg.fresh_rotations = true;
  const EnsembleBatch fresh = run_batch(m, law, e, cfg);
  CHECK(fresh.lambda1s != a.lambda1s);
  CHECK_THROWS_AS(run_batch(m, law, e, BatchConfig{0}), DomainError);
}

TEST_CASE("rescale_stat is the affine map") {
  EdgeReport e;
  e.lambda_plus = 3.0;
  e.gamma0 = 0.5;
  CHECK(rescale_stat(3.0, e, 1000) == 0.0);
  CHECK(rescale_stat(3.0 + std::pow(1000.0, -2.0 / 3.0) / 0.5, e, 1000) == doctest::Approx(1.0));
}

TEST_CASE("null model largest eigenvalue sits at the edge") {
  const SpectralModel m = build_model({{1.0, 1.0}}, {{1.0, 1.0}}, 500, 500);
  const EdgeReport e = find_rightmost_edge(m, 0.1);
  BatchConfig cfg;
  cfg.reps = 100;
  cfg.master_seed = 2024;
  const EnsembleBatch b = run_batch(m, make_entry_law(LawKind::gaussian), e, cfg);
  const double mean = sample_mean(b.lambda1s);
  CHECK(mean >= 3.85);
  CHECK(mean <= 4.05);
  const double bound = e.lambda_plus + std::pow(500.0, -2.0 / 3.0 + 0.2);
  int below = 0;
  for (double l : b.lambda1s) below += l <= bound ? 1 : 0;
  CHECK(below >= 99);
}

TEST_CASE("batch outputs") {
  const SpectralModel m = two_atom(20, 40);
  const EdgeReport e = find_rightmost_edge(m, 0.2);
  BatchConfig cfg;
  cfg.reps = 5;
  cfg.master_seed = 1;
  const EnsembleBatch b = run_batch(m, make_entry_law(LawKind::heavy_tail), e, cfg);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string csv = (dir / "sepcov_batch_test.csv").string();
  write_batch_csv(b, csv);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "replica,seed,lambda1,rescaled");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 5);
  const nlohmann::json meta = batch_metadata(b, e);
  CHECK(meta.at("model_hash") == m.hash());
  CHECK(meta.at("law").at("kind") == "heavy_tail");
  const EntryLaw back = law_from_descriptor(meta.at("law"));
  CHECK(back.id() == b.law_id);
  std::filesystem::remove(csv);
}
