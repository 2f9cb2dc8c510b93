#include "sepcov/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include "sepcov/errors.hpp"

namespace sepcov {

std::vector<double> expand_atoms(const AtomicMeasure& measure, int count) {
  if (count < 1) throw DomainError("expand_atoms needs count >= 1");
  const auto& atoms = measure.atoms();
  std::vector<int> mult(atoms.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int used = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double exact = atoms[i].weight * count;
    mult[i] = static_cast<int>(std::floor(exact));
    used += mult[i];
    remainders.emplace_back(exact - mult[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; used < count; ++k, ++used) {
    ++mult[remainders[static_cast<std::size_t>(k) % remainders.size()].second];
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    out.insert(out.end(), static_cast<std::size_t>(mult[i]), atoms[i].value);
  }
  return out;
}

Eigen::MatrixXd haar_orthogonal(int dim, Rng& rng) {
  if (dim < 1) throw DomainError("haar_orthogonal needs dim >= 1");
  Eigen::MatrixXd g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Eigen::MatrixXd haar_orthogonal(int dim, std::uint64_t seed) {
  Rng rng(seed);
  return haar_orthogonal(dim, rng);
}

Frames draw_frames(int n, int big_n, Rng& rng) {
  Frames f;
  f.u = haar_orthogonal(n, rng);
  f.v = haar_orthogonal(big_n, rng);
  return f;
}

SampleSpectrum spectrum_from_factor(const Eigen::MatrixXd& m, bool keep_vectors) {
  SampleSpectrum out;
  out.n = static_cast<int>(m.rows());
  out.big_n = static_cast<int>(m.cols());
  const int r = std::min(out.n, out.big_n);
  out.eigenvalues.resize(static_cast<std::size_t>(r));
  if (keep_vectors) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw Error("SVD failed");
    const Eigen::VectorXd& s = svd.singularValues();
    for (int k = 0; k < r; ++k) out.eigenvalues[static_cast<std::size_t>(k)] = s(k) * s(k);
    out.xi = svd.matrixU();
    out.zeta = svd.matrixV();
    out.has_vectors = true;
    return out;
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
  if (out.n <= out.big_n) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("eigenvalue solver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  for (int k = 0; k < r; ++k) {
    out.eigenvalues[static_cast<std::size_t>(k)] = std::max(0.0, ev(r - 1 - k));
  }
  return out;
}

SampleSpectrum sample_spectrum(const SpectralModel& model, const EntryLaw& law,
                               std::uint64_t seed, bool rotated, bool keep_vectors,
                               const Frames* frames) {
  const int n = static_cast<int>(model.n);
  const int big_n = static_cast<int>(model.big_n);
  Rng rng(seed);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(big_n));
  Eigen::MatrixXd m(n, big_n);
  for (int j = 0; j < big_n; ++j) {
    for (int i = 0; i < n; ++i) m(i, j) = law.sample(rng) * inv_sqrt_n;
  }
  if (rotated) {
    Frames fresh;
    if (frames == nullptr) {
      fresh = draw_frames(n, big_n, rng);
      frames = &fresh;
    }
    if (frames->u.rows() != n || frames->v.rows() != big_n) {
      throw DomainError("rotation frames do not match the model dimensions");
    }
    Eigen::MatrixXd tmp = frames->u.transpose() * m;
    m.noalias() = tmp * frames->v;
  }
  const std::vector<double> sa = expand_atoms(model.pi_a, n);
  const std::vector<double> sb = expand_atoms(model.pi_b, big_n);
  for (int i = 0; i < n; ++i) m.row(i) *= std::sqrt(sa[static_cast<std::size_t>(i)]);
  for (int j = 0; j < big_n; ++j) m.col(j) *= std::sqrt(sb[static_cast<std::size_t>(j)]);

  SampleSpectrum out = spectrum_from_factor(m, keep_vectors);
  out.seed = seed;
  out.law_id = law.id();
  out.rotated = rotated;
  return out;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double rescale_stat(double lambda1, const EdgeReport& edge, long big_n) {
  return edge.gamma0 * std::pow(static_cast<double>(big_n), 2.0 / 3.0) *
         (lambda1 - edge.lambda_plus);
}

EnsembleBatch run_batch(const SpectralModel& model, const EntryLaw& law,
                        const EdgeReport& edge, const BatchConfig& cfg) {
  if (cfg.reps < 1) throw DomainError("run_batch needs reps >= 1");
  std::optional<Frames> fixed;
  if (cfg.rotated && !cfg.fresh_rotations) {
    Rng frame_rng(split_seed(cfg.master_seed, kFrameStream));
    fixed = draw_frames(static_cast<int>(model.n), static_cast<int>(model.big_n), frame_rng);
  }

  struct Slot {
    bool ok = false;
    double lambda1 = 0.0;
    std::string error;
    SampleSpectrum spectrum;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(cfg.reps));
  parallel_for(cfg.reps, cfg.threads, [&](int i) {
    Slot& slot = slots[static_cast<std::size_t>(i)];
    try {
      SampleSpectrum s = sample_spectrum(model, law, split_seed(cfg.master_seed, i),
                                         cfg.rotated, cfg.keep_vectors,
                                         fixed ? &*fixed : nullptr);
      slot.lambda1 = s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front();
      if (cfg.keep_spectra) slot.spectrum = std::move(s);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  EnsembleBatch batch;
  batch.model_hash = model.hash();
  batch.law = law.descriptor();
  batch.law_id = law.id();
  batch.reps = cfg.reps;
  batch.big_n = model.big_n;
  batch.master_seed = cfg.master_seed;
  batch.rotated = cfg.rotated;
  batch.fresh_rotations = cfg.fresh_rotations;
  batch.lambda_plus = edge.lambda_plus;
  batch.gamma0 = edge.gamma0;
  for (int i = 0; i < cfg.reps; ++i) {
    Slot& slot = slots[static_cast<std::size_t>(i)];
    const std::uint64_t seed = split_seed(cfg.master_seed, i);
    if (!slot.ok) {
      batch.failures.push_back({i, seed, slot.error});
      continue;
    }
    batch.replicas.push_back(i);
    batch.seeds.push_back(seed);
    batch.lambda1s.push_back(slot.lambda1);
    batch.rescaled.push_back(rescale_stat(slot.lambda1, edge, model.big_n));
    if (cfg.keep_spectra) batch.spectra.push_back(std::move(slot.spectrum));
  }
  if (batch.failures.size() * 100 > static_cast<std::size_t>(cfg.reps)) {
    std::string msg = "batch aborted: " + std::to_string(batch.failures.size()) + " of " +
                      std::to_string(cfg.reps) + " replicas failed; indices:";
    for (const BatchFailure& f : batch.failures) msg += " " + std::to_string(f.index);
    throw Error(msg + " (first error: " + batch.failures.front().message + ")");
  }
  return batch;
}

void write_batch_csv(const EnsembleBatch& batch, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path);
  os << "replica,seed,lambda1,rescaled\n" << std::setprecision(17);
  for (std::size_t k = 0; k < batch.lambda1s.size(); ++k) {
    os << batch.replicas[k] << ',' << batch.seeds[k] << ',' << batch.lambda1s[k] << ','
       << batch.rescaled[k] << '\n';
  }
}

nlohmann::json batch_metadata(const EnsembleBatch& batch, const EdgeReport& edge) {
  nlohmann::json j;
  j["model_hash"] = batch.model_hash;
  j["law"] = batch.law;
  j["reps"] = batch.reps;
  j["N"] = batch.big_n;
  j["master_seed"] = batch.master_seed;
  j["seed_rule"] = "split_seed(master, i) = mix64(mix64(master) + (i + 1) * 0x9E3779B97F4A7C15)";
  j["rotated"] = batch.rotated;
  j["fresh_rotations"] = batch.fresh_rotations;
  j["lambda_plus"] = edge.lambda_plus;
  j["gamma0"] = edge.gamma0;
  j["alpha_star"] = edge.alpha_star;
  j["m1c_edge"] = edge.m1c_edge;
  auto failures = nlohmann::json::array();
  for (const BatchFailure& f : batch.failures) {
    failures.push_back({{"index", f.index}, {"seed", f.seed}, {"error", f.message}});
  }
  j["failures"] = failures;
  return j;
}

void write_histogram_csv(const std::vector<double>& values, int bins, const std::string& path) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path);
  os << "bin_lo,bin_hi,count\n" << std::setprecision(17);
  if (values.empty()) return;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double width = (*mx > *mn ? *mx - *mn : 1.0) / bins;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  for (int b = 0; b < bins; ++b) {
    os << lo + b * width << ',' << lo + (b + 1) * width << ',' << counts[static_cast<std::size_t>(b)]
       << '\n';
  }
}

}  // namespace sepcov
