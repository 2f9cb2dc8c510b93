#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sepcov/edge_analysis.hpp"
#include "sepcov/entry_law.hpp"
#include "sepcov/rng.hpp"
#include "sepcov/spectral_model.hpp"

namespace sepcov {

/// Replica index reserved for the per-batch rotation stream.
inline constexpr std::uint64_t kFrameStream = ~std::uint64_t{0};

/// Diagonal of length `count` realizing the measure: atom multiplicities
/// by largest remainder, values descending.
std::vector<double> expand_atoms(const AtomicMeasure& measure, int count);

/// QR of a standard Gaussian matrix with the signs of diag(R) moved into Q.
Eigen::MatrixXd haar_orthogonal(int dim, Rng& rng);
Eigen::MatrixXd haar_orthogonal(int dim, std::uint64_t seed);

/// U (n x n) and V (N x N) with A = U Sigma U^T and B = V Sigma~ V^T.
struct Frames {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
};

Frames draw_frames(int n, int big_n, Rng& rng);

/// Spectrum of Q~1 = M M^T with M = Sigma^{1/2} U^T X V Sigma~^{1/2}.
struct SampleSpectrum {
  std::vector<double> eigenvalues;  // descending, min(n, N) values
  std::uint64_t seed = 0;
  std::string law_id;
  bool rotated = false;
  int n = 0;
  int big_n = 0;
  bool has_vectors = false;
  Eigen::MatrixXd xi;    // n x r left singular vectors of M
  Eigen::MatrixXd zeta;  // N x r right singular vectors of M
};

/// Spectrum of M M^T for a given factor M (n x N). Eigenvalues only: Gram
/// matrix eigenvalues. With vectors: thin SVD.
SampleSpectrum spectrum_from_factor(const Eigen::MatrixXd& m, bool keep_vectors);

/// X has entries q / sqrt(N) drawn column by column from Rng(seed). With
/// `rotated` and no `frames`, fresh frames are drawn from the same stream
/// after X.
SampleSpectrum sample_spectrum(const SpectralModel& model, const EntryLaw& law,
                               std::uint64_t seed, bool rotated, bool keep_vectors,
                               const Frames* frames = nullptr);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. fn must only
/// write state owned by index i.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

double rescale_stat(double lambda1, const EdgeReport& edge, long big_n);

struct BatchConfig {
  int reps = 1;
  std::uint64_t master_seed = 0;
  bool rotated = false;
  bool fresh_rotations = false;  // redraw U, V for every replica
  int threads = 1;
  bool keep_spectra = false;
  bool keep_vectors = false;
};

struct BatchFailure {
  int index = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct EnsembleBatch {
  std::string model_hash;
  nlohmann::json law;
  std::string law_id;
  int reps = 0;
  long big_n = 0;
  std::uint64_t master_seed = 0;
  bool rotated = false;
  bool fresh_rotations = false;
  double lambda_plus = 0.0;
  double gamma0 = 0.0;
  // Successful replicas, in index order.
  std::vector<int> replicas;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambda1s;
  std::vector<double> rescaled;
  std::vector<SampleSpectrum> spectra;  // filled when keep_spectra
  std::vector<BatchFailure> failures;
};

/// Replica i uses seed split_seed(master_seed, i). Fixed rotations come from
/// split_seed(master_seed, kFrameStream). Throws Error listing the failed
/// indices when fewer than 99% of replicas succeed.
EnsembleBatch run_batch(const SpectralModel& model, const EntryLaw& law,
                        const EdgeReport& edge, const BatchConfig& cfg);

/// CSV `replica,seed,lambda1,rescaled`.
void write_batch_csv(const EnsembleBatch& batch, const std::string& path);
nlohmann::json batch_metadata(const EnsembleBatch& batch, const EdgeReport& edge);

/// CSV `bin_lo,bin_hi,count` over [min, max] of the values.
void write_histogram_csv(const std::vector<double>& values, int bins, const std::string& path);

}  // namespace sepcov
