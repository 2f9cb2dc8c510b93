#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "sepcov/spectral_model.hpp"

namespace sepcov {

/// Known null covariances A~ = U diag(a) U^T and B~ = V diag(b) V^T. The
/// diagonals expand the model's atoms in descending order; absent frames
/// mean the identity. Dimensions are those of the data (n x N), before any
/// role swap of the model.
struct NullHypothesis {
  SpectralModel model;
  std::optional<Eigen::MatrixXd> frame_a;
  std::optional<Eigen::MatrixXd> frame_b;
};

/// Model document plus optional "frame_a" / "frame_b" given as arrays of rows.
NullHypothesis null_from_json(const nlohmann::json& doc);
NullHypothesis load_null_hypothesis(const std::filesystem::path& path);

/// n rows of N comma-separated reals, no header.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

struct DetectionConfig {
  int reps = 999;
  std::uint64_t seed = 0;
  double level = 0.05;
  int threads = 1;
};

struct DetectionReport {
  double statistic = 0.0;  // gamma0 N^{2/3} (lambda1 - lambda_+) of the whitened data
  double lambda1 = 0.0;
  double lambda_plus = 0.0;
  double gamma0 = 0.0;
  long rows = 0;  // dimensions after orienting rows <= columns
  long cols = 0;
  bool transposed = false;
  std::optional<double> p_value_mc;
  double p_value_tw1 = 1.0;
  int reps = 0;
  int exceedances = 0;  // null statistics >= T
  bool approximate = false;  // no calibration reps; decision from the TW1 table
  double level = 0.05;
  bool reject = false;
};

/// Raw observations Y = A~^{1/2} Z B~^{1/2} with i.i.d. unit-variance Z.
/// Whitens W = A~^{-1/2} Y B~^{-1/2}, takes lambda1 of W W^T / N (after
/// transposing when n > N), rescales with the identity-covariance edge and
/// calibrates against `reps` Gaussian null draws.
DetectionReport detect_signal(const Eigen::MatrixXd& data, const NullHypothesis& null,
                              const DetectionConfig& cfg);

nlohmann::json detection_report_to_json(const DetectionReport& r);

}  // namespace sepcov
