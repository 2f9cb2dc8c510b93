#include "sepcov/detection.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sepcov/edge_analysis.hpp"
#include "sepcov/ensemble.hpp"
#include "sepcov/errors.hpp"
#include "sepcov/model_io.hpp"
#include "sepcov/stats_tests.hpp"

namespace sepcov {

namespace {

Eigen::MatrixXd matrix_from_rows(const nlohmann::json& rows, long dim, const char* name) {
  if (!rows.is_array() || static_cast<long>(rows.size()) != dim) {
    throw DomainError(std::string(name) + " must be a " + std::to_string(dim) + " x " +
                      std::to_string(dim) + " array of rows");
  }
  Eigen::MatrixXd m(dim, dim);
  for (long i = 0; i < dim; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<long>(row.size()) != dim) {
      throw DomainError(std::string(name) + " row " + std::to_string(i) + " has the wrong length");
    }
    for (long j = 0; j < dim; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  const double err = (m.transpose() * m - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (err > 1e-8) throw DomainError(std::string(name) + " is not orthogonal");
  return m;
}

// A~^{-1/2} in the data's own orientation.
Eigen::MatrixXd inverse_sqrt(const AtomicMeasure& measure, long dim,
                             const std::optional<Eigen::MatrixXd>& frame) {
  const std::vector<double> diag = expand_atoms(measure, static_cast<int>(dim));
  Eigen::VectorXd d(dim);
  for (long i = 0; i < dim; ++i) {
    const double v = diag[static_cast<std::size_t>(i)];
    if (!(v > 0.0)) throw DomainError("singular null covariance: an atom is zero");
    d(i) = 1.0 / std::sqrt(v);
  }
  if (!frame) return d.asDiagonal();
  return *frame * d.asDiagonal() * frame->transpose();
}

}  // namespace

NullHypothesis null_from_json(const nlohmann::json& doc) {
  NullHypothesis h{model_from_json(doc), std::nullopt, std::nullopt};
  const long n = h.model.swapped ? h.model.big_n : h.model.n;
  const long big_n = h.model.swapped ? h.model.n : h.model.big_n;
  if (doc.contains("frame_a")) h.frame_a = matrix_from_rows(doc["frame_a"], n, "frame_a");
  if (doc.contains("frame_b")) h.frame_b = matrix_from_rows(doc["frame_b"], big_n, "frame_b");
  return h;
}

NullHypothesis load_null_hypothesis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read null model " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("invalid null model " + path.string() + ": " + e.what());
  }
  return null_from_json(doc);
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read data file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_decimal(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DomainError("data file " + path.string() + ": row " + std::to_string(rows.size() + 1) +
                        " has " + std::to_string(row.size()) + " columns, expected " +
                        std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DomainError("data file " + path.string() + " is empty");
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
    }
  }
  return m;
}

DetectionReport detect_signal(const Eigen::MatrixXd& data, const NullHypothesis& null,
                              const DetectionConfig& cfg) {
  const SpectralModel& model = null.model;
  const long n = model.swapped ? model.big_n : model.n;
  const long big_n = model.swapped ? model.n : model.big_n;
  if (data.rows() != n || data.cols() != big_n) {
    throw DomainError("data is " + std::to_string(data.rows()) + " x " +
                      std::to_string(data.cols()) + " but the null model is " +
                      std::to_string(n) + " x " + std::to_string(big_n));
  }
  if (cfg.reps < 0) throw DomainError("reps must be >= 0");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw DomainError("level must lie in (0, 1)");
  const AtomicMeasure& spatial = model.swapped ? model.pi_b : model.pi_a;
  const AtomicMeasure& temporal = model.swapped ? model.pi_a : model.pi_b;

  Eigen::MatrixXd w = inverse_sqrt(spatial, n, null.frame_a) * data *
                      inverse_sqrt(temporal, big_n, null.frame_b);
  DetectionReport r;
  r.transposed = n > big_n;
  if (r.transposed) w.transposeInPlace();
  r.rows = w.rows();
  r.cols = w.cols();
  w /= std::sqrt(static_cast<double>(r.cols));
  const SampleSpectrum spec = spectrum_from_factor(w, false);
  r.lambda1 = spec.eigenvalues.front();

  const SpectralModel identity = build_model({{1.0, 1.0}}, {{1.0, 1.0}}, r.rows, r.cols);
  const EdgeReport edge = find_rightmost_edge(identity, 0.1);
  r.lambda_plus = edge.lambda_plus;
  r.gamma0 = edge.gamma0;
  r.statistic = rescale_stat(r.lambda1, edge, r.cols);
  r.p_value_tw1 = 1.0 - tw1_cdf(r.statistic);
  r.level = cfg.level;
  r.reps = cfg.reps;
  if (cfg.reps == 0) {
    r.approximate = true;
    r.reject = r.p_value_tw1 <= cfg.level;
    return r;
  }
  BatchConfig bc;
  bc.reps = cfg.reps;
  bc.master_seed = cfg.seed;
  bc.threads = cfg.threads;
  const EnsembleBatch batch =
      run_batch(identity, make_entry_law(LawKind::gaussian), edge, bc);
  for (double t : batch.rescaled) r.exceedances += t >= r.statistic ? 1 : 0;
  // Failed calibration replicas count as exceedances, which keeps the
  // p-value conservative.
  r.exceedances += static_cast<int>(batch.failures.size());
  r.p_value_mc = (1.0 + r.exceedances) / (cfg.reps + 1.0);
  r.reject = *r.p_value_mc <= cfg.level;
  return r;
}

nlohmann::json detection_report_to_json(const DetectionReport& r) {
  nlohmann::json j;
  j["statistic"] = r.statistic;
  j["lambda1"] = r.lambda1;
  j["lambda_plus"] = r.lambda_plus;
  j["gamma0"] = r.gamma0;
  j["rows"] = r.rows;
  j["cols"] = r.cols;
  j["transposed"] = r.transposed;
  j["p_value_mc"] = r.p_value_mc ? nlohmann::json(*r.p_value_mc) : nlohmann::json(nullptr);
  j["p_value_tw1"] = r.p_value_tw1;
  j["reps"] = r.reps;
  j["exceedances"] = r.exceedances;
  j["approximate"] = r.approximate;
  j["level"] = r.level;
  j["reject"] = r.reject;
  return j;
}

}  // namespace sepcov
