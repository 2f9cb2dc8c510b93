#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "sepcov/rng.hpp"

namespace sepcov {

enum class LawKind { gaussian, symmetric_bernoulli, heavy_tail, truncated };

std::string to_string(LawKind kind);
/// Accepts the canonical names plus the short forms "bernoulli" and "heavy".
LawKind parse_law_kind(const std::string& name);

struct Truncation;

struct LawMoments {
  double mean = 0.0;
  double variance = 1.0;
  double third = 0.0;
  double fourth = 3.0;  // +inf when the fourth moment diverges
  bool finite_fourth = true;
};

/// Law of a standardized entry q (mean 0, variance 1). Entries of X are
/// q / sqrt(N).
class EntryLaw {
 public:
  LawKind kind() const noexcept { return kind_; }
  const LawMoments& moments() const noexcept { return moments_; }

  double sample(Rng& rng) const;

  /// P(|q| > s) for s >= 0.
  double tail(double s) const;
  /// E[q^2 ; |q| > s].
  double tail_second_moment(double s) const;
  /// E[q ; q > s] for s >= 0.
  double upper_tail_mean(double s) const;
  /// E[q ; q < -s] for s >= 0.
  double lower_tail_mean(double s) const;
  /// E[q^4 ; |q| <= s]; finite for every law and every s.
  double body_fourth_moment(double s) const;

  /// Short identifier, e.g. "heavy_tail(c=1)".
  std::string id() const;
  /// Everything needed to rebuild the law exactly.
  nlohmann::json descriptor() const;

  // heavy_tail: raw |r| has P(|r| > s) = min(1, c / (s^4 log^p(e + s))),
  // and q = r / scale with scale^2 = E r^2. The fourth moment is finite
  // exactly when p > 1.
  double heavy_c() const noexcept { return heavy_c_; }
  double heavy_log_power() const noexcept { return heavy_p_; }
  double heavy_scale() const noexcept { return scale_; }

  // truncated
  const EntryLaw* base() const noexcept { return base_.get(); }
  double epsilon() const noexcept { return epsilon_; }
  long big_n() const noexcept { return big_n_; }
  double cutoff() const noexcept { return cutoff_; }
  double alpha_n() const noexcept { return alpha_n_; }
  double beta_n() const noexcept { return beta_n_; }
  double shift() const noexcept { return shift_; }
  /// Variance of the shifted conditioned law before rescaling to 1.
  double raw_variance() const noexcept { return raw_variance_; }

 private:
  friend EntryLaw make_entry_law(LawKind, const nlohmann::json&);
  friend Truncation truncate_law(const EntryLaw&, double, long);

  double heavy_raw_tail(double s) const;
  double heavy_raw_inverse_tail(double u) const;

  LawKind kind_ = LawKind::gaussian;
  LawMoments moments_;
  double heavy_c_ = 1.0;
  double heavy_p_ = 2.0;
  double scale_ = 1.0;
  double heavy_s0_ = 0.0;  // raw |r| >= s0 almost surely
  std::shared_ptr<const EntryLaw> base_;
  double epsilon_ = 0.0;
  long big_n_ = 0;
  double cutoff_ = 0.0;
  double alpha_n_ = 0.0;
  double beta_n_ = 0.0;
  double shift_ = 0.0;
  double raw_variance_ = 1.0;
};

/// Params: heavy_tail takes {"c": real > 0, "log_power": real > 0}
/// (defaults 1 and 2). truncated takes
/// {"base": descriptor or kind name, "epsilon": real, "N": integer}.
EntryLaw make_entry_law(LawKind kind, const nlohmann::json& params = nlohmann::json::object());

/// Rebuilds a law from descriptor().
EntryLaw law_from_descriptor(const nlohmann::json& descriptor);

struct Truncation {
  EntryLaw law;
  double alpha_n = 0.0;
  double beta_n = 0.0;
};

/// Cutoff at N^{1/2 - epsilon}: the base conditioned on |q| <= cutoff,
/// shifted by beta_N / (1 - alpha_N) to mean zero and rescaled to unit
/// variance. Requires 0 < epsilon < 1/2 and a non-truncated base.
Truncation truncate_law(const EntryLaw& base, double epsilon, long big_n);

}  // namespace sepcov
