#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sepcov/errors.hpp"

namespace sepcov {

using cplx = std::complex<double>;

/// Threshold on |1 + t*alpha| below which a kernel sum is rejected.
inline constexpr double kPoleThreshold = 1e-14;

struct Atom {
  double value = 0.0;
  double weight = 0.0;
};

/// Finite atomic probability measure on [0, inf).
///
/// Atoms are kept sorted by value in descending order, exact duplicates are
/// merged and weights are normalized to sum to one.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  /// Validates, merges, sorts and normalizes. Throws DomainError on an empty
  /// list, a negative value, a non-positive weight or a non-finite entry.
  static AtomicMeasure from_atoms(std::vector<Atom> atoms);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double max_atom() const noexcept { return atoms_.front().value; }
  double min_atom() const noexcept { return atoms_.back().value; }
  double mean() const noexcept;
  /// Mass of the closed interval [0, tau].
  double mass_at_most(double tau) const noexcept;

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// Spectral data of the separable model: the ESDs of A and B together with
/// the dimensions n (rows of X) and N (columns of X).
struct SpectralModel {
  AtomicMeasure pi_a;
  AtomicMeasure pi_b;
  long n = 0;
  long big_n = 0;
  double d = 0.0;        // n / N, in (0, 1]
  bool swapped = false;  // A/B and n/N were exchanged because n > N

  double sigma1() const noexcept { return pi_a.max_atom(); }
  double tilde_sigma1() const noexcept { return pi_b.max_atom(); }

  /// 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;
};

/// Builds a model. When n > N the roles of A and B are swapped so that
/// d = n/N <= 1 always holds; `swapped` records that this happened.
SpectralModel build_model(std::vector<Atom> atoms_a, std::vector<Atom> atoms_b,
                          long n, long big_n);

/// Spectral point z = E + i*eta with eta > 0.
struct ComplexPoint {
  double e = 0.0;
  double eta = 1.0;

  ComplexPoint() = default;
  ComplexPoint(double e_, double eta_);

  cplx z() const noexcept { return {e, eta}; }
  double kappa(double lambda_plus) const noexcept;
};

/// Sum over atoms of w * t^power / (1 + t*alpha)^power.
///
/// Works for real or complex alpha. Throws SingularKernelError if some
/// |1 + t*alpha| is below kPoleThreshold.
template <class T>
T kernel_moment(const AtomicMeasure& measure, T alpha, int power) {
  T acc{0};
  for (const Atom& a : measure.atoms()) {
    if (a.value == 0.0) continue;
    const T denom = T{1} + a.value * alpha;
    if (std::abs(denom) < kPoleThreshold) {
      throw SingularKernelError("pole collision at atom " + std::to_string(a.value),
                                a.value);
    }
    T ratio = a.value / denom;
    T term = ratio;
    for (int k = 1; k < power; ++k) term *= ratio;
    acc += a.weight * term;
  }
  return acc;
}

/// Integral of t / (1 + t*alpha) against the measure.
cplx kernel_integral(const AtomicMeasure& measure, cplx alpha);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct ValidationReport {
  double tau = 0.0;
  std::vector<ValidationCheck> checks;

  bool passed() const noexcept;
};

/// Structural assumptions: bounded spectra, no concentration at zero,
/// tau <= d <= 1. Never throws for a valid tau.
ValidationReport validate_structure(const SpectralModel& model, double tau);

}  // namespace sepcov
