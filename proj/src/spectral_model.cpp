#include "sepcov/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepcov/model_io.hpp"

namespace sepcov {

AtomicMeasure AtomicMeasure::from_atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("atomic measure needs at least one atom");
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.weight)) {
      throw DomainError("atom values and weights must be finite");
    }
    if (a.value < 0.0) {
      throw DomainError("negative atom value " + std::to_string(a.value));
    }
    if (a.weight <= 0.0) {
      throw DomainError("non-positive atom weight " + std::to_string(a.weight));
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& x, const Atom& y) { return x.value > y.value; });

  AtomicMeasure out;
  for (const Atom& a : atoms) {
    if (!out.atoms_.empty() && out.atoms_.back().value == a.value) {
      out.atoms_.back().weight += a.weight;
    } else {
      out.atoms_.push_back(a);
    }
  }
  const double total = std::accumulate(
      out.atoms_.begin(), out.atoms_.end(), 0.0,
      [](double s, const Atom& a) { return s + a.weight; });
  if (!(total > 0.0)) throw DomainError("zero total weight");
  for (Atom& a : out.atoms_) a.weight /= total;
  return out;
}

double AtomicMeasure::mean() const noexcept {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight * a.value;
  return s;
}

double AtomicMeasure::mass_at_most(double tau) const noexcept {
  double s = 0.0;
  for (const Atom& a : atoms_) {
    if (a.value <= tau) s += a.weight;
  }
  return s;
}

std::string SpectralModel::hash() const {
  const std::string canonical = model_to_json(*this, /*include_meta=*/false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

SpectralModel build_model(std::vector<Atom> atoms_a, std::vector<Atom> atoms_b,
                          long n, long big_n) {
  if (n < 1 || big_n < 1) throw DomainError("dimensions n and N must be >= 1");
  SpectralModel m;
  m.pi_a = AtomicMeasure::from_atoms(std::move(atoms_a));
  m.pi_b = AtomicMeasure::from_atoms(std::move(atoms_b));
  m.n = n;
  m.big_n = big_n;
  if (n > big_n) {
    std::swap(m.pi_a, m.pi_b);
    std::swap(m.n, m.big_n);
    m.swapped = true;
  }
  m.d = static_cast<double>(m.n) / static_cast<double>(m.big_n);
  return m;
}

ComplexPoint::ComplexPoint(double e_, double eta_) : e(e_), eta(eta_) {
  if (!(eta_ > 0.0)) throw DomainError("spectral point needs eta > 0");
}

double ComplexPoint::kappa(double lambda_plus) const noexcept {
  return std::abs(e - lambda_plus);
}

cplx kernel_integral(const AtomicMeasure& measure, cplx alpha) {
  return kernel_moment(measure, alpha, 1);
}

bool ValidationReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

ValidationReport validate_structure(const SpectralModel& model, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
  ValidationReport r;
  r.tau = tau;
  auto add = [&](std::string name, double measured, double bound, bool ok) {
    r.checks.push_back({std::move(name), ok, measured, bound});
  };
  add("max_atom_a", model.sigma1(), 1.0 / tau, model.sigma1() <= 1.0 / tau);
  add("max_atom_b", model.tilde_sigma1(), 1.0 / tau,
      model.tilde_sigma1() <= 1.0 / tau);
  const double low_a = model.pi_a.mass_at_most(tau);
  const double low_b = model.pi_b.mass_at_most(tau);
  add("low_mass_a", low_a, 1.0 - tau, low_a <= 1.0 - tau);
  add("low_mass_b", low_b, 1.0 - tau, low_b <= 1.0 - tau);
  add("ratio_d", model.d, tau, model.d >= tau && model.d <= 1.0);
  return r;
}

}  // namespace sepcov
