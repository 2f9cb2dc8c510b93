#include "sepcov/spectral_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

namespace sepcov {

namespace {

constexpr int kChebNodes = 17;

double real_axis_eta(const SpectralModel& model) {
  return 1e-10 * std::max(1.0, model.sigma1() * model.tilde_sigma1());
}

// Chebyshev coefficients of g sampled at the interior nodes
// t_k = cos(pi (k + 1/2) / m), k = 0..m-1. Endpoints are never sampled.
std::vector<double> cheb_coefficients(const std::vector<double>& samples) {
  const int m = static_cast<int>(samples.size());
  std::vector<double> c(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      s += samples[static_cast<std::size_t>(k)] * std::cos(std::numbers::pi * j * (k + 0.5) / m);
    }
    c[static_cast<std::size_t>(j)] = 2.0 * s / m;
  }
  c[0] *= 0.5;
  return c;
}

// Coefficients of the antiderivative vanishing at t = -1.
std::vector<double> cheb_integral(const std::vector<double>& c) {
  const std::size_t n = c.size();
  std::vector<double> b(n + 1, 0.0);
  auto coef = [&](std::size_t j) { return j < n ? c[j] : 0.0; };
  for (std::size_t j = 1; j <= n; ++j) {
    const double prev = (j == 1) ? 2.0 * coef(0) : coef(j - 1);
    b[j] = (prev - coef(j + 1)) / (2.0 * static_cast<double>(j));
  }
  double at_minus_one = 0.0;
  for (std::size_t j = 1; j <= n; ++j) at_minus_one += (j % 2 ? -1.0 : 1.0) * b[j];
  b[0] = -at_minus_one;
  return b;
}

double cheb_eval(const std::vector<double>& b, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = b.size(); j-- > 1;) {
    const double tmp = 2.0 * t * b1 - b2 + b[j];
    b2 = b1;
    b1 = tmp;
  }
  return t * b1 - b2 + b[0];
}

}  // namespace

double density_at(const SpectralModel& model, double e, DensityKind kind,
                  const SolverConfig& cfg) {
  const DysonSolution s = solve_at(model, ComplexPoint(e, real_axis_eta(model)), cfg);
  const cplx m = kind == DensityKind::c ? s.mc : (kind == DensityKind::one_c ? s.m1c : s.m2c);
  return std::max(0.0, m.imag() / std::numbers::pi);
}

SupportQuadrature::SupportQuadrature(const SpectralModel& model,
                                     std::vector<Interval> support, DensityKind kind,
                                     const SolverConfig& cfg, int panels_per_interval) {
  std::sort(support.begin(), support.end(),
            [](const Interval& x, const Interval& y) { return x.lo > y.lo; });
  for (const Interval& iv : support) {
    if (!(iv.hi > iv.lo)) continue;
    Piece piece;
    piece.iv = iv;
    for (int p = 0; p < panels_per_interval; ++p) {
      Panel panel;
      panel.t_lo = std::numbers::pi * p / panels_per_interval;
      panel.t_hi = std::numbers::pi * (p + 1) / panels_per_interval;
      const double mid = 0.5 * (panel.t_lo + panel.t_hi);
      const double half = 0.5 * (panel.t_hi - panel.t_lo);
      std::vector<double> samples(kChebNodes);
      for (int k = 0; k < kChebNodes; ++k) {
        const double t = mid + half * std::cos(std::numbers::pi * (k + 0.5) / kChebNodes);
        const double jac = 0.5 * (iv.hi - iv.lo) * std::sin(t);
        samples[static_cast<std::size_t>(k)] = density_at(model, e_of_t(iv, t), kind, cfg) * jac;
      }
      panel.antideriv = cheb_integral(cheb_coefficients(samples));
      panel.mass = half * cheb_eval(panel.antideriv, 1.0);
      piece.mass += panel.mass;
      piece.panels.push_back(std::move(panel));
    }
    total_ += piece.mass;
    pieces_.push_back(std::move(piece));
  }
}

double SupportQuadrature::e_of_t(const Interval& iv, double t) const {
  return iv.lo + 0.5 * (iv.hi - iv.lo) * (1.0 - std::cos(t));
}

double SupportQuadrature::t_of_e(const Interval& iv, double e) const {
  const double u = std::clamp(1.0 - 2.0 * (e - iv.lo) / (iv.hi - iv.lo), -1.0, 1.0);
  return std::acos(u);
}

double SupportQuadrature::panel_mass_from(const Panel& p, double t) const {
  const double mid = 0.5 * (p.t_lo + p.t_hi);
  const double half = 0.5 * (p.t_hi - p.t_lo);
  const double u = std::clamp((t - mid) / half, -1.0, 1.0);
  return half * (cheb_eval(p.antideriv, 1.0) - cheb_eval(p.antideriv, u));
}

double SupportQuadrature::mass_above(double e) const {
  double acc = 0.0;
  for (const Piece& piece : pieces_) {
    if (e <= piece.iv.lo) {
      acc += piece.mass;
      continue;
    }
    if (e >= piece.iv.hi) continue;
    const double t = t_of_e(piece.iv, e);
    for (const Panel& p : piece.panels) {
      if (p.t_lo >= t) {
        acc += p.mass;
      } else if (p.t_hi > t) {
        acc += panel_mass_from(p, t);
      }
    }
  }
  return acc;
}

double SupportQuadrature::point_with_mass_above(double mass) const {
  if (mass < 0.0 || mass > total_ * (1.0 + 1e-12)) {
    throw DomainError("requested mass " + std::to_string(mass) +
                      " exceeds the available mass " + std::to_string(total_));
  }
  double acc = 0.0;
  for (const Piece& piece : pieces_) {
    if (acc + piece.mass < mass) {
      acc += piece.mass;
      continue;
    }
    for (auto it = piece.panels.rbegin(); it != piece.panels.rend(); ++it) {
      if (acc + it->mass < mass && std::next(it) != piece.panels.rend()) {
        acc += it->mass;
        continue;
      }
      const double need = mass - acc;
      const Panel& p = *it;
      auto g = [&](double t) { return panel_mass_from(p, t) - need; };
      double lo = p.t_lo, hi = p.t_hi;
      if (g(lo) <= 0.0) return e_of_t(piece.iv, lo);
      if (g(hi) >= 0.0) return e_of_t(piece.iv, hi);
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(
          g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
      return e_of_t(piece.iv, 0.5 * (r.first + r.second));
    }
  }
  return pieces_.empty() ? 0.0 : pieces_.back().iv.lo;
}

}  // namespace sepcov
