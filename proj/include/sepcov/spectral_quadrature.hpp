#pragma once

#include <vector>

#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"

namespace sepcov {

enum class DensityKind { c, one_c, two_c };

/// Density Im m / pi on the real axis, evaluated at a tiny eta.
double density_at(const SpectralModel& model, double e, DensityKind kind,
                  const SolverConfig& cfg = {});

/// Cumulative quadrature of a limiting density over its support.
///
/// Each support interval [a, b] is mapped by E = a + (b - a)(1 - cos t)/2,
/// which removes square-root edges and inverse-square-root hard edges.
/// The integrand is sampled on Chebyshev panels in t and integrated as a
/// Chebyshev series, so partial masses and quantiles cost no further solves.
class SupportQuadrature {
 public:
  SupportQuadrature(const SpectralModel& model, std::vector<Interval> support,
                    DensityKind kind, const SolverConfig& cfg = {},
                    int panels_per_interval = 96);

  double total_mass() const noexcept { return total_; }
  /// Integral of the density over [e, inf).
  double mass_above(double e) const;
  /// Largest x with mass_above(x) = mass; mass in [0, total_mass()].
  double point_with_mass_above(double mass) const;

 private:
  struct Panel {
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<double> antideriv;  // Chebyshev coefficients of the integral
    double mass = 0.0;
  };
  struct Piece {
    Interval iv;
    std::vector<Panel> panels;  // ascending in t
    double mass = 0.0;
  };

  double panel_mass_from(const Panel& p, double t) const;  // integral over [t, t_hi]
  double e_of_t(const Interval& iv, double t) const;
  double t_of_e(const Interval& iv, double e) const;

  std::vector<Piece> pieces_;  // descending by interval
  double total_ = 0.0;
};

}  // namespace sepcov
