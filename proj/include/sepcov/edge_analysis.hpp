#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepcov/dyson_solver.hpp"
#include "sepcov/spectral_model.hpp"

namespace sepcov {

/// f(x, alpha) and the derivatives used by the edge equations, evaluated by
/// closed-form atomic sums for real x > 0 and real alpha.
struct FDerivatives {
  double f = 0.0;
  double df_dalpha = 0.0;
  double df_dz = 0.0;
  double d2f_dalpha2 = 0.0;
};

/// Throws SingularKernelError on a pole collision (1 + t*alpha = 0 for an A
/// atom t, or x = s*d*K_A(alpha) for a B atom s).
FDerivatives f_and_derivatives(const SpectralModel& model, double x, double alpha);

/// Real root x of f(x, alpha) = 0 inside [lo, hi]. Bisection-safeguarded
/// Newton in x. Throws BracketError when f does not change sign.
double z_of_alpha(const SpectralModel& model, double alpha,
                  std::pair<double, double> bracket);

/// The root on the branch right of every B pole, defined for alpha in
/// (-1/sigma_1, 0). This branch carries the rightmost edge.
double z_of_alpha_outer(const SpectralModel& model, double alpha);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CriticalPoint {
  double alpha = 0.0;
  double x = 0.0;
  bool paired = false;
};

struct SupportResult {
  std::vector<Interval> intervals;  // sorted ascending, disjoint
  std::vector<CriticalPoint> critical_points;
  bool partial = false;  // some branch could not be enumerated
};

/// I1, I2, I3, J1, J2, J3 at the rightmost edge. All three I_k carry the
/// factor d, so gamma_0 matches the N^{2/3} scaling.
struct EdgeIntegrals {
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;
  double j1 = 0.0, j2 = 0.0, j3 = 0.0;
};

struct EdgeReport {
  double lambda_plus = 0.0;
  double alpha_star = 0.0;  // m2c(lambda_plus)
  double m1c_edge = 0.0;    // m1c(lambda_plus)
  double gamma0 = 0.0;
  double sqrt_coeff_2c = 0.0;  // rho_2c(lambda_+ - x) ~ a2 sqrt(x)
  double sqrt_coeff_1c = 0.0;  // I2 * a2
  double sqrt_coeff_c = 0.0;   // (I1 / d) * a2
  std::vector<Interval> support;
  std::vector<CriticalPoint> critical_points;
  bool support_partial = false;
  double gap_margin_a = 0.0;  // min_i 1 + alpha_star * sigma_i
  double gap_margin_b = 0.0;  // min_mu 1 + m1c_edge * tilde sigma_mu
  EdgeIntegrals ik_jk;
  double df_dz = 0.0;
  double d2f_dalpha2 = 0.0;
  double f_residual = 0.0;
  double df_dalpha_residual = 0.0;
  double tau = 0.0;
  bool regular = false;       // both gap margins >= tau
  bool structure_ok = false;  // validate_structure passed
  std::string model_hash;
};

/// Locates lambda_+ as the critical value of z(alpha) closest to alpha = 0 on
/// (-1/sigma_1, 0), then fills the edge constants and the support. A
/// non-regular edge is flagged, not rejected. Throws EdgeSearchError when no
/// critical point exists on the branch.
EdgeReport find_rightmost_edge(const SpectralModel& model, double tau,
                               const SolverConfig& cfg = {});

/// Enumerates critical points on every branch and classifies the gaps
/// between consecutive candidate edges by the density at their midpoints.
/// Exact for the rightmost interval only.
SupportResult find_support(const SpectralModel& model, const SolverConfig& cfg = {});

/// gamma_0 from I_k, J_k. Also stores the integrals in `edge`.
double scaling_constant(const SpectralModel& model, EdgeReport& edge);

/// a2 = (1/pi) sqrt(2 df_dz / (-d2f_dalpha2)) at the edge.
double sqrt_coefficient(const SpectralModel& model, const EdgeReport& edge);

struct ClassicalLocations {
  std::vector<double> gammas;  // gammas[j-1] = gamma_j
  int j_max = 0;
};

/// gamma_j = sup{x : int_x^inf rho_c > (j-1)/n} for j = 1..j_max.
ClassicalLocations classical_locations(const SpectralModel& model,
                                       const EdgeReport& edge, int j_max,
                                       const SolverConfig& cfg = {});

/// n_c(E) = int_E^inf rho_2c over the continuous part on (0, inf).
double counting_function(const SpectralModel& model, const EdgeReport& edge, double e,
                         const SolverConfig& cfg = {});

nlohmann::json edge_report_to_json(const EdgeReport& edge);

}  // namespace sepcov
