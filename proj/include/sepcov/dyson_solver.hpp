#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepcov/spectral_model.hpp"

namespace sepcov {

struct SolverConfig {
  double tol = 1e-12;        // relative residual
  int max_iter = 10000;      // fixed-point iterations at the starting level
  double damping = 1.0;      // initial fixed-point damping, in (0, 1]
  /// Descending eta ladder used for warm starts. Empty means a geometric
  /// ladder (ratio 1/2) from the starting level down to the target.
  std::vector<double> continuation_etas;

  void validate() const;
};

/// Solution (m1c, m2c, mc) of the coupled self-consistent equations at z.
struct DysonSolution {
  ComplexPoint z;
  cplx m1c;
  cplx m2c;
  cplx mc;
  int iterations = 0;
  double residual = 0.0;
};

/// Right-hand sides of the pair equations.
cplx m1c_from_m2c(const SpectralModel& model, cplx z, cplx m2c);
cplx m2c_from_m1c(const SpectralModel& model, cplx z, cplx m1c);
cplx mc_from_m2c(const SpectralModel& model, cplx z, cplx m2c);

/// max of the two relative equation residuals at (m1c, m2c).
double pair_residual(const SpectralModel& model, cplx z, cplx m1c, cplx m2c);

/// Solves for the unique upper-half-plane solution at z.
///
/// A damped Gauss-Seidel fixed point is run at a large starting eta, then
/// the solution is carried down the eta ladder by Newton steps on the
/// scalar equation f(z, alpha) = 0 with alpha = m2c. A Newton iterate is
/// accepted only if it stays in the upper half plane, which by uniqueness
/// identifies the Stieltjes branch. Failed rungs are bisected.
///
/// Throws DomainError for eta <= 0 and ConvergenceError when the smallest
/// rung cannot be brought under tolerance.
DysonSolution solve_at(const SpectralModel& model, ComplexPoint z,
                       const SolverConfig& cfg = {});

/// Newton refinement from a nearby guess for m2c; std::nullopt when Newton
/// fails or leaves the upper half plane.
std::optional<DysonSolution> refine_from(const SpectralModel& model, ComplexPoint z,
                                         cplx m2c_guess, const SolverConfig& cfg = {});

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> rho_c;
  std::vector<double> rho_1c;
  std::vector<double> rho_2c;
  double eta_used = 0.0;
  /// Grid indices whose solve failed, with the error message. Their density
  /// entries are NaN.
  std::vector<std::pair<std::size_t, std::string>> failures;
};

/// Densities Im m / pi on a uniform grid at fixed eta, sweeping left to right
/// with warm starts from the previous grid point.
DensityCurve density_grid(const SpectralModel& model, double e_min, double e_max,
                          double eta, int points, const SolverConfig& cfg = {});

/// Per-atom solution of the vector Dyson equation 1/v = -z + S 1/(1 + S^T v).
struct VectorDysonSolution {
  std::vector<cplx> v;  // one entry per atom of pi_A
  cplx m1c;
  cplx m2c;
  cplx mc;
  int iterations = 0;
};

/// Independent route: Newton on the per-atom vector equation with its own
/// eta continuation.
VectorDysonSolution solve_vector_dyson(const SpectralModel& model, ComplexPoint z,
                                       const SolverConfig& cfg = {});

/// Max discrepancy of (m1c, m2c, mc) between the vector route and solve_at.
double vector_dyson_check(const SpectralModel& model, ComplexPoint z,
                          const SolverConfig& cfg = {});

}  // namespace sepcov
