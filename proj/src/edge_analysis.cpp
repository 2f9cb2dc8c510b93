#include "sepcov/edge_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "sepcov/spectral_quadrature.hpp"

namespace sepcov {

namespace {

constexpr int kScanPoints = 512;

struct KernelSums {
  double k1, k2, k3;
};

KernelSums a_sums(const SpectralModel& model, double alpha) {
  return {kernel_moment(model.pi_a, alpha, 1), kernel_moment(model.pi_a, alpha, 2),
          kernel_moment(model.pi_a, alpha, 3)};
}

// Root of a monotone function in [lo, hi]: Newton steps, falling back to
// bisection whenever a step leaves the bracket.
template <class F>
double safeguarded_newton(F&& fd, double lo, double hi) {
  auto [flo, dlo] = fd(lo);
  auto [fhi, dhi] = fd(hi);
  (void)dlo;
  (void)dhi;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw BracketError("no sign change on bracket");
  }
  if (flo > 0.0) std::swap(lo, hi);  // keep f(lo) < 0
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    auto [fx, dx] = fd(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) lo = x; else hi = x;
    double next = x - fx / dx;
    const double a = std::min(lo, hi), b = std::max(lo, hi);
    if (!(dx != 0.0) || !(next > a && next < b)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      return next;
    }
    x = next;
  }
  return x;
}

// x-roots of f(x, alpha) = 0: h(x) = sum w s / (s c - x) = alpha with
// c = d K_A(alpha). h increases between consecutive poles s c.
struct RootFamilies {
  std::vector<double> poles;  // ascending, one per positive B atom
  double c = 0.0;
};

RootFamilies families_at(const SpectralModel& model, double alpha) {
  RootFamilies rf;
  rf.c = model.d * kernel_moment(model.pi_a, alpha, 1);
  for (const Atom& a : model.pi_b.atoms()) {
    if (a.value > 0.0) rf.poles.push_back(a.value * rf.c);
  }
  std::sort(rf.poles.begin(), rf.poles.end());
  return rf;
}

// Root in family k: k = 0 is left of every pole, k = poles.size() right of
// every pole. Returns NaN when the family has no root at this alpha.
double family_root(const SpectralModel& model, double alpha, const RootFamilies& rf,
                   std::size_t k) {
  const std::size_t p = rf.poles.size();
  if (p == 0 || rf.c == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double mean_b = model.pi_b.mean();
  double lo, hi;
  if (k == p) {
    if (!(alpha < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    lo = rf.poles.back();
    hi = lo + 2.0 * mean_b / std::abs(alpha) + 1e-300;
  } else if (k == 0) {
    if (!(alpha > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    hi = rf.poles.front();
    lo = hi - 2.0 * mean_b / alpha;
  } else {
    lo = rf.poles[k - 1];
    hi = rf.poles[k];
  }
  const double width = hi - lo;
  // Step off the poles.
  if (k != 0) lo += std::max(width, std::abs(lo)) * 1e-14;
  if (k != p) hi -= std::max(width, std::abs(hi)) * 1e-14;
  auto fd = [&](double x) {
    double h = 0.0, dh = 0.0;
    for (const Atom& a : model.pi_b.atoms()) {
      if (a.value == 0.0) continue;
      const double den = a.value * rf.c - x;
      h += a.weight * a.value / den;
      dh += a.weight * a.value / (den * den);
    }
    return std::pair<double, double>{h - alpha, dh};
  };
  try {
    return safeguarded_newton(fd, lo, hi);
  } catch (const BracketError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double outer_root(const SpectralModel& model, double alpha) {
  const RootFamilies rf = families_at(model, alpha);
  return family_root(model, alpha, rf, rf.poles.size());
}

// Scan parameter u in [0, 1] mapped to alpha in (lo, hi) with cosine
// clustering at both ends and a relative standoff from the poles.
double scan_alpha(double lo, double hi, int i, int count) {
  const double u = 0.5 * (1.0 - std::cos(std::numbers::pi * (i + 0.5) / count));
  const double standoff = 1e-9;
  const double s = standoff + (1.0 - 2.0 * standoff) * u;
  return lo + (hi - lo) * s;
}

struct BranchScan {
  double lo, hi;
  bool infinite_left;
};

std::vector<BranchScan> alpha_branches(const SpectralModel& model) {
  std::vector<double> poles;
  for (const Atom& a : model.pi_a.atoms()) {
    if (a.value > 0.0) poles.push_back(-1.0 / a.value);
  }
  std::sort(poles.begin(), poles.end());
  std::vector<BranchScan> out;
  if (poles.empty()) return out;
  // (-inf, first pole): mapped onto a finite window of width 1e4 * |pole|.
  out.push_back({poles.front() - 1e4 * std::abs(poles.front()), poles.front(), true});
  for (std::size_t i = 0; i + 1 < poles.size(); ++i) {
    out.push_back({poles[i], poles[i + 1], false});
  }
  out.push_back({poles.back(), 0.0, false});
  return out;
}

double df_dalpha_on_family(const SpectralModel& model, double alpha, std::size_t k,
                           double* x_out) {
  const RootFamilies rf = families_at(model, alpha);
  if (k > rf.poles.size()) return std::numeric_limits<double>::quiet_NaN();
  const double x = family_root(model, alpha, rf, k);
  if (x_out) *x_out = x;
  if (!std::isfinite(x) || x == 0.0) return std::numeric_limits<double>::quiet_NaN();
  try {
    return f_and_derivatives(model, x, alpha).df_dalpha;
  } catch (const SingularKernelError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

CriticalPoint refine_critical(const SpectralModel& model, std::size_t k, double a,
                              double b) {
  auto g = [&](double alpha) { return df_dalpha_on_family(model, alpha, k, nullptr); };
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(
      g, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
  CriticalPoint cp;
  const double ga = g(r.first), gb = g(r.second);
  cp.alpha = std::abs(ga) <= std::abs(gb) ? r.first : r.second;
  df_dalpha_on_family(model, cp.alpha, k, &cp.x);
  return cp;
}

struct RightmostEdge {
  double lambda_plus;
  double alpha_star;
};

RightmostEdge locate_rightmost(const SpectralModel& model) {
  if (!(model.sigma1() > 0.0) || !(model.tilde_sigma1() > 0.0)) {
    throw EdgeSearchError("degenerate model: all atoms of A or B are zero");
  }
  const double lo = -1.0 / model.sigma1();
  const double hi = 0.0;
  auto dfa = [&](double alpha) {
    const double x = outer_root(model, alpha);
    if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
    return f_and_derivatives(model, x, alpha).df_dalpha;
  };
  // Walk from alpha ~ 0 (where df/dalpha ~ -1) toward the pole.
  double prev_alpha = scan_alpha(lo, hi, kScanPoints - 1, kScanPoints);
  double prev = dfa(prev_alpha);
  std::ostringstream trail;
  for (int i = kScanPoints - 2; i >= 0; --i) {
    const double alpha = scan_alpha(lo, hi, i, kScanPoints);
    const double val = dfa(alpha);
    if (i % 64 == 0) trail << " (" << alpha << ", " << val << ")";
    if (std::isfinite(val) && std::isfinite(prev) && prev < 0.0 && val >= 0.0) {
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(
          dfa, alpha, prev_alpha, boost::math::tools::eps_tolerance<double>(52), iters);
      const double a1 = r.first, a2 = r.second;
      const double alpha_star = std::abs(dfa(a1)) <= std::abs(dfa(a2)) ? a1 : a2;
      return {outer_root(model, alpha_star), alpha_star};
    }
    prev = val;
    prev_alpha = alpha;
  }
  throw EdgeSearchError("no critical point of z(alpha) on (-1/sigma_1, 0); scan:" +
                        trail.str());
}

}  // namespace

FDerivatives f_and_derivatives(const SpectralModel& model, double x, double alpha) {
  if (x == 0.0) throw DomainError("f(x, alpha) is undefined at x = 0");
  const KernelSums ks = a_sums(model, alpha);
  const double d = model.d;
  const double g = -d * ks.k1 / x;
  const double dg = d * ks.k2 / x;
  const double d2g = -2.0 * d * ks.k3 / x;
  FDerivatives out;
  out.f = -alpha;
  out.df_dalpha = -1.0;
  for (const Atom& a : model.pi_b.atoms()) {
    if (a.value == 0.0) continue;
    const double s = a.value;
    const double u = 1.0 + s * g;
    if (std::abs(u) < kPoleThreshold) {
      throw SingularKernelError("pole collision in f at B atom " + std::to_string(s), s);
    }
    out.f += a.weight * s / (-x * u);
    out.df_dz += a.weight * s / (x * x * u * u);
    out.df_dalpha += a.weight * s * s * dg / (x * u * u);
    out.d2f_dalpha2 += a.weight * (-2.0 * s * s * s * dg * dg / (x * u * u * u) +
                                   s * s * d2g / (x * u * u));
  }
  return out;
}

double z_of_alpha(const SpectralModel& model, double alpha,
                  std::pair<double, double> bracket) {
  auto fd = [&](double x) {
    const FDerivatives fx = f_and_derivatives(model, x, alpha);
    return std::pair<double, double>{fx.f, fx.df_dz};
  };
  return safeguarded_newton(fd, bracket.first, bracket.second);
}

double z_of_alpha_outer(const SpectralModel& model, double alpha) {
  if (!(alpha < 0.0 && alpha > -1.0 / model.sigma1())) {
    throw DomainError("outer branch needs alpha in (-1/sigma_1, 0)");
  }
  const double x = outer_root(model, alpha);
  if (!std::isfinite(x)) throw BracketError("outer branch root not found");
  return x;
}

SupportResult find_support(const SpectralModel& model, const SolverConfig& cfg) {
  SupportResult out;
  const RightmostEdge edge = locate_rightmost(model);
  const std::size_t families = [&] {
    std::size_t p = 0;
    for (const Atom& a : model.pi_b.atoms()) p += a.value > 0.0 ? 1 : 0;
    return p;
  }();

  for (const BranchScan& br : alpha_branches(model)) {
    for (std::size_t k = 1; k <= families; ++k) {
      double prev_alpha = std::numeric_limits<double>::quiet_NaN();
      double prev = std::numeric_limits<double>::quiet_NaN();
      for (int i = 0; i < kScanPoints; ++i) {
        const double alpha = scan_alpha(br.lo, br.hi, i, kScanPoints);
        double val;
        try {
          val = df_dalpha_on_family(model, alpha, k, nullptr);
        } catch (const Error&) {
          out.partial = true;
          val = std::numeric_limits<double>::quiet_NaN();
        }
        if (std::isfinite(val) && std::isfinite(prev) && (val > 0.0) != (prev > 0.0)) {
          try {
            CriticalPoint cp = refine_critical(model, k, prev_alpha, alpha);
            if (std::isfinite(cp.x) && cp.x > 0.0) out.critical_points.push_back(cp);
          } catch (const std::exception&) {
            out.partial = true;
          }
        }
        prev = val;
        prev_alpha = alpha;
      }
    }
  }

  // Candidate edges: 0, every positive critical value, and lambda_+.
  std::vector<double> cands{0.0, edge.lambda_plus};
  for (const CriticalPoint& cp : out.critical_points) {
    if (cp.x < edge.lambda_plus) cands.push_back(cp.x);
  }
  std::sort(cands.begin(), cands.end());
  std::vector<double> uniq;
  for (double c : cands) {
    if (uniq.empty() || c - uniq.back() > 1e-10 * std::max(1.0, edge.lambda_plus)) {
      uniq.push_back(c);
    }
  }
  uniq.back() = edge.lambda_plus;

  const double threshold = 1e-8;
  std::vector<Interval> merged;
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    const double mid = 0.5 * (uniq[i] + uniq[i + 1]);
    double rho = 0.0;
    try {
      rho = density_at(model, mid, DensityKind::c, cfg);
    } catch (const Error&) {
      out.partial = true;
      continue;
    }
    if (rho <= threshold) continue;
    if (!merged.empty() && merged.back().hi == uniq[i]) {
      merged.back().hi = uniq[i + 1];
    } else {
      merged.push_back({uniq[i], uniq[i + 1]});
    }
  }
  out.intervals = merged;
  for (CriticalPoint& cp : out.critical_points) {
    for (const Interval& iv : merged) {
      const double tol = 1e-9 * std::max(1.0, edge.lambda_plus);
      if (std::abs(cp.x - iv.lo) <= tol || std::abs(cp.x - iv.hi) <= tol) cp.paired = true;
    }
  }
  return out;
}

double scaling_constant(const SpectralModel& model, EdgeReport& edge) {
  const double lp = edge.lambda_plus;
  const double a = edge.alpha_star;
  const double m1 = edge.m1c_edge;
  EdgeIntegrals in;
  for (const Atom& at : model.pi_a.atoms()) {
    const double t = at.value;
    const double u = 1.0 + t * a;
    in.i1 += at.weight * t / (lp * u * u);
    in.i2 += at.weight * t * t / (lp * u * u);
    in.i3 += at.weight * t * t * t / (lp * u * u * u);
  }
  // I1 carries the factor d like I2 and I3; without it gamma_0 is the
  // constant for n^{2/3} rather than N^{2/3} scaling.
  in.i1 *= model.d;
  in.i2 *= model.d;
  in.i3 *= model.d;
  for (const Atom& at : model.pi_b.atoms()) {
    const double x = at.value;
    const double u = 1.0 + x * m1;
    in.j1 += at.weight * x / (lp * lp * u * u);
    in.j2 += at.weight * x * x / (lp * u * u);
    in.j3 += at.weight * x * x * x / (lp * u * u * u);
  }
  edge.ik_jk = in;
  const double cube = in.i1 * in.i1 * in.j1 / (in.i2 * in.i2 * in.j3 + in.i3 * in.j2);
  if (!(cube > 0.0) || !std::isfinite(cube)) {
    throw DegenerateEdgeError("gamma_0^3 is not positive: " + std::to_string(cube));
  }
  return std::cbrt(cube);
}

double sqrt_coefficient(const SpectralModel& model, const EdgeReport& edge) {
  const FDerivatives fd = f_and_derivatives(model, edge.lambda_plus, edge.alpha_star);
  const double scale = std::max(1.0, std::abs(fd.df_dz));
  if (!(fd.d2f_dalpha2 < -1e-12 * scale) || !(fd.df_dz > 0.0)) {
    throw DegenerateEdgeError("degenerate edge: d2f/dalpha2 = " +
                              std::to_string(fd.d2f_dalpha2));
  }
  return std::sqrt(2.0 * fd.df_dz / (-fd.d2f_dalpha2)) / std::numbers::pi;
}

EdgeReport find_rightmost_edge(const SpectralModel& model, double tau,
                               const SolverConfig& cfg) {
  EdgeReport rep;
  rep.tau = tau;
  rep.model_hash = model.hash();
  rep.structure_ok = validate_structure(model, tau).passed();

  const RightmostEdge edge = locate_rightmost(model);
  rep.lambda_plus = edge.lambda_plus;
  rep.alpha_star = edge.alpha_star;
  rep.m1c_edge = -model.d * kernel_moment(model.pi_a, edge.alpha_star, 1) / edge.lambda_plus;
  rep.gap_margin_a = 1.0;
  for (const Atom& a : model.pi_a.atoms()) {
    rep.gap_margin_a = std::min(rep.gap_margin_a, 1.0 + rep.alpha_star * a.value);
  }
  rep.gap_margin_b = 1.0;
  for (const Atom& a : model.pi_b.atoms()) {
    rep.gap_margin_b = std::min(rep.gap_margin_b, 1.0 + rep.m1c_edge * a.value);
  }
  rep.regular = rep.gap_margin_a >= tau && rep.gap_margin_b >= tau;

  const FDerivatives fd = f_and_derivatives(model, rep.lambda_plus, rep.alpha_star);
  rep.df_dz = fd.df_dz;
  rep.d2f_dalpha2 = fd.d2f_dalpha2;
  rep.f_residual = std::abs(fd.f);
  rep.df_dalpha_residual = std::abs(fd.df_dalpha);

  rep.gamma0 = scaling_constant(model, rep);
  rep.sqrt_coeff_2c = sqrt_coefficient(model, rep);
  rep.sqrt_coeff_1c = rep.ik_jk.i2 * rep.sqrt_coeff_2c;
  rep.sqrt_coeff_c = rep.ik_jk.i1 / model.d * rep.sqrt_coeff_2c;

  SupportResult support = find_support(model, cfg);
  rep.support = std::move(support.intervals);
  rep.critical_points = std::move(support.critical_points);
  rep.support_partial = support.partial;
  return rep;
}

ClassicalLocations classical_locations(const SpectralModel& model,
                                       const EdgeReport& edge, int j_max,
                                       const SolverConfig& cfg) {
  if (j_max < 1 || j_max > model.n) {
    throw DomainError("classical locations need 1 <= j_max <= n");
  }
  ClassicalLocations out;
  out.j_max = j_max;
  out.gammas.reserve(static_cast<std::size_t>(j_max));
  out.gammas.push_back(edge.lambda_plus);
  if (j_max == 1) return out;

  const SupportQuadrature quad(model, edge.support, DensityKind::c, cfg);
  const double n = static_cast<double>(model.n);
  const double needed = (j_max - 1) / n;
  if (needed > quad.total_mass() + 1e-9) {
    throw DomainError("quantile exhaustion: mass " + std::to_string(quad.total_mass()) +
                      " cannot reach " + std::to_string(needed));
  }
  for (int j = 2; j <= j_max; ++j) {
    const double mass = std::min((j - 1) / n, quad.total_mass());
    double g = quad.point_with_mass_above(mass);
    g = std::min(g, out.gammas.back());
    out.gammas.push_back(g);
  }
  return out;
}

double counting_function(const SpectralModel& model, const EdgeReport& edge, double e,
                         const SolverConfig& cfg) {
  if (e >= edge.lambda_plus) return 0.0;
  const SupportQuadrature quad(model, edge.support, DensityKind::two_c, cfg);
  return quad.mass_above(e);
}

nlohmann::json edge_report_to_json(const EdgeReport& edge) {
  nlohmann::json j;
  j["model_hash"] = edge.model_hash;
  j["lambda_plus"] = edge.lambda_plus;
  j["alpha_star"] = edge.alpha_star;
  j["m1c_edge"] = edge.m1c_edge;
  j["gamma0"] = edge.gamma0;
  j["sqrt_coeff_2c"] = edge.sqrt_coeff_2c;
  j["sqrt_coeff_1c"] = edge.sqrt_coeff_1c;
  j["sqrt_coeff_c"] = edge.sqrt_coeff_c;
  auto support = nlohmann::json::array();
  for (const Interval& iv : edge.support) support.push_back({iv.lo, iv.hi});
  j["support"] = support;
  j["support_partial"] = edge.support_partial;
  auto crit = nlohmann::json::array();
  for (const CriticalPoint& cp : edge.critical_points) {
    crit.push_back({{"alpha", cp.alpha}, {"x", cp.x}, {"paired", cp.paired}});
  }
  j["critical_points"] = crit;
  j["gap_margin_a"] = edge.gap_margin_a;
  j["gap_margin_b"] = edge.gap_margin_b;
  j["ik_jk"] = {{"I1", edge.ik_jk.i1}, {"I2", edge.ik_jk.i2}, {"I3", edge.ik_jk.i3},
                {"J1", edge.ik_jk.j1}, {"J2", edge.ik_jk.j2}, {"J3", edge.ik_jk.j3}};
  j["df_dz"] = edge.df_dz;
  j["d2f_dalpha2"] = edge.d2f_dalpha2;
  j["f_residual"] = edge.f_residual;
  j["df_dalpha_residual"] = edge.df_dalpha_residual;
  j["tau"] = edge.tau;
  j["regular"] = edge.regular;
  j["structure_ok"] = edge.structure_ok;
  return j;
}

}  // namespace sepcov
