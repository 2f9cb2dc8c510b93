#include "sepcov/dyson_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace sepcov {

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw DomainError("solver tol must be positive");
  if (max_iter < 1) throw DomainError("solver max_iter must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw DomainError("solver damping must lie in (0, 1]");
  }
  for (std::size_t i = 1; i < continuation_etas.size(); ++i) {
    if (!(continuation_etas[i] < continuation_etas[i - 1])) {
      throw DomainError("continuation etas must be strictly descending");
    }
  }
}

cplx m1c_from_m2c(const SpectralModel& model, cplx z, cplx m2c) {
  return -(model.d / z) * kernel_moment(model.pi_a, m2c, 1);
}

cplx m2c_from_m1c(const SpectralModel& model, cplx z, cplx m1c) {
  return -kernel_moment(model.pi_b, m1c, 1) / z;
}

cplx mc_from_m2c(const SpectralModel& model, cplx z, cplx m2c) {
  cplx acc{0.0};
  for (const Atom& a : model.pi_a.atoms()) {
    const cplx denom = 1.0 + a.value * m2c;
    if (std::abs(denom) < kPoleThreshold) {
      throw SingularKernelError("pole collision in m_c at atom " +
                                    std::to_string(a.value),
                                a.value);
    }
    acc += a.weight / denom;
  }
  return -acc / z;
}

double pair_residual(const SpectralModel& model, cplx z, cplx m1c, cplx m2c) {
  const double r1 =
      std::abs(m1c - m1c_from_m2c(model, z, m2c)) / std::max(1.0, std::abs(m1c));
  const double r2 =
      std::abs(m2c - m2c_from_m1c(model, z, m1c)) / std::max(1.0, std::abs(m2c));
  return std::max(r1, r2);
}

namespace {

// Scale above which the fixed-point map is comfortably contractive.
double starting_eta(const SpectralModel& model) {
  return std::max(1.0, model.sigma1() * model.tilde_sigma1());
}

bool in_upper_half_plane(const DysonSolution& s) {
  return s.m1c.imag() > 0.0 && s.m2c.imag() > 0.0 && s.mc.imag() > 0.0;
}

// Degenerate measures (all atoms at zero) give m1c or m2c identically zero;
// the upper-half-plane test then only applies to the nonzero transforms.
bool valid_branch(const SpectralModel& model, const DysonSolution& s) {
  const bool a_zero = model.sigma1() == 0.0;
  const bool b_zero = model.tilde_sigma1() == 0.0;
  if (s.mc.imag() <= 0.0) return false;
  if (!a_zero && !b_zero) return in_upper_half_plane(s);
  return true;
}

DysonSolution assemble(const SpectralModel& model, ComplexPoint z, cplx m2c,
                       int iterations) {
  DysonSolution s;
  s.z = z;
  s.m2c = m2c;
  s.m1c = m1c_from_m2c(model, z.z(), m2c);
  s.mc = mc_from_m2c(model, z.z(), m2c);
  s.iterations = iterations;
  s.residual = pair_residual(model, z.z(), s.m1c, s.m2c);
  return s;
}

struct NewtonOutcome {
  bool ok = false;
  DysonSolution solution;
  int iterations = 0;
};

// Newton on F(alpha) = -alpha + m2(m1(alpha)), alpha = m2c.
NewtonOutcome newton_scalar(const SpectralModel& model, ComplexPoint zp, cplx alpha,
                            double tol) {
  const cplx z = zp.z();
  NewtonOutcome out;
  constexpr int kMaxNewton = 60;
  try {
    for (int it = 0; it < kMaxNewton; ++it) {
      ++out.iterations;
      const cplx m1 = m1c_from_m2c(model, z, alpha);
      const cplx f = -alpha + m2c_from_m1c(model, z, m1);
      const cplx dm1 = (model.d / z) * kernel_moment(model.pi_a, alpha, 2);
      const cplx dm2 = kernel_moment(model.pi_b, m1, 2) / z;
      const cplx df = -1.0 + dm2 * dm1;
      if (std::abs(df) == 0.0) return out;
      const cplx step = f / df;
      alpha -= step;
      if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) return out;
      if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                 std::max(1.0, std::abs(alpha))) {
        break;
      }
    }
    DysonSolution s = assemble(model, zp, alpha, out.iterations);
    if (s.residual <= tol && valid_branch(model, s)) {
      out.ok = true;
      out.solution = s;
    }
  } catch (const SingularKernelError&) {
    out.ok = false;
  }
  return out;
}

// Damped Gauss-Seidel fixed point; damping halves when the residual grows
// three iterations in a row.
DysonSolution fixed_point(const SpectralModel& model, ComplexPoint zp, cplx m2,
                          const SolverConfig& cfg) {
  const cplx z = zp.z();
  double omega = cfg.damping;
  double last_res = std::numeric_limits<double>::infinity();
  int rising = 0;
  int it = 0;
  cplx m1 = m1c_from_m2c(model, z, m2);
  double res = pair_residual(model, z, m1, m2);
  for (; it < cfg.max_iter && res > cfg.tol; ++it) {
    m1 = m1c_from_m2c(model, z, m2);
    const cplx next = m2c_from_m1c(model, z, m1);
    m2 = (1.0 - omega) * m2 + omega * next;
    m1 = m1c_from_m2c(model, z, m2);
    res = pair_residual(model, z, m1, m2);
    rising = res > last_res ? rising + 1 : 0;
    if (rising >= 3) {
      omega *= 0.5;
      rising = 0;
    }
    last_res = res;
  }
  return assemble(model, zp, m2, it);
}

std::vector<double> ladder_for(double start, double target, const SolverConfig& cfg) {
  std::vector<double> etas;
  if (!cfg.continuation_etas.empty()) {
    for (double e : cfg.continuation_etas) {
      if (e < start && e > target) etas.push_back(e);
    }
  } else {
    for (double e = start * 0.5; e > target; e *= 0.5) etas.push_back(e);
  }
  etas.push_back(target);
  return etas;
}

}  // namespace

std::optional<DysonSolution> refine_from(const SpectralModel& model, ComplexPoint z,
                                         cplx m2c_guess, const SolverConfig& cfg) {
  NewtonOutcome r = newton_scalar(model, z, m2c_guess, cfg.tol);
  if (!r.ok) return std::nullopt;
  return r.solution;
}

DysonSolution solve_at(const SpectralModel& model, ComplexPoint z,
                       const SolverConfig& cfg) {
  cfg.validate();
  if (!(z.eta > 0.0)) throw DomainError("solve_at needs Im z > 0");

  const double eta_start = std::max(starting_eta(model), z.eta);
  ComplexPoint zs(z.e, eta_start);
  DysonSolution cur = fixed_point(model, zs, -1.0 / zs.z(), cfg);
  int total = cur.iterations;
  {
    NewtonOutcome polish = newton_scalar(model, zs, cur.m2c, cfg.tol);
    total += polish.iterations;
    if (polish.ok) cur = polish.solution;
  }
  if (z.eta == eta_start) {
    if (cur.residual > cfg.tol || !valid_branch(model, cur)) {
      throw ConvergenceError("fixed point did not converge", cur.m1c, cur.m2c,
                             cur.residual);
    }
    cur.iterations = total;
    return cur;
  }

  double eta_prev = eta_start;
  // Advances from eta_prev to eta_next, bisecting the rung (geometrically)
  // when Newton fails or leaves the upper half plane.
  auto advance = [&](double eta_next) {
    std::vector<double> pending{eta_next};
    int splits = 0;
    while (!pending.empty()) {
      const double target = pending.back();
      NewtonOutcome r = newton_scalar(model, ComplexPoint(z.e, target), cur.m2c, cfg.tol);
      total += r.iterations;
      if (r.ok) {
        cur = r.solution;
        eta_prev = target;
        pending.pop_back();
        continue;
      }
      if (++splits > 60) return false;
      pending.push_back(std::sqrt(eta_prev * target));
    }
    return true;
  };

  for (double eta : ladder_for(eta_start, z.eta, cfg)) {
    if (!advance(eta)) {
      // Last resort: plain damped iteration at the target from the last
      // accepted rung.
      DysonSolution fp = fixed_point(model, z, cur.m2c, cfg);
      total += fp.iterations;
      if (fp.residual <= cfg.tol && valid_branch(model, fp)) {
        fp.iterations = total;
        return fp;
      }
      throw ConvergenceError("Dyson solve failed at eta=" + std::to_string(z.eta) +
                                 " E=" + std::to_string(z.e),
                             fp.m1c, fp.m2c, fp.residual);
    }
  }
  cur.z = z;
  cur.iterations = total;
  return cur;
}

DensityCurve density_grid(const SpectralModel& model, double e_min, double e_max,
                          double eta, int points, const SolverConfig& cfg) {
  if (!(e_min < e_max)) throw DomainError("density grid needs e_min < e_max");
  if (!(eta > 0.0)) throw DomainError("density grid needs eta > 0");
  if (points < 2) throw DomainError("density grid needs at least 2 points");

  DensityCurve curve;
  curve.eta_used = eta;
  curve.grid.resize(static_cast<std::size_t>(points));
  curve.rho_c.assign(curve.grid.size(), std::numeric_limits<double>::quiet_NaN());
  curve.rho_1c = curve.rho_c;
  curve.rho_2c = curve.rho_c;

  const double step = (e_max - e_min) / (points - 1);
  std::optional<cplx> warm;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const double e = (i + 1 == curve.grid.size()) ? e_max : e_min + step * i;
    curve.grid[i] = e;
    const ComplexPoint zp(e, eta);
    std::optional<DysonSolution> s;
    if (warm) s = refine_from(model, zp, *warm, cfg);
    if (!s) {
      try {
        s = solve_at(model, zp, cfg);
      } catch (const Error& err) {
        curve.failures.emplace_back(i, err.what());
        warm.reset();
        continue;
      }
    }
    warm = s->m2c;
    auto clip = [](double v) { return v < 0.0 ? 0.0 : v; };
    curve.rho_c[i] = clip(s->mc.imag() / std::numbers::pi);
    curve.rho_1c[i] = clip(s->m1c.imag() / std::numbers::pi);
    curve.rho_2c[i] = clip(s->m2c.imag() / std::numbers::pi);
  }
  return curve;
}

namespace {

struct VectorState {
  Eigen::VectorXcd v;
  int iterations = 0;
};

// Residual G_a(v) = 1/v_a + z - sigma_a * K_B(m1(v)) per atom of pi_A.
Eigen::VectorXcd vector_residual(const SpectralModel& model, cplx z,
                                 const Eigen::VectorXcd& v, cplx* m1_out) {
  const auto atoms = model.pi_a.atoms();
  cplx m1{0.0};
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    m1 += atoms[a].weight * atoms[a].value * v[a];
  }
  m1 *= model.d;
  const cplx kb = kernel_moment(model.pi_b, m1, 1);
  Eigen::VectorXcd g(v.size());
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    g[a] = 1.0 / v[a] + z - atoms[a].value * kb;
  }
  if (m1_out) *m1_out = m1;
  return g;
}

bool vector_newton(const SpectralModel& model, cplx z, VectorState& st, double tol,
                   bool backtrack) {
  const auto atoms = model.pi_a.atoms();
  const Eigen::Index p = st.v.size();
  Eigen::VectorXcd v = st.v;
  try {
    for (int it = 0; it < 80; ++it) {
      ++st.iterations;
      cplx m1;
      const Eigen::VectorXcd g = vector_residual(model, z, v, &m1);
      const double gnorm = g.cwiseAbs().maxCoeff();
      const double scale = v.cwiseAbs().maxCoeff();
      if (gnorm * scale * scale <= tol * 1e-2) break;
      const cplx kb2 = kernel_moment(model.pi_b, m1, 2);
      Eigen::MatrixXcd jac(p, p);
      for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = 0; b < p; ++b) {
          jac(a, b) = atoms[a].value * kb2 * model.d * atoms[b].weight * atoms[b].value;
        }
        jac(a, a) -= 1.0 / (v[a] * v[a]);
      }
      const Eigen::VectorXcd step = jac.partialPivLu().solve(g);
      double t = 1.0;
      Eigen::VectorXcd next = v - step;
      if (backtrack) {
        for (int k = 0; k < 30; ++k) {
          next = v - t * step;
          if ((next.imag().array() > 0.0).all() &&
              vector_residual(model, z, next, nullptr).cwiseAbs().maxCoeff() < gnorm) {
            break;
          }
          t *= 0.5;
        }
      }
      if (!next.allFinite()) return false;
      const double dv = (next - v).cwiseAbs().maxCoeff();
      v = next;
      if (dv <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale)) {
        break;
      }
    }
  } catch (const SingularKernelError&) {
    return false;
  }
  const Eigen::VectorXcd g = vector_residual(model, z, v, nullptr);
  const double rel = (g.array() * v.array()).abs().maxCoeff();
  for (Eigen::Index a = 0; a < p; ++a) {
    if (!(v[a].imag() > 0.0)) return false;
  }
  if (rel > tol) return false;
  st.v = v;
  return true;
}

}  // namespace

VectorDysonSolution solve_vector_dyson(const SpectralModel& model, ComplexPoint z,
                                       const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index p = static_cast<Eigen::Index>(model.pi_a.size());
  const double eta_start = std::max(starting_eta(model), z.eta);

  VectorState st;
  st.v = Eigen::VectorXcd::Constant(p, -1.0 / cplx(z.e, eta_start));
  if (!vector_newton(model, cplx(z.e, eta_start), st, cfg.tol, true)) {
    throw ConvergenceError("vector Dyson solve failed at the starting level", 0.0, 0.0,
                           std::numeric_limits<double>::infinity());
  }
  double eta_prev = eta_start;
  for (double eta : ladder_for(eta_start, z.eta, cfg)) {
    if (eta >= eta_prev) continue;
    std::vector<double> pending{eta};
    int splits = 0;
    while (!pending.empty()) {
      const double target = pending.back();
      if (vector_newton(model, cplx(z.e, target), st, cfg.tol, false)) {
        eta_prev = target;
        pending.pop_back();
        continue;
      }
      if (++splits > 60) {
        throw ConvergenceError("vector Dyson continuation failed", 0.0, 0.0,
                               std::numeric_limits<double>::infinity());
      }
      pending.push_back(std::sqrt(eta_prev * target));
    }
  }

  const auto atoms = model.pi_a.atoms();
  const cplx zz = z.z();
  VectorDysonSolution out;
  out.v.assign(st.v.data(), st.v.data() + p);
  out.iterations = st.iterations;
  out.m1c = 0.0;
  out.mc = 0.0;
  for (Eigen::Index a = 0; a < p; ++a) {
    out.m1c += atoms[a].weight * atoms[a].value * st.v[a];
    out.mc += atoms[a].weight * st.v[a];
  }
  out.m1c *= model.d;
  out.m2c = m2c_from_m1c(model, zz, out.m1c);
  return out;
}

double vector_dyson_check(const SpectralModel& model, ComplexPoint z,
                          const SolverConfig& cfg) {
  const DysonSolution pair = solve_at(model, z, cfg);
  const VectorDysonSolution vec = solve_vector_dyson(model, z, cfg);
  return std::max({std::abs(pair.m1c - vec.m1c), std::abs(pair.m2c - vec.m2c),
                   std::abs(pair.mc - vec.mc)});
}

}  // namespace sepcov
