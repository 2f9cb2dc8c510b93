#include "sepcov/law_probes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "sepcov/errors.hpp"

namespace sepcov {

namespace {

constexpr double kPiGap = 1e-10;

Eigen::VectorXd unit_vector(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v / v.norm();
}

void finish(ProbeReport& rep) {
  rep.threshold = rep.cfg.c * std::pow(static_cast<double>(rep.big_n), rep.cfg.eps);
  rep.max_ratio = 0.0;
  int in_domain = 0, passing = 0;
  for (ProbeRow& row : rep.rows) {
    if (!row.in_domain) continue;
    ++in_domain;
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    if (row.ratio <= rep.threshold) ++passing;
  }
  rep.pass_fraction = in_domain ? static_cast<double>(passing) / in_domain : 0.0;
}

}  // namespace

PiLimit deterministic_limit_pi(const SpectralModel& model, const DysonSolution& sol) {
  PiLimit out;
  const cplx z = sol.z.z();
  for (const Atom& a : model.pi_a.atoms()) {
    const cplx den = 1.0 + sol.m2c * a.value;
    if (std::abs(den) < kPiGap) {
      throw SingularKernelError("Pi is singular at A atom " + std::to_string(a.value), a.value);
    }
    out.upper.push_back(-1.0 / den);
  }
  for (const Atom& a : model.pi_b.atoms()) {
    const cplx den = 1.0 + sol.m1c * a.value;
    if (std::abs(den) < kPiGap) {
      throw SingularKernelError("Pi is singular at B atom " + std::to_string(a.value), a.value);
    }
    out.lower.push_back(-1.0 / (z * den));
  }
  return out;
}

Eigen::VectorXcd pi_diagonal(const SpectralModel& model, const DysonSolution& sol) {
  const PiLimit pi = deterministic_limit_pi(model, sol);
  const int n = static_cast<int>(model.n);
  const int big_n = static_cast<int>(model.big_n);
  Eigen::VectorXcd out(n + big_n);
  auto fill = [&](const AtomicMeasure& m, const std::vector<cplx>& vals, int count, int offset) {
    const std::vector<double> diag = expand_atoms(m, count);
    std::size_t atom = 0;
    for (int i = 0; i < count; ++i) {
      while (m.atoms()[atom].value != diag[static_cast<std::size_t>(i)]) ++atom;
      out(offset + i) = vals[atom];
    }
  };
  fill(model.pi_a, pi.upper, n, 0);
  fill(model.pi_b, pi.lower, big_n, n);
  return out;
}

double control_psi(const DysonSolution& sol, long big_n) {
  const double n_eta = static_cast<double>(big_n) * sol.z.eta;
  return std::sqrt(std::max(0.0, sol.m2c.imag()) / n_eta) + 1.0 / n_eta;
}

cplx empirical_stieltjes(const SampleSpectrum& spectrum, ComplexPoint z) {
  const cplx zz = z.z();
  cplx sum = 0.0;
  for (double l : spectrum.eigenvalues) sum += 1.0 / (l - zz);
  const long zeros = spectrum.n - static_cast<long>(spectrum.eigenvalues.size());
  if (zeros > 0) sum += static_cast<double>(zeros) * (1.0 / (-zz));
  return sum / static_cast<double>(spectrum.n);
}

cplx resolvent_bilinear(const SampleSpectrum& spectrum, ComplexPoint z,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (!spectrum.has_vectors) throw DomainError("probe needs retained singular vectors");
  const int n = spectrum.n, big_n = spectrum.big_n;
  if (u.size() != n + big_n || v.size() != n + big_n) {
    throw DomainError("test vectors must have length n + N");
  }
  const cplx zz = z.z();
  const auto u1 = u.head(n), v1 = v.head(n), u2 = u.tail(big_n), v2 = v.tail(big_n);
  const Eigen::VectorXd a = spectrum.xi.transpose() * u1;
  const Eigen::VectorXd b = spectrum.xi.transpose() * v1;
  const Eigen::VectorXd c = spectrum.zeta.transpose() * u2;
  const Eigen::VectorXd e = spectrum.zeta.transpose() * v2;
  const int r = static_cast<int>(spectrum.eigenvalues.size());
  cplx sum = 0.0;
  for (int k = 0; k < r; ++k) {
    const double l = spectrum.eigenvalues[static_cast<std::size_t>(k)];
    const cplx inv = 1.0 / (l - zz);
    sum += zz * a(k) * b(k) * inv + c(k) * e(k) * inv +
           std::sqrt(l) * (a(k) * e(k) + c(k) * b(k)) * inv;
  }
  if (n > r) sum += -(u1.dot(v1) - a.dot(b));
  if (big_n > r) sum += -(u2.dot(v2) - c.dot(e)) / zz;
  return sum;
}

Eigen::MatrixXcd resolvent_from_spectrum(const SampleSpectrum& spectrum, ComplexPoint z) {
  if (!spectrum.has_vectors) throw DomainError("probe needs retained singular vectors");
  const int n = spectrum.n, big_n = spectrum.big_n;
  const int r = static_cast<int>(spectrum.eigenvalues.size());
  const cplx zz = z.z();
  Eigen::VectorXcd inv(r), sq(r);
  for (int k = 0; k < r; ++k) {
    const double l = spectrum.eigenvalues[static_cast<std::size_t>(k)];
    inv(k) = 1.0 / (l - zz);
    sq(k) = std::sqrt(l) * inv(k);
  }
  const Eigen::MatrixXcd xi = spectrum.xi.cast<cplx>();
  const Eigen::MatrixXcd zeta = spectrum.zeta.cast<cplx>();
  Eigen::MatrixXcd g(n + big_n, n + big_n);
  g.topLeftCorner(n, n) = zz * xi * inv.asDiagonal() * xi.transpose();
  g.bottomRightCorner(big_n, big_n) = zeta * inv.asDiagonal() * zeta.transpose();
  g.topRightCorner(n, big_n) = xi * sq.asDiagonal() * zeta.transpose();
  g.bottomLeftCorner(big_n, n) = zeta * sq.asDiagonal() * xi.transpose();
  if (n > r) {
    const Eigen::MatrixXcd p = xi * xi.transpose();
    g.topLeftCorner(n, n) -= Eigen::MatrixXcd::Identity(n, n) - p;
  }
  if (big_n > r) {
    const Eigen::MatrixXcd p = zeta * zeta.transpose();
    g.bottomRightCorner(big_n, big_n) -= (Eigen::MatrixXcd::Identity(big_n, big_n) - p) / zz;
  }
  return g;
}

std::string to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::averaged: return "averaged";
    case ProbeKind::anisotropic: return "anisotropic";
    case ProbeKind::rigidity: return "rigidity";
    case ProbeKind::delocalization: return "delocalization";
  }
  return "unknown";
}

ProbeKind parse_probe_kind(const std::string& name) {
  for (ProbeKind k : {ProbeKind::averaged, ProbeKind::anisotropic, ProbeKind::rigidity,
                      ProbeKind::delocalization}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown probe '" + name +
                    "' (expected averaged, anisotropic, rigidity or delocalization)");
}

bool ProbeReport::passed() const {
  for (const ProbeRow& row : rows) {
    if (row.in_domain && !(row.ratio <= threshold)) return false;
  }
  return true;
}

ProbeReport averaged_law_probe(const SpectralModel& model,
                               const std::vector<SampleSpectrum>& spectra,
                               const std::vector<ComplexPoint>& zs, const EdgeReport& edge,
                               const ProbeConfig& cfg, const AveragedDomain& domain,
                               const SolverConfig& solver) {
  if (spectra.empty()) throw DomainError("averaged probe needs at least one spectrum");
  ProbeReport rep;
  rep.kind = ProbeKind::averaged;
  rep.cfg = cfg;
  rep.big_n = model.big_n;
  rep.envelope_formula =
      "inside: 1/(N eta); outside (E >= lambda_+, N eta sqrt(kappa+eta) >= N^eps): "
      "1/(N (kappa+eta)) + 1/((N eta)^2 sqrt(kappa+eta))";
  const double big_n = static_cast<double>(model.big_n);
  const double lp = edge.lambda_plus;
  const double threshold = cfg.c * std::pow(big_n, cfg.eps);
  std::vector<bool> replica_ok(spectra.size(), true);

  for (std::size_t iz = 0; iz < zs.size(); ++iz) {
    const ComplexPoint z = zs[iz];
    ProbeRow row;
    row.label = static_cast<double>(iz);
    row.z = z.z();
    const bool e_ok = z.e >= lp - domain.c0 * lp && z.e <= domain.c0_big * lp;
    const bool eta_ok = z.eta >= std::pow(big_n, -1.0 + cfg.eps) && z.eta <= 1.0;
    if (!e_ok || !eta_ok) {
      row.in_domain = false;
      row.note = "outside domain";
      rep.rows.push_back(row);
      continue;
    }
    const DysonSolution sol = solve_at(model, z, solver);
    const double kappa = z.kappa(lp);
    const double n_eta = big_n * z.eta;
    const bool outside = z.e >= lp && n_eta * std::sqrt(kappa + z.eta) >= std::pow(big_n, cfg.eps);
    row.envelope = outside ? 1.0 / (big_n * (kappa + z.eta)) +
                                 1.0 / (n_eta * n_eta * std::sqrt(kappa + z.eta))
                           : 1.0 / n_eta;
    row.note = outside ? "outside spectrum" : "inside spectrum";
    double sum = 0.0;
    int passing = 0;
    for (std::size_t r = 0; r < spectra.size(); ++r) {
      const double err = std::abs(empirical_stieltjes(spectra[r], z) - sol.mc);
      sum += err;
      if (err <= threshold * row.envelope) {
        ++passing;
      } else {
        replica_ok[r] = false;
      }
    }
    row.error = sum / static_cast<double>(spectra.size());
    row.ratio = row.error / row.envelope;
    row.pass_fraction = static_cast<double>(passing) / static_cast<double>(spectra.size());
    rep.rows.push_back(row);
  }
  finish(rep);
  rep.pass_fraction = static_cast<double>(std::count(replica_ok.begin(), replica_ok.end(), true)) /
                      static_cast<double>(spectra.size());
  return rep;
}

double support_parameter(const EntryLaw& law, long big_n) {
  const double n = static_cast<double>(big_n);
  switch (law.kind()) {
    case LawKind::gaussian:
    case LawKind::symmetric_bernoulli:
      return 1.0 / std::sqrt(n);
    case LawKind::truncated:
      return std::pow(n, -law.epsilon());
    case LawKind::heavy_tail:
      return 1.0;
  }
  return 1.0;
}

ProbeReport anisotropic_probe(const SpectralModel& model, const SampleSpectrum& spectrum,
                              ComplexPoint z, int num_pairs, std::uint64_t seed, double q,
                              const ProbeConfig& cfg, const SolverConfig& solver) {
  if (!spectrum.has_vectors) throw DomainError("anisotropic probe needs retained singular vectors");
  if (num_pairs < 1) throw DomainError("anisotropic probe needs at least one vector pair");
  ProbeReport rep;
  rep.kind = ProbeKind::anisotropic;
  rep.cfg = cfg;
  rep.big_n = model.big_n;
  rep.envelope_formula = "q + Psi(z)";
  const DysonSolution sol = solve_at(model, z, solver);
  const Eigen::VectorXcd pi = pi_diagonal(model, sol);
  const double envelope = q + control_psi(sol, model.big_n);
  const int dim = spectrum.n + spectrum.big_n;
  for (int p = 0; p < num_pairs; ++p) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(p)));
    const Eigen::VectorXd u = unit_vector(dim, rng);
    const Eigen::VectorXd v = unit_vector(dim, rng);
    cplx limit = 0.0;
    for (int a = 0; a < dim; ++a) limit += u(a) * pi(a) * v(a);
    ProbeRow row;
    row.label = p;
    row.z = z.z();
    row.error = std::abs(resolvent_bilinear(spectrum, z, u, v) - limit);
    row.envelope = envelope;
    row.ratio = row.error / envelope;
    rep.rows.push_back(row);
  }
  finish(rep);
  for (ProbeRow& row : rep.rows) row.pass_fraction = row.ratio <= rep.threshold ? 1.0 : 0.0;
  return rep;
}

ProbeReport rigidity_probe(const SampleSpectrum& spectrum, const ClassicalLocations& locations,
                           int j_lo, int j_hi, const ProbeConfig& cfg) {
  const int avail = static_cast<int>(std::min(spectrum.eigenvalues.size(), locations.gammas.size()));
  if (j_lo < 1 || j_hi < j_lo || j_hi > avail) {
    throw DomainError("rigidity range [" + std::to_string(j_lo) + ", " + std::to_string(j_hi) +
                      "] exceeds the available " + std::to_string(avail) + " locations");
  }
  ProbeReport rep;
  rep.kind = ProbeKind::rigidity;
  rep.cfg = cfg;
  rep.big_n = spectrum.big_n;
  rep.envelope_formula = "|lambda_j - gamma_j| j^{1/3} N^{2/3} against 1";
  const double n23 = std::pow(static_cast<double>(spectrum.big_n), 2.0 / 3.0);
  for (int j = j_lo; j <= j_hi; ++j) {
    ProbeRow row;
    row.label = j;
    const double dev = std::abs(spectrum.eigenvalues[static_cast<std::size_t>(j - 1)] -
                                locations.gammas[static_cast<std::size_t>(j - 1)]);
    row.z = locations.gammas[static_cast<std::size_t>(j - 1)];
    row.error = dev * std::cbrt(static_cast<double>(j)) * n23;
    row.envelope = 1.0;
    row.ratio = row.error;
    rep.rows.push_back(row);
  }
  finish(rep);
  for (ProbeRow& row : rep.rows) row.pass_fraction = row.ratio <= rep.threshold ? 1.0 : 0.0;
  return rep;
}

ProbeReport delocalization_probe(const SampleSpectrum& spectrum, const EdgeReport& edge,
                                 const ClassicalLocations& locations, int num_vectors,
                                 std::uint64_t seed, double window_c1, const ProbeConfig& cfg) {
  if (!spectrum.has_vectors) throw DomainError("delocalization probe needs retained singular vectors");
  if (num_vectors < 1) throw DomainError("delocalization probe needs at least one test vector");
  ProbeReport rep;
  rep.kind = ProbeKind::delocalization;
  rep.cfg = cfg;
  rep.big_n = spectrum.big_n;
  rep.envelope_formula = "log(N)/N";
  const double big_n = static_cast<double>(spectrum.big_n);
  const double envelope = std::log(big_n) / big_n;
  std::vector<Eigen::VectorXd> us, vs;
  for (int t = 0; t < num_vectors; ++t) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(t)));
    us.push_back(unit_vector(spectrum.n, rng));
    vs.push_back(unit_vector(spectrum.big_n, rng));
  }
  const int kmax = static_cast<int>(std::min<std::size_t>(
      {locations.gammas.size(), spectrum.eigenvalues.size(),
       static_cast<std::size_t>(spectrum.xi.cols())}));
  for (int k = 1; k <= kmax; ++k) {
    if (locations.gammas[static_cast<std::size_t>(k - 1)] < edge.lambda_plus - window_c1) break;
    double worst = 0.0;
    for (int t = 0; t < num_vectors; ++t) {
      const double a = us[static_cast<std::size_t>(t)].dot(spectrum.xi.col(k - 1));
      const double b = vs[static_cast<std::size_t>(t)].dot(spectrum.zeta.col(k - 1));
      worst = std::max(worst, a * a + b * b);
    }
    ProbeRow row;
    row.label = k;
    row.z = locations.gammas[static_cast<std::size_t>(k - 1)];
    row.error = worst;
    row.envelope = envelope;
    row.ratio = worst / envelope;
    rep.rows.push_back(row);
  }
  // The delocalization envelope carries no N^eps factor.
  rep.cfg.eps = 0.0;
  finish(rep);
  for (ProbeRow& row : rep.rows) row.pass_fraction = row.ratio <= rep.threshold ? 1.0 : 0.0;
  return rep;
}

nlohmann::json probe_report_to_json(const ProbeReport& report) {
  nlohmann::json j;
  j["kind"] = to_string(report.kind);
  j["envelope_formula"] = report.envelope_formula;
  j["C"] = report.cfg.c;
  j["eps"] = report.cfg.eps;
  j["N"] = report.big_n;
  j["threshold"] = report.threshold;
  j["pass_fraction"] = report.pass_fraction;
  j["max_ratio"] = report.max_ratio;
  j["passed"] = report.passed();
  auto rows = nlohmann::json::array();
  for (const ProbeRow& r : report.rows) {
    rows.push_back({{"label", r.label},
                    {"E", r.z.real()},
                    {"eta", r.z.imag()},
                    {"error", r.error},
                    {"envelope", r.envelope},
                    {"ratio", r.ratio},
                    {"pass_fraction", r.pass_fraction},
                    {"in_domain", r.in_domain},
                    {"note", r.note}});
  }
  j["rows"] = rows;
  return j;
}

void write_probe_csv(const ProbeReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path);
  os << "label,E,eta,error,envelope,ratio,pass_fraction,in_domain\n" << std::setprecision(17);
  for (const ProbeRow& r : report.rows) {
    os << r.label << ',' << r.z.real() << ',' << r.z.imag() << ',' << r.error << ','
       << r.envelope << ',' << r.ratio << ',' << r.pass_fraction << ',' << (r.in_domain ? 1 : 0)
       << '\n';
  }
}

}  // namespace sepcov
