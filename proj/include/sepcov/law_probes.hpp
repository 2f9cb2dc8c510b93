#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"
#include "sepcov/ensemble.hpp"

namespace sepcov {

/// Diagonal blocks of the deterministic resolvent limit, one entry per atom
/// (atom order of pi_a and pi_b).
struct PiLimit {
  std::vector<cplx> upper;  // -1 / (1 + m2c sigma_i)
  std::vector<cplx> lower;  // -z^{-1} / (1 + m1c tilde sigma_mu)
};

/// Throws SingularKernelError when |1 + m2c sigma_i| or |1 + m1c tilde
/// sigma_mu| drops below 1e-10.
PiLimit deterministic_limit_pi(const SpectralModel& model, const DysonSolution& sol);

/// Pi expanded to all n + N coordinates, in the sampler's coordinate order.
Eigen::VectorXcd pi_diagonal(const SpectralModel& model, const DysonSolution& sol);

/// Psi = sqrt(Im m2c / (N eta)) + 1 / (N eta).
double control_psi(const DysonSolution& sol, long big_n);

/// (1/n) sum_i 1 / (lambda_i - z), counting the n - min(n, N) zero
/// eigenvalues that are not listed.
cplx empirical_stieltjes(const SampleSpectrum& spectrum, ComplexPoint z);

/// <u, G(z) v> for u, v in R^{n+N}, from the singular value decomposition
/// of M. Zero modes beyond min(n, N) enter through the complement projector.
cplx resolvent_bilinear(const SampleSpectrum& spectrum, ComplexPoint z,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Full (n+N) x (n+N) resolvent from the spectral representation. Meant for
/// small sizes.
Eigen::MatrixXcd resolvent_from_spectrum(const SampleSpectrum& spectrum, ComplexPoint z);

enum class ProbeKind { averaged, anisotropic, rigidity, delocalization };
std::string to_string(ProbeKind kind);
ProbeKind parse_probe_kind(const std::string& name);

/// Envelope constants: a row passes when error <= c * N^eps * envelope.
struct ProbeConfig {
  double c = 10.0;
  double eps = 0.1;
};

struct ProbeRow {
  double label = 0.0;  // j or k for rigidity / delocalization, row index otherwise
  cplx z{0.0, 0.0};
  double error = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;  // error / envelope
  double pass_fraction = 1.0;
  bool in_domain = true;
  std::string note;
};

struct ProbeReport {
  ProbeKind kind = ProbeKind::averaged;
  std::string envelope_formula;
  ProbeConfig cfg;
  long big_n = 0;
  std::vector<ProbeRow> rows;
  double threshold = 0.0;      // c * N^eps
  double pass_fraction = 0.0;  // replicas (averaged) or rows (others) that pass
  double max_ratio = 0.0;

  /// Every in-domain row within the threshold.
  bool passed() const;
};

/// Domain of the averaged law: E in [lambda_+ - c0, c0_big * lambda_+],
/// eta in [N^{-1+eps}, 1].
struct AveragedDomain {
  double c0 = 0.25;     // as a fraction of lambda_+
  double c0_big = 2.0;
};

/// Per z: mean over replicas of |m - m_c| against (N eta)^{-1} inside the
/// spectrum, or N^{-1}(kappa + eta)^{-1} + (N eta)^{-2}(kappa + eta)^{-1/2}
/// outside (E >= lambda_+ and N eta sqrt(kappa + eta) >= N^eps). Row
/// pass_fraction counts replicas; the report's counts replicas passing
/// every in-domain z.
ProbeReport averaged_law_probe(const SpectralModel& model,
                               const std::vector<SampleSpectrum>& spectra,
                               const std::vector<ComplexPoint>& zs, const EdgeReport& edge,
                               const ProbeConfig& cfg = {}, const AveragedDomain& domain = {},
                               const SolverConfig& solver = {});

/// Bounded-support parameter q used in the anisotropic envelope:
/// N^{-1/2} for gaussian and bernoulli, N^{-epsilon} for truncated laws and
/// 1 for untruncated heavy tails.
double support_parameter(const EntryLaw& law, long big_n);

/// max over seeded unit pairs (u, v) in R^{n+N} of |<u, (G - Pi) v>|
/// against q + Psi(z). One row per pair.
ProbeReport anisotropic_probe(const SpectralModel& model, const SampleSpectrum& spectrum,
                              ComplexPoint z, int num_pairs, std::uint64_t seed, double q,
                              const ProbeConfig& cfg = {}, const SolverConfig& solver = {});

/// |lambda_j - gamma_j| j^{1/3} N^{2/3} for j in [j_lo, j_hi]; envelope 1.
ProbeReport rigidity_probe(const SampleSpectrum& spectrum, const ClassicalLocations& locations,
                           int j_lo, int j_hi, const ProbeConfig& cfg = {});

/// max over seeded unit u in R^n, v in R^N of |<u, xi_k>|^2 + |<v, zeta_k>|^2
/// for every k with gamma_k >= lambda_+ - window_c1; envelope log(N)/N.
ProbeReport delocalization_probe(const SampleSpectrum& spectrum, const EdgeReport& edge,
                                 const ClassicalLocations& locations, int num_vectors,
                                 std::uint64_t seed, double window_c1,
                                 const ProbeConfig& cfg = {});

nlohmann::json probe_report_to_json(const ProbeReport& report);
/// CSV `label,E,eta,error,envelope,ratio,pass_fraction,in_domain`.
void write_probe_csv(const ProbeReport& report, const std::string& path);

}  // namespace sepcov
