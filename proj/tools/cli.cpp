#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "selftest.hpp"
#include "sepcov/detection.hpp"
#include "sepcov/dyson_solver.hpp"
#include "sepcov/edge_analysis.hpp"
#include "sepcov/ensemble.hpp"
#include "sepcov/entry_law.hpp"
#include "sepcov/errors.hpp"
#include "sepcov/law_probes.hpp"
#include "sepcov/model_io.hpp"
#include "sepcov/stats_tests.hpp"

namespace sepcov::cli {

namespace {

using nlohmann::json;

// Bad flag combinations found after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Manifest {
  std::string command;
  json config = json::object();
  std::string model_hash;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;
  std::vector<std::string> replay;
  json extra = json::object();

  json to_json() const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["model_hash"] = model_hash;
    j["master_seed"] = seed ? json(*seed) : json(nullptr);
    j["tool_version"] = SEPCOV_VERSION;
    j["outputs"] = outputs;
    j["replay"] = replay;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write " + path);
  os << text;
  if (!os) throw DomainError("failed writing " + path);
}

void write_manifest(const Manifest& m, const std::string& path) {
  write_text(path, m.to_json().dump(2) + "\n");
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + std::string(what) + " " + path);
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw DomainError("invalid " + std::string(what) + " " + path + ": " + e.what());
  }
}

SpectralModel model_from_doc(const json& doc, const std::string& path) {
  try {
    return model_from_json(doc);
  } catch (const DomainError& e) {
    throw DomainError("invalid model document " + path + ": " + e.what());
  } catch (const json::exception& e) {
    throw DomainError("invalid model document " + path + ": " + e.what());
  }
}

std::uint64_t resolve_seed(std::optional<std::uint64_t>& seed, std::ostream& err) {
  if (!seed) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << *seed << " (generated; recorded in the manifest)\n";
  }
  return *seed;
}

// Options shared by the sampling subcommands.
struct SamplingOptions {
  std::string model_path;
  std::optional<long> n;
  std::optional<long> big_n;
  std::string law = "gaussian";
  std::string law_params = "{}";
  std::optional<double> truncate_eps;
  int reps = 0;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool rotated = false;
  bool fresh_rotations = false;
  double tau = 0.1;

  void add_to(CLI::App* app, int default_reps) {
    reps = default_reps;
    app->add_option("--model", model_path, "model document (JSON)")->required();
    app->add_option("--n", n, "override n; N follows the model's aspect ratio unless --N is given");
    app->add_option("--N", big_n, "override N");
    app->add_option("--law", law, "entry law")
        ->check(CLI::IsMember({"gaussian", "symmetric_bernoulli", "bernoulli", "heavy_tail", "heavy"}));
    app->add_option("--law-params", law_params, "law parameters as a JSON object");
    app->add_option("--truncate", truncate_eps, "truncate the law at N^{1/2 - eps}");
    app->add_option("--reps", reps, "replicas")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--rotated", rotated, "Haar-rotated covariances");
    app->add_flag("--fresh-rotations", fresh_rotations, "redraw rotations for every replica");
    app->add_option("--tau", tau, "regularity constant");
  }

  SpectralModel load() const {
    json doc = read_json_file(model_path, "model document");
    if (n || big_n) {
      if (!doc.is_object() || !doc.contains("n") || !doc.contains("N")) {
        throw DomainError("invalid model document " + model_path + ": missing n or N");
      }
      const double n0 = doc["n"].get<double>(), big_n0 = doc["N"].get<double>();
      const long new_n = n ? *n : std::lround(static_cast<double>(*big_n) * n0 / big_n0);
      const long new_big_n = big_n ? *big_n : std::lround(static_cast<double>(*n) * big_n0 / n0);
      doc["n"] = new_n;
      doc["N"] = new_big_n;
    }
    return model_from_doc(doc, model_path);
  }

  EntryLaw make_law(long model_big_n) const {
    json params;
    try {
      params = json::parse(law_params);
    } catch (const json::exception& e) {
      throw UsageError(std::string("--law-params is not valid JSON: ") + e.what());
    }
    EntryLaw base = make_entry_law(parse_law_kind(law), params);
    if (!truncate_eps) return base;
    return truncate_law(base, *truncate_eps, model_big_n).law;
  }

  void add_replay(std::vector<std::string>& argv, std::uint64_t master) const {
    argv.insert(argv.end(), {"--model", model_path, "--law", law, "--law-params", law_params,
                             "--reps", std::to_string(reps), "--seed", std::to_string(master),
                             "--threads", std::to_string(threads), "--tau", num(tau)});
    if (n) argv.insert(argv.end(), {"--n", std::to_string(*n)});
    if (big_n) argv.insert(argv.end(), {"--N", std::to_string(*big_n)});
    if (truncate_eps) argv.insert(argv.end(), {"--truncate", num(*truncate_eps)});
    if (rotated) argv.push_back("--rotated");
    if (fresh_rotations) argv.push_back("--fresh-rotations");
  }

  json config(const SpectralModel& model, const EntryLaw& law_obj, std::uint64_t master) const {
    return {{"model", model_to_json(model)}, {"law", law_obj.descriptor()},
            {"reps", reps},                   {"master_seed", master},
            {"threads", threads},             {"rotated", rotated},
            {"fresh_rotations", fresh_rotations}, {"tau", tau}};
  }
};

// ---- density ---------------------------------------------------------------

struct DensityCmd {
  std::string model_path;
  std::optional<double> e_min, e_max;
  double eta = 1e-6;
  int points = 401;
  std::string out = "density.csv";
  double tau = 0.1;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("density", "densities rho_c, rho_1c, rho_2c on a grid");
    c->add_option("--model", model_path, "model document (JSON)")->required();
    c->add_option("--emin", e_min, "left end of the grid (default 0)");
    c->add_option("--emax", e_max, "right end of the grid (default 1.2 lambda_+)");
    c->add_option("--eta", eta, "imaginary part")->check(CLI::PositiveNumber);
    c->add_option("--points", points, "grid points")->check(CLI::Range(2, 10000000));
    c->add_option("--out", out, "CSV output path");
    c->add_option("--tau", tau, "regularity constant");
  }

  int run(std::ostream& out_stream) const {
    const SpectralModel model = model_from_doc(read_json_file(model_path, "model document"), model_path);
    double lo = e_min.value_or(0.0);
    double hi;
    if (e_max) {
      hi = *e_max;
    } else {
      hi = 1.2 * find_rightmost_edge(model, tau).lambda_plus;
    }
    if (!(lo < hi)) throw UsageError("--emin must be below --emax");
    const DensityCurve curve = density_grid(model, lo, hi, eta, points);
    std::ostringstream csv;
    csv << "E,rho_c,rho_1c,rho_2c\n";
    csv.precision(17);
    const auto clip = [](double v) { return std::isnan(v) ? v : std::max(0.0, v); };
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      csv << curve.grid[i] << ',' << clip(curve.rho_c[i]) << ',' << clip(curve.rho_1c[i]) << ','
          << clip(curve.rho_2c[i]) << '\n';
    }
    write_text(out, csv.str());

    Manifest m;
    m.command = "density";
    m.config = {{"model", model_to_json(model)}, {"emin", lo}, {"emax", hi},
                {"eta", eta},                    {"points", points}};
    m.model_hash = model.hash();
    m.outputs = {out};
    m.replay = {"density", "--model", model_path, "--emin", num(lo), "--emax", num(hi),
                "--eta", num(eta), "--points", std::to_string(points), "--out", out};
    auto failures = json::array();
    for (const auto& [idx, msg] : curve.failures) failures.push_back({{"index", idx}, {"error", msg}});
    m.extra["failures"] = failures;
    write_manifest(m, out + ".manifest.json");
    out_stream << "wrote " << out << " (" << curve.grid.size() << " points, "
               << curve.failures.size() << " failed)\n";
    return 0;
  }
};

// ---- edge ------------------------------------------------------------------

struct EdgeCmd {
  std::string model_path;
  double tau = 0.1;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("edge", "rightmost edge, gamma0, square-root coefficients, support");
    c->add_option("--model", model_path, "model document (JSON)")->required();
    c->add_option("--tau", tau, "regularity constant");
    c->add_option("--out", out, "also write the report to this path");
  }

  int run(std::ostream& out_stream) const {
    const SpectralModel model = model_from_doc(read_json_file(model_path, "model document"), model_path);
    const EdgeReport edge = find_rightmost_edge(model, tau);
    Manifest m;
    m.command = "edge";
    m.config = {{"model", model_to_json(model)}, {"tau", tau}};
    m.model_hash = model.hash();
    m.replay = {"edge", "--model", model_path, "--tau", num(tau)};
    json doc = edge_report_to_json(edge);
    if (out) {
      m.outputs = {*out};
      m.replay.insert(m.replay.end(), {"--out", *out});
      write_text(*out, doc.dump(2) + "\n");
      write_manifest(m, *out + ".manifest.json");
    }
    doc["manifest"] = m.to_json();
    out_stream << doc.dump(2) << '\n';
    return 0;
  }
};

// ---- simulate --------------------------------------------------------------

struct SimulateCmd {
  SamplingOptions opt;
  std::string out = "batch";
  int bins = 60;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "largest-eigenvalue batch with TW rescaling");
    opt.add_to(c, 1000);
    c->add_option("--out", out, "output prefix: <out>.csv, <out>_hist.csv, <out>.manifest.json");
    c->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
  }

  int run(std::ostream& out_stream, std::ostream& err) {
    const SpectralModel model = opt.load();
    const EntryLaw law = opt.make_law(model.big_n);
    const std::uint64_t master = resolve_seed(opt.seed, err);
    const EdgeReport edge = find_rightmost_edge(model, opt.tau);
    BatchConfig bc;
    bc.reps = opt.reps;
    bc.master_seed = master;
    bc.rotated = opt.rotated;
    bc.fresh_rotations = opt.fresh_rotations;
    bc.threads = opt.threads;
    const EnsembleBatch batch = run_batch(model, law, edge, bc);

    const std::string csv = out + ".csv", hist = out + "_hist.csv";
    write_batch_csv(batch, csv);
    write_histogram_csv(batch.rescaled, bins, hist);
    Manifest m;
    m.command = "simulate";
    m.config = opt.config(model, law, master);
    m.config["bins"] = bins;
    m.model_hash = model.hash();
    m.seed = master;
    m.outputs = {csv, hist};
    m.replay = {"simulate"};
    opt.add_replay(m.replay, master);
    m.replay.insert(m.replay.end(), {"--out", out, "--bins", std::to_string(bins)});
    m.extra["batch"] = batch_metadata(batch, edge);
    write_manifest(m, out + ".manifest.json");

    json summary = {{"replicas", batch.rescaled.size()},
                    {"failures", batch.failures.size()},
                    {"rescaled_mean", sample_mean(batch.rescaled)},
                    {"rescaled_sd", sample_sd(batch.rescaled)},
                    {"tw1_mean", Tw1Table::embedded().mean()},
                    {"tw1_sd", Tw1Table::embedded().sd()},
                    {"lambda_plus", edge.lambda_plus},
                    {"gamma0", edge.gamma0},
                    {"outputs", m.outputs},
                    {"manifest", out + ".manifest.json"}};
    out_stream << summary.dump(2) << '\n';
    return 0;
  }
};

// ---- verify ----------------------------------------------------------------

struct VerifyCmd {
  SamplingOptions opt;
  std::string probe;
  double c = 10.0;
  std::optional<double> eps;
  std::vector<std::string> z_points;
  int pairs = 20;
  int j_lo = 10;
  std::optional<int> j_hi;
  double window = 0.5;
  int vectors = 20;
  std::optional<double> min_pass;
  std::string out = "probe";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("verify", "local-law, rigidity and delocalization probes");
    opt.add_to(cmd, 50);
    cmd->add_option("--probe", probe, "probe kind")
        ->required()
        ->check(CLI::IsMember({"averaged", "anisotropic", "rigidity", "delocalization"}));
    cmd->add_option("--c", c, "envelope constant C");
    cmd->add_option("--eps", eps, "envelope exponent (default 0.1; 0 for rigidity and delocalization)");
    cmd->add_option("--z", z_points,
                    "spectral points E,eta (default lambda_+ + i N^{-2/3} for averaged, "
                    "lambda_+ + i N^{-1/2} for anisotropic)");
    cmd->add_option("--pairs", pairs, "vector pairs per replica (anisotropic)");
    cmd->add_option("--j-lo", j_lo, "first index (rigidity)");
    cmd->add_option("--j-hi", j_hi, "last index (rigidity, default n/2)");
    cmd->add_option("--window", window, "edge window c1 (delocalization)");
    cmd->add_option("--vectors", vectors, "test vectors (delocalization)");
    cmd->add_option("--min-pass", min_pass,
                    "required passing fraction of replicas (default 0.95; 0.9 for anisotropic)");
    cmd->add_option("--out", out, "output prefix: <out>.csv, <out>.manifest.json");
  }

  std::vector<ComplexPoint> resolve_points(const EdgeReport& edge, long big_n, ProbeKind kind) const {
    std::vector<ComplexPoint> zs;
    for (const std::string& text : z_points) {
      const auto comma = text.find(',');
      if (comma == std::string::npos) throw UsageError("--z expects E,eta but got '" + text + "'");
      const double e = parse_decimal(text.substr(0, comma));
      const double eta_v = parse_decimal(text.substr(comma + 1));
      if (!(eta_v > 0.0)) throw UsageError("--z needs eta > 0 in '" + text + "'");
      zs.emplace_back(e, eta_v);
    }
    if (zs.empty()) {
      const double power = kind == ProbeKind::averaged ? -2.0 / 3.0 : -0.5;
      zs.emplace_back(edge.lambda_plus, std::pow(static_cast<double>(big_n), power));
    }
    return zs;
  }

  int run(std::ostream& out_stream, std::ostream& err) {
    const ProbeKind kind = parse_probe_kind(probe);
    const SpectralModel model = opt.load();
    const EntryLaw law = opt.make_law(model.big_n);
    const std::uint64_t master = resolve_seed(opt.seed, err);
    const EdgeReport edge = find_rightmost_edge(model, opt.tau);
    ProbeConfig pc;
    pc.c = c;
    const bool index_probe = kind == ProbeKind::rigidity || kind == ProbeKind::delocalization;
    pc.eps = eps.value_or(index_probe ? 0.0 : 0.1);
    const double required = min_pass.value_or(kind == ProbeKind::anisotropic ? 0.9 : 0.95);

    BatchConfig bc;
    bc.reps = opt.reps;
    bc.master_seed = master;
    bc.rotated = opt.rotated;
    bc.fresh_rotations = opt.fresh_rotations;
    bc.threads = opt.threads;
    bc.keep_spectra = true;
    bc.keep_vectors = kind == ProbeKind::anisotropic || kind == ProbeKind::delocalization;
    const EnsembleBatch batch = run_batch(model, law, edge, bc);
    // Test vectors get their own stream, disjoint from the replica seeds.
    const std::uint64_t vector_master = split_seed(master, kFrameStream - 1);

    ProbeReport combined;
    combined.kind = kind;
    combined.cfg = pc;
    combined.big_n = model.big_n;
    double fraction = 0.0;
    if (kind == ProbeKind::averaged) {
      combined = averaged_law_probe(model, batch.spectra,
                                    resolve_points(edge, model.big_n, kind), edge, pc);
      fraction = combined.pass_fraction;
    } else {
      std::optional<ClassicalLocations> locations;
      const int hi = j_hi.value_or(static_cast<int>(model.n / 2));
      if (index_probe) {
        const int needed = kind == ProbeKind::rigidity ? hi : static_cast<int>(model.n);
        locations = classical_locations(model, edge, needed);
      }
      std::vector<ComplexPoint> zs;
      if (kind == ProbeKind::anisotropic) zs = resolve_points(edge, model.big_n, kind);
      std::vector<ProbeReport> reports(batch.spectra.size());
      parallel_for(static_cast<int>(reports.size()), opt.threads, [&](int i) {
        const SampleSpectrum& s = batch.spectra[static_cast<std::size_t>(i)];
        const std::uint64_t vs = split_seed(vector_master, static_cast<std::uint64_t>(batch.replicas[static_cast<std::size_t>(i)]));
        ProbeReport r;
        switch (kind) {
          case ProbeKind::anisotropic: {
            const double q = support_parameter(law, model.big_n);
            r = anisotropic_probe(model, s, zs.front(), pairs, vs, q, pc);
            for (std::size_t k = 1; k < zs.size(); ++k) {
              ProbeReport more = anisotropic_probe(model, s, zs[k], pairs, vs, q, pc);
              r.rows.insert(r.rows.end(), more.rows.begin(), more.rows.end());
              r.max_ratio = std::max(r.max_ratio, more.max_ratio);
            }
            break;
          }
          case ProbeKind::rigidity:
            r = rigidity_probe(s, *locations, j_lo, hi, pc);
            break;
          default:
            r = delocalization_probe(s, edge, *locations, vectors, vs, window, pc);
            break;
        }
        reports[static_cast<std::size_t>(i)] = std::move(r);
      });
      // One row per replica: its worst in-domain row.
      int passing = 0;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const ProbeReport& r = reports[i];
        combined.envelope_formula = r.envelope_formula;
        ProbeRow worst;
        worst.ratio = -1.0;
        for (const ProbeRow& row : r.rows) {
          if (row.in_domain && row.ratio > worst.ratio) worst = row;
        }
        if (worst.ratio < 0.0) {
          worst = ProbeRow{};
          worst.in_domain = false;
        }
        worst.note = "worst row, label " + num(worst.label);
        worst.label = batch.replicas[i];
        const bool ok = r.passed();
        worst.pass_fraction = ok ? 1.0 : 0.0;
        passing += ok ? 1 : 0;
        combined.rows.push_back(worst);
      }
      combined.threshold = pc.c * std::pow(static_cast<double>(model.big_n), pc.eps);
      combined.max_ratio = 0.0;
      for (const ProbeRow& row : combined.rows) {
        if (row.in_domain) combined.max_ratio = std::max(combined.max_ratio, row.ratio);
      }
      fraction = reports.empty() ? 0.0 : static_cast<double>(passing) / reports.size();
      combined.pass_fraction = fraction;
    }

    const std::string csv = out + ".csv";
    write_probe_csv(combined, csv);
    Manifest m;
    m.command = "verify";
    m.config = opt.config(model, law, master);
    m.config.update({{"probe", probe}, {"c", pc.c}, {"eps", pc.eps}, {"min_pass", required}});
    m.model_hash = model.hash();
    m.seed = master;
    m.outputs = {csv};
    m.replay = {"verify", "--probe", probe, "--c", num(pc.c), "--eps", num(pc.eps),
                "--min-pass", num(required), "--out", out};
    opt.add_replay(m.replay, master);
    for (const std::string& zp : z_points) m.replay.insert(m.replay.end(), {"--z", zp});
    if (kind == ProbeKind::anisotropic) m.replay.insert(m.replay.end(), {"--pairs", std::to_string(pairs)});
    if (kind == ProbeKind::rigidity) {
      m.replay.insert(m.replay.end(), {"--j-lo", std::to_string(j_lo), "--j-hi",
                                       std::to_string(j_hi.value_or(static_cast<int>(model.n / 2)))});
    }
    if (kind == ProbeKind::delocalization) {
      m.replay.insert(m.replay.end(),
                      {"--window", num(window), "--vectors", std::to_string(vectors)});
    }
    write_manifest(m, out + ".manifest.json");

    json doc = probe_report_to_json(combined);
    doc["replica_pass_fraction"] = fraction;
    doc["required_pass_fraction"] = required;
    doc["passed"] = fraction >= required;
    doc["manifest"] = m.to_json();
    out_stream << doc.dump(2) << '\n';
    return 0;
  }
};

// ---- detect ----------------------------------------------------------------

struct DetectCmd {
  std::string data_path;
  std::string null_path;
  DetectionConfig cfg;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("detect", "largest-eigenvalue test against a known null");
    c->add_option("--data", data_path, "n x N data CSV, no header")->required();
    c->add_option("--null-model", null_path, "null model document (JSON)")->required();
    c->add_option("--reps", cfg.reps, "calibration replicas; 0 uses the TW1 table only")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--seed", seed, "master seed");
    c->add_option("--level", cfg.level, "test level");
    c->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "also write the report to this path");
  }

  int run(std::ostream& out_stream, std::ostream& err) {
    const NullHypothesis null = load_null_hypothesis(null_path);
    const Eigen::MatrixXd data = read_matrix_csv(data_path);
    cfg.seed = cfg.reps > 0 ? resolve_seed(seed, err) : seed.value_or(0);
    const DetectionReport rep = detect_signal(data, null, cfg);
    Manifest m;
    m.command = "detect";
    m.config = {{"data", data_path},
                {"null_model", null_path},
                {"reps", cfg.reps},
                {"master_seed", cfg.seed},
                {"level", cfg.level},
                {"threads", cfg.threads}};
    m.model_hash = null.model.hash();
    if (cfg.reps > 0) m.seed = cfg.seed;
    m.replay = {"detect", "--data", data_path, "--null-model", null_path,
                "--reps", std::to_string(cfg.reps), "--seed", std::to_string(cfg.seed),
                "--level", num(cfg.level), "--threads", std::to_string(cfg.threads)};
    json doc = detection_report_to_json(rep);
    if (out) {
      m.outputs = {*out};
      m.replay.insert(m.replay.end(), {"--out", *out});
      write_text(*out, doc.dump(2) + "\n");
      write_manifest(m, *out + ".manifest.json");
    }
    doc["manifest"] = m.to_json();
    out_stream << doc.dump(2) << '\n';
    return 0;
  }
};

// ---- selftest --------------------------------------------------------------

struct SelftestCmd {
  std::optional<std::string> tw1_table;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("selftest", "closed-form oracle checks");
    c->add_option("--tw1-table", tw1_table, "check this TW1 table instead of the embedded one");
  }

  int run(std::ostream& out_stream) const {
    std::optional<std::filesystem::path> path;
    if (tw1_table) path = *tw1_table;
    const std::vector<SelftestCheck> checks = run_selftest(path);
    int passed = 0;
    for (const SelftestCheck& c : checks) {
      out_stream << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      passed += c.passed ? 1 : 0;
    }
    out_stream << "selftest: " << passed << " of " << checks.size() << " checks passed\n";
    return 0;
  }
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Separable sample covariance spectra: deterministic law, edge, simulation"};
  app.set_version_flag("--version", SEPCOV_VERSION);
  app.require_subcommand(1, 1);
  DensityCmd density;
  EdgeCmd edge;
  SimulateCmd simulate;
  VerifyCmd verify;
  DetectCmd detect;
  SelftestCmd selftest;
  density.add(app);
  edge.add(app);
  simulate.add(app);
  verify.add(app);
  detect.add(app);
  selftest.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "usage error: " << e.what() << " (see --help)\n";
    return 2;
  }

  try {
    if (app.got_subcommand("density")) return density.run(out);
    if (app.got_subcommand("edge")) return edge.run(out);
    if (app.got_subcommand("simulate")) return simulate.run(out, err);
    if (app.got_subcommand("verify")) return verify.run(out, err);
    if (app.got_subcommand("detect")) return detect.run(out, err);
    return selftest.run(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sepcov::cli
