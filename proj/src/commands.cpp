#include "gibbscal/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "gibbscal/data_io.hpp"
#include "gibbscal/harness.hpp"
#include "gibbscal/parallel.hpp"
#include "gibbscal/run_config.hpp"

namespace fs = std::filesystem;

namespace gibbscal {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int report_error(const std::string& command, ErrorKind kind, const std::string& message,
                 const std::optional<fs::path>& dir, std::ostream& err, std::optional<int> code = {}) {
  const int exit_code = code ? *code : exit_code_for(kind);
  const Json j{{"schema_version", kSchemaVersion},
               {"command", command},
               {"error", {{"kind", std::string(to_string(kind))}, {"message", message}, {"exit_code", exit_code}}}};
  err << j.dump() << '\n';
  if (dir) {
    try {
      write_file_atomic(*dir / "error.json", dump(j));
    } catch (const Error&) {
    }
  }
  return exit_code;
}

struct ExperimentOutcome {
  std::string id;
  double w = 0.0;
  fs::path summary_path;
  fs::path gaussian_path;
  GaussianSummary summary;
};

ExperimentOutcome calibrate_experiment(const RunConfig& cfg, const ExperimentData& data, std::size_t index,
                                       std::size_t K, const fs::path& out_dir) {
  const ModelPtr model = cfg.make_model();
  const ParameterPrior prior = cfg.make_prior();
  const std::uint64_t exp_seed = split_seed(cfg.tuning.seed, index);
  const Eigen::Index d = static_cast<Eigen::Index>(model->dim_theta());
  const Eigen::VectorXd& x = data.x();

  DiscrepancyPrior disc = cfg.make_discrepancy(cfg.discrepancy.kernel);
  GibbsPosteriorSpec spec{model, data, cfg.make_loss(disc.expected(x)), prior, 1.0};
  const Eigen::VectorXd theta_hat = map_estimate(spec, MapConfig{8, split_seed(exp_seed, 1)});
  const Eigen::VectorXd residuals = empirical_discrepancy(data, *model, theta_hat.head(d));

  Json summary{{"schema_version", kSchemaVersion}, {"id", data.id()}, {"theta_hat", vector_json(theta_hat)}};
  if (cfg.discrepancy.type == "gp_empirical_bayes") {
    SqExpKernel init = cfg.discrepancy.kernel;
    const double v = residuals.squaredNorm() / static_cast<double>(residuals.size());
    if (v > 0) init = SqExpKernel{v, 0.1 * (x(x.size() - 1) - x(0)), 1e-3 * v};
    const SqExpKernel fitted = fit_gp_mle(residuals, x, init);
    disc = cfg.make_discrepancy(fitted);
    summary["kernel"] = to_json(fitted);
  } else if (cfg.discrepancy.type == "gp_explicit") {
    summary["kernel"] = to_json(cfg.discrepancy.kernel);
  }

  const fs::path dir = out_dir / data.id();
  double w = cfg.tuning.w;
  if (cfg.tuning.method == "ess") {
    const double n_e = effective_sample_size(residuals, x);
    w = n_e / static_cast<double>(x.size());
    summary["n_e"] = n_e;
  } else if (cfg.tuning.method == "bootstrap") {
    BootstrapConfig bc = cfg.make_bootstrap();
    bc.seed = split_seed(exp_seed, 2);
    const CoverageCurve curve = bootstrap_coverage(spec, disc, bc);
    w = select_loss_scale(curve, 1.0 - cfg.tuning.alpha, cfg.tuning.policy);
    write_file_atomic(dir / "coverage.csv", coverage_csv(curve));
    summary["bootstrap"] = {{"B", curve.B}, {"failed", curve.failed}};
  }
  const double multiplier = cfg.ensemble.loss_multiplier ? subset_loss_multiplier(cfg.ensemble.scaling, K) : 1.0;
  spec.w = w * multiplier;

  SamplerConfig sc;
  sc.n_iter = cfg.sampler.n_iter;
  sc.n_burn = cfg.sampler.n_burn;
  sc.seed = split_seed(exp_seed, 3);
  const PosteriorSample sample = sample_gibbs(spec, sc);
  const CredibleInterval ci = credible_interval(sample, cfg.tuning.alpha);
  std::vector<Eigen::Index> physical(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) physical[static_cast<std::size_t>(j)] = j;
  const GaussianSummary gs = gaussianize(sample, physical, data.id());

  summary["w_selected"] = w;
  summary["w"] = spec.w;
  summary["tuning_method"] = cfg.tuning.method;
  summary["interval"] = to_json(ci);
  summary["median"] = vector_json(posterior_median(sample));
  summary["acceptance_rate"] = sample.acceptance_rate;
  summary["names"] = sample.names;
  summary["warnings"] = gs.warnings;

  write_file_atomic(dir / "posterior.csv", posterior_csv(sample));
  write_file_atomic(dir / "posterior.json", dump(posterior_sidecar(sample)));
  write_file_atomic(dir / "summary.json", dump(summary));
  write_file_atomic(dir / "gaussian_summary.json", dump(to_json(gs)));
  return ExperimentOutcome{data.id(), spec.w, fs::path(data.id()) / "summary.json",
                           fs::path(data.id()) / "gaussian_summary.json", gs};
}

// One tolerance check printed as a PASS/FAIL line.
struct Check {
  std::string name;
  double value;
  double lo;
  double hi;
  std::string expectation;
};

bool print_checks(const std::vector<Check>& checks, std::ostream& out) {
  bool ok = true;
  for (const auto& c : checks) {
    // Bounds are inclusive; the slack absorbs rounding in target +/- tol.
    const double slack = 1e-9 * (1.0 + std::abs(c.lo) + std::abs(c.hi));
    const bool pass = c.value >= c.lo - slack && c.value <= c.hi + slack;
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << c.name << " = " << format_double(c.value) << " (" << c.expectation << ")\n";
  }
  return ok;
}

Check near(std::string name, double value, double target, double tol, const std::string& what = "reference") {
  return Check{std::move(name), value, target - tol, target + tol,
               what + " " + format_double(target) + " +/- " + format_double(tol)};
}

std::optional<Json> load_golden(const ReproduceOptions& o, const std::string& file, std::ostream& out) {
  const fs::path p = o.golden_dir / file;
  if (o.golden_dir.empty() || !fs::exists(p)) {
    out << "note: no golden file at " << p.string() << "; checking reference anchors only\n";
    return std::nullopt;
  }
  return Json::parse(read_file(p));
}

bool check_toy(const ToyReport& r, const std::optional<Json>& golden, std::ostream& out) {
  std::vector<Check> checks;
  const auto add_method = [&](ToyMethod m, const std::string& tag, double lo, double hi, double tol) {
    const auto* res = r.find(m);
    checks.push_back(near(tag + ".ci_lo", res->ci_lo, lo, tol));
    checks.push_back(near(tag + ".ci_hi", res->ci_hi, hi, tol));
  };
  add_method(ToyMethod::Mle, "mle", 0.56, 0.57, 0.02);
  add_method(ToyMethod::GlsKoh, "gls_koh", 0.48, 0.58, 0.04);
  checks.push_back(near("ess_power.n_e", r.find(ToyMethod::EssPower)->n_e, 1.4, 0.5));
  add_method(ToyMethod::EssPower, "ess_power", 0.43, 0.70, 0.08);
  const auto* gb = r.find(ToyMethod::GibbsBootstrap);
  checks.push_back(Check{"gibbs_bootstrap.w", gb->w, 0.5, 2.0, "reference range [0.5, 2]"});
  add_method(ToyMethod::GibbsBootstrap, "gibbs_bootstrap", 0.58, 0.70, 0.05);
  checks.push_back(Check{"gibbs_bootstrap.contains_0.65", gb->ci_lo <= 0.65 && 0.65 <= gb->ci_hi ? 1.0 : 0.0, 1.0,
                         1.0, "interval contains 0.65"});
  if (golden) {
    const std::map<std::string, double> tol{{"mle", 0.02}, {"gls_koh", 0.04}, {"ess_power", 0.08},
                                            {"gibbs_bootstrap", 0.05}};
    for (const auto& g : golden->at("methods")) {
      const std::string name = g.at("method").get<std::string>();
      for (const auto& res : r.methods) {
        if (to_string(res.method) != name) continue;
        checks.push_back(near(name + ".ci_lo", res.ci_lo, g.at("ci_lo").get<double>(), tol.at(name), "golden"));
        checks.push_back(near(name + ".ci_hi", res.ci_hi, g.at("ci_hi").get<double>(), tol.at(name), "golden"));
      }
    }
  }
  return print_checks(checks, out);
}

struct TableRow {
  SimMethod method;
  double autocorr;
  double fixed_w, fixed_cov, est_w, est_cov;
};
const std::vector<TableRow> kTable{{SimMethod::ParametricBootstrap, 0.1, 0.08, 0.95, 0.10, 0.92},
                                   {SimMethod::Ess, 0.1, 0.10, 0.94, 0.13, 0.91},
                                   {SimMethod::ParametricBootstrap, 0.2, 0.03, 0.99, 0.05, 0.89},
                                   {SimMethod::Ess, 0.2, 0.05, 0.93, 0.08, 0.86}};

bool check_simulation(const std::vector<SimulationRow>& rows, std::ostream& out) {
  std::vector<Check> checks;
  for (const auto& r : rows) {
    if (r.setting.tuning != TuningMode::Estimated) continue;
    for (const auto& t : kTable) {
      if (t.method != r.setting.method || t.autocorr != r.setting.autocorr) continue;
      const std::string tag = to_string(t.method) + "@" + format_double(t.autocorr);
      checks.push_back(near(tag + ".coverage", r.coverage, t.est_cov, 0.07));
      checks.push_back(Check{tag + ".E_w", r.E_w, t.est_w / 2.0, t.est_w * 2.0,
                             "reference " + format_double(t.est_w) + " within a factor of 2"});
    }
  }
  return print_checks(checks, out);
}

bool check_ensemble(const EnsembleReport& r, const std::optional<Json>& golden, std::ostream& out) {
  std::vector<Check> checks;
  checks.push_back(Check{"consensus_pb.converged", r.consensus_pb.converged ? 1.0 : 0.0, 1, 1, "true"});
  checks.push_back(Check{"consensus_ess.converged", r.consensus_ess.converged ? 1.0 : 0.0, 1, 1, "true"});
  if (r.spec.scaling == ConsensusScaling::AcrossExperiments) {
    checks.push_back(Check{"consensus_pb.narrower", r.consensus_narrower_pb ? 1.0 : 0.0, 1, 1, "true"});
    checks.push_back(Check{"consensus_ess.narrower", r.consensus_narrower_ess ? 1.0 : 0.0, 1, 1, "true"});
  }
  if (golden) {
    for (const char* key : {"consensus_pb", "consensus_ess"}) {
      const auto& c = std::string(key) == "consensus_pb" ? r.consensus_pb : r.consensus_ess;
      const Eigen::VectorXd g = vector_from_json(golden->at(key).at("mean"));
      for (Eigen::Index j = 0; j < g.size(); ++j)
        checks.push_back(near(std::string(key) + ".mean[" + std::to_string(j) + "]", c.mean(j), g(j),
                              0.5 * std::sqrt(c.cov(j, j)), "golden"));
    }
  }
  return print_checks(checks, out);
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration:
      return kExitConfig;
    case ErrorKind::Data:
      return kExitData;
    default:
      return kExitNumeric;
  }
}

int cmd_calibrate(const fs::path& config_path, const CalibrateOptions& options, std::ostream& out, std::ostream& err) {
  std::optional<fs::path> out_dir;
  try {
    RunConfig cfg = RunConfig::load(config_path);
    if (options.seed) cfg.tuning.seed = *options.seed;
    out_dir = options.output ? *options.output : cfg.resolve(cfg.output_directory);
    // Embedded config carries absolute data paths so the run can be redone
    // from the output directory alone.
    RunConfig resolved = cfg;
    for (auto& e : resolved.data) e.path = fs::absolute(cfg.resolve(e.path)).lexically_normal().string();
    resolved.output_directory = fs::absolute(*out_dir).lexically_normal().string();

    std::vector<ExperimentData> datasets;
    for (const auto& src : cfg.data) datasets.push_back(read_experiment_csv(cfg.resolve(src.path), src.id));

    std::vector<ExperimentOutcome> outcomes(datasets.size());
    parallel_for(datasets.size(), options.threads, [&](std::size_t i) {
      outcomes[i] = calibrate_experiment(cfg, datasets[i], i, datasets.size(), *out_dir);
    });

    std::vector<GaussianSummary> summaries;
    Json experiments = Json::array();
    for (const auto& o : outcomes) {
      summaries.push_back(o.summary);
      experiments.push_back({{"id", o.id},
                             {"w", o.w},
                             {"summary", o.summary_path.generic_string()},
                             {"gaussian_summary", o.gaussian_path.generic_string()}});
    }
    const ConsensusPosterior consensus = combine(summaries, cfg.ensemble.scaling, cfg.ensemble.tol, cfg.ensemble.max_iter);
    write_file_atomic(*out_dir / "consensus.json", dump(to_json(consensus)));
    write_file_atomic(*out_dir / "config.json", dump(resolved.to_json()));
    const Json manifest{{"schema_version", kSchemaVersion},
                        {"scaling", to_string(cfg.ensemble.scaling)},
                        {"experiments", experiments},
                        {"consensus", "consensus.json"},
                        {"config", resolved.to_json()},
                        {"metadata", {{"created_utc", utc_timestamp()}}}};
    write_file_atomic(*out_dir / "manifest.json", dump(manifest));
    for (const auto& o : outcomes) out << o.id << ": w = " << format_double(o.w) << '\n';
    out << "wrote " << out_dir->string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    return report_error("calibrate", e.kind(), e.what(), out_dir, err);
  } catch (const std::exception& e) {
    return report_error("calibrate", ErrorKind::Structural, e.what(), out_dir, err, kExitNumeric);
  }
}

int cmd_combine(const fs::path& manifest_path, std::optional<ConsensusScaling> scaling, const fs::path& output,
                std::ostream& out, std::ostream& err) {
  try {
    Json manifest;
    try {
      manifest = Json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Configuration, std::string("manifest is not valid JSON: ") + e.what());
    }
    std::vector<fs::path> paths;
    if (manifest.contains("summaries")) {
      for (const auto& p : manifest.at("summaries")) paths.emplace_back(p.get<std::string>());
    } else if (manifest.contains("experiments")) {
      for (const auto& e : manifest.at("experiments")) paths.emplace_back(e.at("gaussian_summary").get<std::string>());
    } else {
      fail(ErrorKind::Configuration, "manifest lists neither 'summaries' nor 'experiments'");
    }
    if (paths.empty()) fail(ErrorKind::Configuration, "manifest lists no summaries");
    ConsensusScaling chosen = ConsensusScaling::WithinExperiment;
    if (manifest.contains("scaling")) chosen = consensus_scaling_from_string(manifest.at("scaling").get<std::string>());
    if (scaling) chosen = *scaling;

    std::vector<GaussianSummary> summaries;
    for (const auto& p : paths) {
      const fs::path full = p.is_absolute() ? p : manifest_path.parent_path() / p;
      Json j;
      try {
        j = Json::parse(read_file(full));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Data, full.string() + " is not valid JSON: " + e.what());
      }
      GaussianSummary s = summary_from_json(j);
      if (s.id.empty()) s.id = full.stem().string();
      summaries.push_back(std::move(s));
    }
    const auto d = summaries.front().mean.size();
    for (const auto& s : summaries)
      if (s.mean.size() != d || s.cov.rows() != d || s.cov.cols() != d)
        fail(ErrorKind::Data, "summary '" + s.id + "' has dimension " + std::to_string(s.mean.size()) + ", expected " +
                                  std::to_string(d));

    const ConsensusPosterior consensus = combine(summaries, chosen);
    std::string table = "id,coord,mean,variance\n";
    for (const auto& s : summaries)
      for (Eigen::Index j = 0; j < d; ++j)
        table += s.id + ',' + std::to_string(j) + ',' + format_double(s.mean(j)) + ',' + format_double(s.cov(j, j)) + '\n';
    for (Eigen::Index j = 0; j < d; ++j)
      table += "consensus," + std::to_string(j) + ',' + format_double(consensus.mean(j)) + ',' +
               format_double(consensus.cov(j, j)) + '\n';
    write_file_atomic(output / "consensus.json", dump(to_json(consensus)));
    write_file_atomic(output / "comparison.csv", table);
    out << table;
    return kExitOk;
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::Structural ? kExitData : exit_code_for(e.kind());
    return report_error("combine", e.kind(), e.what(), output, err, code);
  } catch (const std::exception& e) {
    return report_error("combine", ErrorKind::Data, e.what(), output, err, kExitData);
  }
}

int cmd_reproduce(const ReproduceOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.target == "toy") {
      ToyProblemSpec spec;
      spec.threads = o.threads;
      const ToyReport report = run_toy(spec);
      write_file_atomic(o.output / "toy.json", dump(to_json(report)));
      for (const auto& m : report.methods)
        out << to_string(m.method) << ": estimate " << format_double(m.estimate) << ", interval ("
            << format_double(m.ci_lo) << ", " << format_double(m.ci_hi) << ")\n";
      if (o.check && !check_toy(report, load_golden(o, "toy.json", out), out)) return kExitNumeric;
      return kExitOk;
    }
    if (o.target == "simulation-table") {
      SimulationConfig cfg;
      cfg.threads = o.threads;
      if (o.n_mc) cfg.n_mc = *o.n_mc;
      if (o.policy) cfg.policy = *o.policy;
      std::vector<SimulationRow> rows;
      std::vector<TuningMode> modes{TuningMode::Estimated};
      if (o.with_fixed) modes.insert(modes.begin(), TuningMode::Fixed);
      for (auto mode : modes)
        for (const auto& t : kTable) {
          rows.push_back(run_simulation_study(SimulationSetting{t.autocorr, mode, t.method, false}, cfg));
          out << to_string(t.method) << ',' << format_double(t.autocorr) << ',' << to_string(mode) << ','
              << format_double(rows.back().E_w) << ',' << format_double(rows.back().coverage) << std::endl;
        }
      Json j{{"schema_version", kSchemaVersion}, {"target", "simulation-table"}, {"n_mc", cfg.n_mc}, {"rows", Json::array()}};
      for (const auto& r : rows) j["rows"].push_back(to_json(r));
      write_file_atomic(o.output / "simulation_table.csv", simulation_table_csv(rows));
      write_file_atomic(o.output / "simulation_table.json", dump(j));
      if (o.check && !check_simulation(rows, out)) return kExitNumeric;
      return kExitOk;
    }
    if (o.target == "ensemble-demo") {
      SyntheticEnsembleSpec spec;
      spec.threads = o.threads;
      const EnsembleReport report = run_ensemble_demo(spec);
      write_file_atomic(o.output / "ensemble_demo.json", dump(to_json(report)));
      for (const auto& e : report.experiments)
        out << e.id << ": w_pb " << format_double(e.w_pb) << ", w_ess " << format_double(e.w_ess) << '\n';
      out << "consensus (pb) mean " << report.consensus_pb.mean.transpose() << '\n';
      out << "consensus (ess) mean " << report.consensus_ess.mean.transpose() << '\n';
      if (o.check && !check_ensemble(report, load_golden(o, "ensemble_demo.json", out), out)) return kExitNumeric;
      return kExitOk;
    }
    return report_error("reproduce", ErrorKind::Configuration,
                        "unknown target '" + o.target + "'; expected toy, simulation-table or ensemble-demo",
                        std::nullopt, err);
  } catch (const Error& e) {
    return report_error("reproduce", e.kind(), e.what(), o.output, err);
  }
}

}  // namespace gibbscal
