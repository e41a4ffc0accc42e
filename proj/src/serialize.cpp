#include "gibbscal/serialize.hpp"

#include "gibbscal/data_io.hpp"
#include "gibbscal/errors.hpp"

namespace gibbscal {

std::string posterior_csv(const PosteriorSample& sample) {
  std::string out;
  for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
    if (j > 0) out += ',';
    const auto idx = static_cast<std::size_t>(j);
    out += idx < sample.names.size() ? sample.names[idx] : "theta" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < sample.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(sample.draws(i, j));
    }
    out += '\n';
  }
  return out;
}

Json posterior_sidecar(const PosteriorSample& sample) {
  return Json{{"schema_version", kSchemaVersion}, {"w", sample.w},         {"seed", sample.rng_seed},
              {"acceptance_rate", sample.acceptance_rate}, {"n_iter", sample.n_iter}, {"n_burn", sample.n_burn}};
}

std::string coverage_csv(const CoverageCurve& curve) {
  std::string out = "w,coverage,stderr,B\n";
  for (const auto& p : curve.points)
    out += format_double(p.w) + ',' + format_double(p.coverage) + ',' + format_double(p.std_error) + ',' +
           std::to_string(curve.B) + '\n';
  return out;
}

Json coverage_json(const CoverageCurve& curve) {
  Json pts = Json::array();
  for (const auto& p : curve.points) pts.push_back({{"w", p.w}, {"coverage", p.coverage}, {"stderr", p.std_error}});
  return Json{{"B", curve.B}, {"alpha", curve.alpha}, {"failed", curve.failed}, {"points", pts}};
}

Json to_json(const SqExpKernel& kernel) {
  return Json{{"s2", kernel.s2}, {"length_scale", kernel.length_scale}, {"nugget", kernel.nugget}};
}

SqExpKernel kernel_from_json(const Json& j) {
  SqExpKernel k{j.at("s2").get<double>(), j.at("length_scale").get<double>(), j.value("nugget", 0.0)};
  k.validate();
  return k;
}

Json to_json(const CredibleInterval& ci) {
  return Json{{"alpha", ci.alpha}, {"lo", vector_json(ci.lo)}, {"hi", vector_json(ci.hi)}};
}

Json to_json(const GaussianSummary& s) {
  return Json{{"schema_version", kSchemaVersion}, {"id", s.id},           {"n_draws", s.n_draws},
              {"mean", vector_json(s.mean)},       {"cov", matrix_json(s.cov)}, {"warnings", s.warnings}};
}

GaussianSummary summary_from_json(const Json& j) {
  try {
    GaussianSummary s;
    s.id = j.value("id", std::string{});
    s.n_draws = j.value("n_draws", Eigen::Index{0});
    s.mean = vector_from_json(j.at("mean"));
    s.cov = matrix_from_json(j.at("cov"));
    if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed summary JSON: ") + e.what());
  }
}

Json to_json(const ConsensusPosterior& c) {
  return Json{{"schema_version", kSchemaVersion},
              {"scaling", to_string(c.scaling)},
              {"mean", vector_json(c.mean)},
              {"cov", matrix_json(c.cov)},
              {"iterations_used", c.iterations_used},
              {"converged", c.converged}};
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorKind::Data, "expected a JSON array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::Data, "expected a JSON array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorKind::Data, "expected a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != m.cols()) fail(ErrorKind::Data, "ragged matrix rows");
    m.row(i) = row.transpose();
  }
  return m;
}

std::string to_string(ConsensusScaling scaling) {
  return scaling == ConsensusScaling::WithinExperiment ? "within_experiment" : "across_experiments";
}

ConsensusScaling consensus_scaling_from_string(const std::string& s) {
  if (s == "within_experiment") return ConsensusScaling::WithinExperiment;
  if (s == "across_experiments") return ConsensusScaling::AcrossExperiments;
  fail(ErrorKind::Configuration, "scaling must be within_experiment or across_experiments, got '" + s + "'");
}

std::string dump(const Json& j) { return j.dump(2) + '\n'; }

}  // namespace gibbscal
