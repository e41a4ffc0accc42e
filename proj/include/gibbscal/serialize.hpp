#pragma once

#include <json.hpp>

#include <string>

#include "gibbscal/ensemble_wasp.hpp"
#include "gibbscal/gibbs_sampler.hpp"
#include "gibbscal/gp_discrepancy.hpp"
#include "gibbscal/scale_tuning.hpp"

namespace gibbscal {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// One draw per row, header = parameter names.
std::string posterior_csv(const PosteriorSample& sample);
Json posterior_sidecar(const PosteriorSample& sample);

/// `w,coverage,stderr,B`
std::string coverage_csv(const CoverageCurve& curve);
Json coverage_json(const CoverageCurve& curve);

Json to_json(const SqExpKernel& kernel);
SqExpKernel kernel_from_json(const Json& j);

Json to_json(const CredibleInterval& ci);

Json to_json(const GaussianSummary& summary);
GaussianSummary summary_from_json(const Json& j);

Json to_json(const ConsensusPosterior& consensus);

Json vector_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

std::string to_string(ConsensusScaling scaling);
ConsensusScaling consensus_scaling_from_string(const std::string& s);

/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

}  // namespace gibbscal
