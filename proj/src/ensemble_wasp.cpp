#include "gibbscal/ensemble_wasp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gibbscal/errors.hpp"

namespace gibbscal {

namespace {

constexpr double kEigenFloor = 1e-12;

Eigen::MatrixXd spectral_power(const Eigen::MatrixXd& A, double power) {
  const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Conditioning, "eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  if (vals.minCoeff() < kEigenFloor)
    fail(ErrorKind::Conditioning, "matrix has eigenvalue " + std::to_string(vals.minCoeff()) + " below 1e-12");
  const Eigen::VectorXd powered = vals.array().pow(power);
  return eig.eigenvectors() * powered.asDiagonal() * eig.eigenvectors().transpose();
}

void check_dims(const std::vector<Eigen::MatrixXd>& covs) {
  if (covs.empty()) fail(ErrorKind::Structural, "no covariance matrices to combine");
  const auto d = covs.front().rows();
  for (const auto& c : covs)
    if (c.rows() != d || c.cols() != d) fail(ErrorKind::Structural, "covariance matrices differ in dimension");
}

// Reductions run over inputs sorted by their entries, so the result does not
// depend on the order the caller listed them in, to the last bit.
std::vector<std::size_t> canonical_order(const std::vector<Eigen::VectorXd>& keys) {
  std::vector<std::size_t> idx(keys.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(keys[a].begin(), keys[a].end(), keys[b].begin(), keys[b].end());
  });
  return idx;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

}  // namespace

void GaussianSummary::validate() const {
  const auto d = mean.size();
  if (cov.rows() != d || cov.cols() != d) fail(ErrorKind::Structural, "summary mean and covariance dimensions differ");
  if (!mean.allFinite() || !cov.allFinite()) fail(ErrorKind::Conditioning, "summary has non-finite entries");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    fail(ErrorKind::Conditioning, "summary covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0)) fail(ErrorKind::Conditioning, "summary covariance is not positive definite");
}

Eigen::MatrixXd sqrtm_spd(const Eigen::MatrixXd& A) { return spectral_power(A, 0.5); }
Eigen::MatrixXd inv_sqrtm_spd(const Eigen::MatrixXd& A) { return spectral_power(A, -0.5); }

Eigen::MatrixXd barycenter_update(const Eigen::MatrixXd& S, const std::vector<Eigen::MatrixXd>& covs) {
  check_dims(covs);
  const Eigen::MatrixXd root = sqrtm_spd(S);
  const Eigen::MatrixXd inv_root = inv_sqrtm_spd(S);
  std::vector<Eigen::VectorXd> keys;
  for (const auto& c : covs) keys.push_back(flatten(c));
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(S.rows(), S.cols());
  for (std::size_t k : canonical_order(keys)) avg += sqrtm_spd(root * covs[k] * root);
  avg /= static_cast<double>(covs.size());
  Eigen::MatrixXd next = inv_root * avg * avg * inv_root;
  return 0.5 * (next + next.transpose());
}

BarycenterResult barycenter_covariance(const std::vector<Eigen::MatrixXd>& covs, double tol, int max_iter) {
  check_dims(covs);
  if (!(tol > 0)) fail(ErrorKind::Configuration, "barycenter tolerance must be positive");
  if (max_iter < 1) fail(ErrorKind::Configuration, "barycenter max_iter must be >= 1");
  BarycenterResult out;
  out.cov = Eigen::MatrixXd::Identity(covs.front().rows(), covs.front().cols());
  for (int i = 1; i <= max_iter; ++i) {
    Eigen::MatrixXd next = barycenter_update(out.cov, covs);
    const double change = (next - out.cov).norm();
    out.cov = std::move(next);
    out.iterations = i;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Eigen::VectorXd consensus_mean(const std::vector<GaussianSummary>& summaries) {
  if (summaries.empty()) fail(ErrorKind::Structural, "no summaries to combine");
  const auto d = summaries.front().mean.size();
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::VectorXd> keys;
  for (const auto& s : summaries) {
    if (s.mean.size() != d || s.cov.rows() != d || s.cov.cols() != d)
      fail(ErrorKind::Structural, "summaries differ in dimension");
    Eigen::VectorXd key(d + d * d);
    key << s.mean, flatten(s.cov);
    keys.push_back(std::move(key));
  }
  for (std::size_t k : canonical_order(keys)) {
    const auto& s = summaries[k];
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s.cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0).any())
      fail(ErrorKind::Conditioning, "summary '" + s.id + "' has a singular covariance");
    const Eigen::MatrixXd P = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    precision += P;
    weighted += P * s.mean;
  }
  Eigen::LDLT<Eigen::MatrixXd> total(precision);
  if (total.info() != Eigen::Success || (total.vectorD().array() <= 0).any())
    fail(ErrorKind::Conditioning, "sum of precision matrices is singular");
  return total.solve(weighted);
}

ConsensusPosterior combine(const std::vector<GaussianSummary>& summaries, ConsensusScaling scaling, double tol,
                           int max_iter) {
  if (summaries.empty()) fail(ErrorKind::Structural, "no summaries to combine");
  std::vector<Eigen::MatrixXd> covs;
  for (const auto& s : summaries) {
    s.validate();
    covs.push_back(s.cov);
  }
  const auto bary = barycenter_covariance(covs, tol, max_iter);
  ConsensusPosterior out;
  out.mean = consensus_mean(summaries);
  out.cov = bary.cov;
  if (scaling == ConsensusScaling::AcrossExperiments) out.cov /= static_cast<double>(summaries.size());
  out.scaling = scaling;
  out.iterations_used = bary.iterations;
  out.converged = bary.converged;
  return out;
}

double subset_loss_multiplier(ConsensusScaling scaling, std::size_t K) {
  return scaling == ConsensusScaling::WithinExperiment ? static_cast<double>(K) : 1.0;
}

GaussianSummary gaussianize(const PosteriorSample& sample, const std::optional<std::vector<Eigen::Index>>& coords,
                            std::string id) {
  if (sample.size() < 100) fail(ErrorKind::Precision, "gaussianize needs at least 100 draws");
  Eigen::MatrixXd draws;
  if (coords) {
    draws.resize(sample.size(), static_cast<Eigen::Index>(coords->size()));
    for (std::size_t j = 0; j < coords->size(); ++j) {
      const Eigen::Index c = (*coords)[j];
      if (c < 0 || c >= sample.draws.cols()) fail(ErrorKind::Structural, "coordinate index out of range");
      draws.col(static_cast<Eigen::Index>(j)) = sample.draws.col(c);
    }
  } else {
    draws = sample.draws;
  }
  GaussianSummary out;
  out.id = std::move(id);
  out.n_draws = draws.rows();
  out.mean = draws.colwise().mean();
  const Eigen::MatrixXd centred = draws.rowwise() - out.mean.transpose();
  out.cov = centred.transpose() * centred / static_cast<double>(draws.rows() - 1);
  out.cov = 0.5 * (out.cov + out.cov.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.cov, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * top) || top == 0.0)
    fail(ErrorKind::Conditioning, "sample covariance is rank deficient");

  const auto n = static_cast<double>(draws.rows());
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    const double m2 = centred.col(j).squaredNorm() / n;
    const double m3 = centred.col(j).array().cube().sum() / n;
    const double skew = m3 / std::pow(m2, 1.5);
    if (std::abs(skew) > 1.0)
      out.warnings.push_back("coordinate " + std::to_string(j) + " has skewness " + std::to_string(skew) +
                             "; Gaussian summary may be poor");
  }
  return out;
}

}  // namespace gibbscal
