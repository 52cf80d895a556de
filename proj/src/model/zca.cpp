#include "nbloom/model/zca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "nbloom/error.hpp"

namespace nbloom::model {

using diff::Array;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ZcaState ZcaState::identity(std::size_t dim) {
  ZcaState z;
  z.mean = Array({dim});
  z.second = Array({dim, dim});
  z.theta = Array({dim, dim});
  z.center = Array({dim});
  for (std::size_t i = 0; i < dim; ++i) z.theta.at(i, i) = 1.0;
  return z;
}

void ZcaState::store(diff::ParamStore& params, const std::string& prefix) const {
  params.set(prefix + "/mean", mean);
  params.set(prefix + "/second", second);
  params.set(prefix + "/theta", theta);
  params.set(prefix + "/center", center);
  params.set(prefix + "/step", Array::scalar(static_cast<double>(step)));
}

ZcaState ZcaState::load(const diff::ParamStore& params, const std::string& prefix) {
  ZcaState z;
  z.mean = params.get(prefix + "/mean");
  z.second = params.get(prefix + "/second");
  z.theta = params.get(prefix + "/theta");
  z.center = params.get(prefix + "/center");
  z.step = static_cast<std::uint64_t>(params.get(prefix + "/step").item());
  return z;
}

Array zca_whitening(const Array& covariance, double epsilon) {
  if (covariance.rank() != 2 || covariance.dim(0) != covariance.dim(1)) {
    throw Error("zca: covariance must be square, got " + diff::shape_string(covariance.shape()));
  }
  if (!covariance.all_finite()) throw Error("zca: non-finite moment estimate");
  const auto d = static_cast<Eigen::Index>(covariance.dim(0));
  Eigen::Map<const RowMat> c(covariance.data(), d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(c.selfadjointView<Eigen::Lower>()));
  if (eig.info() != Eigen::Success) throw Error("zca: eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  Eigen::VectorXd inv_sqrt = (lambda.array() + epsilon).rsqrt();
  Eigen::MatrixXd w = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  Array out({covariance.dim(0), covariance.dim(0)});
  Eigen::Map<RowMat>(out.data(), d, d) = w;
  return out;
}

Array zca_covariance(const ZcaState& state, const ZcaConfig& config) {
  const std::size_t d = state.dim();
  Array cov({d, d});
  const double correction = 1.0 - std::pow(config.gamma, static_cast<double>(state.step));
  if (correction <= 0.0) return cov;
  for (std::size_t i = 0; i < d; ++i) {
    const double mi = state.mean[i] / correction;
    for (std::size_t j = 0; j < d; ++j) {
      cov.at(i, j) = state.second.at(i, j) / correction - mi * state.mean[j] / correction;
    }
  }
  return cov;
}

void zca_update(ZcaState& state, const Array& batch, const ZcaConfig& config, bool training) {
  if (!training) return;
  const std::size_t d = state.dim();
  if (batch.rank() != 2 || batch.dim(1) != d) {
    throw Error("zca: batch " + diff::shape_string(batch.shape()) + " does not match dimension " +
                std::to_string(d));
  }
  if (!batch.all_finite()) throw Error("zca: non-finite query batch");
  const auto rows = static_cast<Eigen::Index>(batch.dim(0));
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::Map<const RowMat> s(batch.data(), rows, dd);
  const double g = config.gamma;
  Eigen::Map<Eigen::VectorXd> mu(state.mean.data(), dd);
  Eigen::Map<RowMat> sigma(state.second.data(), dd, dd);
  mu = g * mu + (1.0 - g) * s.colwise().mean().transpose();
  sigma = g * sigma + (1.0 - g) * (s.transpose() * s) / static_cast<double>(rows);
  ++state.step;
  if (!state.mean.all_finite() || !state.second.all_finite()) throw Error("zca: non-finite moments");

  if (state.step % config.period == 0) {
    const Array w = zca_whitening(zca_covariance(state, config), config.epsilon);
    const double eta = config.eta / static_cast<double>(config.period);
    for (std::size_t i = 0; i < state.theta.size(); ++i) {
      state.theta[i] = eta * state.theta[i] + (1.0 - eta) * w[i];
    }
    const double correction = 1.0 - std::pow(g, static_cast<double>(state.step));
    for (std::size_t i = 0; i < d; ++i) {
      state.center[i] = eta * state.center[i] + (1.0 - eta) * state.mean[i] / correction;
    }
  }
}

}  // namespace nbloom::model
