#pragma once

#include <cstdint>

#include "nbloom/diff/params.hpp"
#include "nbloom/model/config.hpp"

namespace nbloom::model {

// Moving ZCA sphering of raw query words s (rows of a batch).
//   mu    <- gamma mu    + (1 - gamma) mean(s)
//   Sigma <- gamma Sigma + (1 - gamma) s^T s / N
// Every `period` updates, with C = Sigma - mu mu^T = U diag(lambda) U^T:
//   W      = U diag((lambda + eps)^-1/2) U^T
//   theta  <- eta' theta  + (1 - eta') W,   eta' = eta / period
//   center <- eta' center + (1 - eta') mu
// The moment estimates start at zero and are bias-corrected by
// 1 - gamma^step. The projected query is (s - center) theta.
struct ZcaState {
  diff::Array mean;    // [d]
  diff::Array second;  // [d, d]
  diff::Array theta;   // [d, d]
  diff::Array center;  // [d]
  std::uint64_t step = 0;

  static ZcaState identity(std::size_t dim);
  std::size_t dim() const { return mean.size(); }

  void store(diff::ParamStore& params, const std::string& prefix) const;
  static ZcaState load(const diff::ParamStore& params, const std::string& prefix);
};

// No-op when `training` is false.
void zca_update(ZcaState& state, const diff::Array& batch, const ZcaConfig& config, bool training = true);

// W = U diag((lambda + eps)^-1/2) U^T for a covariance matrix.
diff::Array zca_whitening(const diff::Array& covariance, double epsilon);

// Current bias-corrected covariance estimate.
diff::Array zca_covariance(const ZcaState& state, const ZcaConfig& config);

}  // namespace nbloom::model
