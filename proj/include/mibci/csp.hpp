#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

/// Centred spatial covariance of one trial, normalized by the sample count.
inline Matrix trial_covariance(const Signal& x) {
  if (x.cols() < 2) throw InvalidArgument("covariance needs at least two samples");
  const Signal c = x.colwise() - x.rowwise().mean();
  return (c * c.transpose()) / static_cast<double>(x.cols());
}

/// Mean of trace-normalized covariances, shrunk toward (trace/n) I.
inline Matrix regularized_covariance(std::span<const Matrix> covariances, double shrinkage) {
  if (covariances.empty()) throw InvalidArgument("regularized covariance needs at least one trial");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw InvalidArgument("shrinkage must lie in [0, 1]");
  const Eigen::Index n = covariances.front().rows();
  Matrix mean = Matrix::Zero(n, n);
  for (const Matrix& c : covariances) {
    if (c.rows() != n || c.cols() != n) throw InvalidArgument("covariance dimension mismatch");
    if (!c.allFinite()) throw NumericalError("non-finite covariance");
    const double tr = c.trace();
    if (!(tr > 0.0)) throw NumericalError("covariance with zero trace");
    mean += c / tr;
  }
  mean /= static_cast<double>(covariances.size());
  const double target = mean.trace() / static_cast<double>(n);
  Matrix out = (1.0 - shrinkage) * mean;
  out.diagonal().array() += shrinkage * target;
  return 0.5 * (out + out.transpose());
}

inline Matrix regularized_covariance(std::span<const Signal> trials, double shrinkage) {
  std::vector<Matrix> covs;
  covs.reserve(trials.size());
  for (const auto& t : trials) {
    if (!t.allFinite()) throw NumericalError("non-finite trial data");
    covs.push_back(trial_covariance(t));
  }
  return regularized_covariance(std::span<const Matrix>(covs), shrinkage);
}

struct CspModel {
  Matrix filters;                  // m x channels; row j is w_j
  std::vector<double> eigenvalues;  // matching rows, in [0, 1]
  int pairing = 0;                 // class id of the "one" side in one-vs-rest

  Eigen::Index components() const { return filters.rows(); }
};

namespace detail {

inline void require_spd(const Matrix& c, const char* what) {
  if (c.rows() != c.cols() || c.rows() == 0) throw InvalidArgument(std::string(what) + " must be square");
  if (!c.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InvalidArgument(std::string(what) + " is not symmetric");
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + " is not positive definite");
}

}  // namespace detail

/// Solves cov_a w = lambda (cov_a + cov_b) w and keeps m/2 filters from each end
/// of the spectrum. Rows satisfy W (cov_a + cov_b) W^T = I.
inline CspModel csp_fit(const Matrix& cov_a, const Matrix& cov_b, int m, int pairing = 0) {
  detail::require_spd(cov_a, "cov_a");
  detail::require_spd(cov_b, "cov_b");
  if (cov_a.rows() != cov_b.rows()) throw InvalidArgument("CSP covariance sizes differ");
  if (m < 2 || m % 2 != 0) throw InvalidArgument("CSP component count must be even and >= 2");
  const Eigen::Index n = cov_a.rows();
  if (m > n) throw InvalidArgument("CSP component count exceeds channel count");

  const Matrix composite = cov_a + cov_b;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(cov_a, composite);
  if (ges.info() != Eigen::Success) throw NumericalError("generalized eigen-decomposition failed");
  // ascending eigenvalues; eigenvectors satisfy v^T composite v = 1
  const Vector& lambda = ges.eigenvalues();
  const Matrix& vecs = ges.eigenvectors();

  std::vector<Eigen::Index> pick;
  for (int k = 0; k < m / 2; ++k) pick.push_back(n - 1 - k);
  for (int k = m / 2 - 1; k >= 0; --k) pick.push_back(k);

  CspModel model;
  model.pairing = pairing;
  model.filters.resize(m, n);
  for (int j = 0; j < m; ++j) {
    Vector w = vecs.col(pick[static_cast<std::size_t>(j)]);
    Eigen::Index arg;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0) w = -w;
    model.filters.row(j) = w.transpose();
    model.eigenvalues.push_back(std::clamp(lambda(pick[static_cast<std::size_t>(j)]), 0.0, 1.0));
  }
  return model;
}

/// Log relative variance of each CSP projection, from the trial covariance.
inline std::vector<double> csp_features_from_covariance(const CspModel& model, const Matrix& cov) {
  if (cov.rows() != model.filters.cols()) throw InvalidArgument("CSP channel count mismatch");
  const Vector var = (model.filters * cov * model.filters.transpose()).diagonal();
  const double total = var.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("CSP projections have zero total variance");
  std::vector<double> out(static_cast<std::size_t>(var.size()));
  for (Eigen::Index j = 0; j < var.size(); ++j) out[static_cast<std::size_t>(j)] = std::log(std::max(var(j), 0.0) / total);
  for (double v : out)
    if (!std::isfinite(v)) throw NumericalError("CSP projection with zero variance");
  return out;
}

inline std::vector<double> csp_features(const CspModel& model, const Signal& trial) {
  return csp_features_from_covariance(model, trial_covariance(trial));
}

}  // namespace mibci
