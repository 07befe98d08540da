#pragma once

// Deflation FastICA (tanh contrast) and component rejection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mibci/error.hpp"
#include "mibci/rng.hpp"
#include "mibci/signal.hpp"

namespace mibci {

struct IcaDecomposition {
  Matrix unmixing;  // components x channels, applied to centred data
  Matrix mixing;    // channels x components
  Vector mean;      // per-channel mean removed before unmixing
  std::vector<double> kurtosis;  // excess kurtosis per component
  std::vector<int> iterations;   // fixed-point iterations per component
  std::vector<bool> converged;

  Eigen::Index components() const { return unmixing.rows(); }
  Eigen::Index channels() const { return unmixing.cols(); }
};

struct IcaOptions {
  int components = 0;  // 0: one per channel
  std::uint64_t seed = 0;
  int max_iter = 200;
  double tol = 1e-4;
};

namespace detail {

inline double excess_kurtosis(const Eigen::Ref<const Eigen::RowVectorXd>& s) {
  const double mu = s.mean();
  const auto c = (s.array() - mu);
  const double m2 = c.square().mean();
  if (m2 <= 0.0) return 0.0;
  return c.square().square().mean() / (m2 * m2) - 3.0;
}

}  // namespace detail

/// Fits ICA to channels x samples data.
inline IcaDecomposition fastica_fit(const Signal& data, const IcaOptions& opt = {}) {
  const Eigen::Index ch = data.rows();
  const Eigen::Index n = data.cols();
  const Eigen::Index p = opt.components > 0 ? opt.components : ch;
  if (ch < 1 || n < 2) throw InvalidArgument("ICA needs at least one channel and two samples");
  if (p > ch) throw InvalidArgument("ICA component count exceeds channel count");
  if (n <= ch) throw InvalidArgument("ICA needs more samples than channels");
  if (!data.allFinite()) throw NumericalError("ICA input contains non-finite values");

  IcaDecomposition out;
  out.mean = data.rowwise().mean();
  Matrix centred = data.colwise() - out.mean;
  const Matrix cov = centred * centred.transpose() / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("whitening failed: eigen-decomposition did not converge");
  // Eigen returns ascending eigenvalues; keep the p largest.
  const Vector evals = es.eigenvalues().reverse();
  const Matrix evecs = es.eigenvectors().rowwise().reverse();
  const double top = evals(0);
  if (!(top > 0.0)) throw NumericalError("whitening failed: zero covariance");
  for (Eigen::Index k = 0; k < p; ++k)
    if (!(evals(k) > 1e-10 * top))
      throw NumericalError("whitening failed: rank-deficient covariance (eigenvalue " + std::to_string(k) + " = " +
                           std::to_string(evals(k)) + ")");

  const Vector d = evals.head(p);
  const Matrix ep = evecs.leftCols(p);
  const Matrix whitening = d.cwiseSqrt().cwiseInverse().asDiagonal() * ep.transpose();  // p x ch
  const Matrix z = whitening * centred;                                                  // p x n

  Rng rng(opt.seed);
  Matrix w(p, p);
  out.iterations.assign(static_cast<std::size_t>(p), 0);
  out.converged.assign(static_cast<std::size_t>(p), false);
  Eigen::RowVectorXd u(n), g(n);
  for (Eigen::Index k = 0; k < p; ++k) {
    Vector wk(p);
    for (Eigen::Index i = 0; i < p; ++i) wk(i) = rng.normal();
    for (Eigen::Index j = 0; j < k; ++j) wk -= wk.dot(w.row(j).transpose()) * w.row(j).transpose();
    wk.normalize();
    int it = 0;
    for (; it < opt.max_iter; ++it) {
      u.noalias() = wk.transpose() * z;
      g = u.array().tanh();
      const double gprime = (1.0 - g.array().square()).mean();
      Vector next = z * g.transpose() / static_cast<double>(n) - gprime * wk;
      for (Eigen::Index j = 0; j < k; ++j) next -= next.dot(w.row(j).transpose()) * w.row(j).transpose();
      next.normalize();
      const double lim = std::abs(std::abs(next.dot(wk)) - 1.0);
      wk = next;
      if (lim < opt.tol) {
        out.converged[static_cast<std::size_t>(k)] = true;
        ++it;
        break;
      }
    }
    out.iterations[static_cast<std::size_t>(k)] = it;
    w.row(k) = wk.transpose();
  }

  out.unmixing = w * whitening;
  out.mixing = ep * d.cwiseSqrt().asDiagonal() * w.transpose();
  const Matrix sources = out.unmixing * centred;
  out.kurtosis.resize(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) out.kurtosis[static_cast<std::size_t>(k)] = detail::excess_kurtosis(sources.row(k));
  return out;
}

/// Component indices whose |excess kurtosis| exceeds `threshold`.
inline std::vector<int> select_by_kurtosis(const IcaDecomposition& ica, double threshold) {
  std::vector<int> out;
  for (std::size_t k = 0; k < ica.kurtosis.size(); ++k)
    if (std::abs(ica.kurtosis[k]) > threshold) out.push_back(static_cast<int>(k));
  return out;
}

/// Removes the rejected components from `data`: X - A_r S_r. Variance outside
/// the retained subspace is left untouched.
inline Signal ica_clean(const IcaDecomposition& ica, const Signal& data, std::span<const int> reject) {
  if (data.rows() != ica.channels()) throw InvalidArgument("ICA channel count mismatch");
  for (int r : reject)
    if (r < 0 || r >= ica.components())
      throw InvalidArgument("ICA component index " + std::to_string(r) + " out of range");
  Signal out = data;
  if (reject.empty()) return out;
  std::vector<int> unique(reject.begin(), reject.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const Matrix centred = data.colwise() - ica.mean;
  for (int r : unique) {
    const Eigen::RowVectorXd s = ica.unmixing.row(r) * centred;
    out.noalias() -= ica.mixing.col(r) * s;
  }
  return out;
}

}  // namespace mibci
