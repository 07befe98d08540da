#pragma once

// ANFIS training: ridge least-squares consequents and gradient fine-tuning of
// the premise (membership function) parameters.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "mibci/anfis.hpp"
#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

/// Row t is [n_1 x_t, n_1, n_2 x_t, n_2, ...] with n_r the normalized firing of rule r.
inline Matrix consequent_design(const AnfisModel& m, const Matrix& X) {
  if (X.cols() != m.inputs) throw InvalidArgument("feature matrix has wrong width");
  const std::size_t R = m.rule_count();
  const Eigen::Index d1 = m.inputs + 1;
  Matrix phi(X.rows(), static_cast<Eigen::Index>(R) * d1);
  std::vector<double> x(static_cast<std::size_t>(m.inputs)), firing(R);
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    for (int k = 0; k < m.inputs; ++k) x[static_cast<std::size_t>(k)] = X(t, k);
    normalized_firing(m, x, firing);
    for (std::size_t r = 0; r < R; ++r) {
      const Eigen::Index base = static_cast<Eigen::Index>(r) * d1;
      for (int k = 0; k < m.inputs; ++k) phi(t, base + k) = firing[r] * x[static_cast<std::size_t>(k)];
      phi(t, base + m.inputs) = firing[r];
    }
  }
  return phi;
}

/// One-hot targets, column c for class id c + 1.
inline Matrix one_hot(std::span<const int> y, int classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(y.size()), classes);
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] < 1 || y[t] > classes) throw InvalidArgument("label " + std::to_string(y[t]) + " out of range");
    out(static_cast<Eigen::Index>(t), y[t] - 1) = 1.0;
  }
  return out;
}

inline void set_consequents(AnfisModel& m, const Matrix& theta) {
  const std::size_t R = m.rule_count();
  const Eigen::Index d1 = m.inputs + 1;
  for (std::size_t r = 0; r < R; ++r)
    for (int c = 0; c < m.classes; ++c)
      for (int k = 0; k <= m.inputs; ++k) m.consequent(r, c, k) = theta(static_cast<Eigen::Index>(r) * d1 + k, c);
}

/// Ridge least squares from the firing-weighted regressors to one-hot targets.
inline void fit_consequents(AnfisModel& m, const Matrix& X, std::span<const int> y, double ridge) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw InvalidArgument("feature rows and label count differ");
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be >= 0");
  if (X.rows() == 0) throw InvalidArgument("no training rows");
  const Matrix phi = consequent_design(m, X);
  const Matrix target = one_hot(y, m.classes);
  Matrix theta;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(phi);
    if (qr.rank() < phi.cols())
      throw NumericalError("singular normal equations (rank " + std::to_string(qr.rank()) + " of " +
                           std::to_string(phi.cols()) + "); use ridge > 0");
    theta = qr.solve(target);
  } else {
    Matrix gram = Matrix::Zero(phi.cols(), phi.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
    gram.diagonal().array() += ridge;
    Eigen::LLT<Matrix, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("consequent normal equations not positive definite");
    theta = llt.solve(phi.transpose() * target);
  }
  if (!theta.allFinite()) throw NumericalError("non-finite consequent solution");
  set_consequents(m, theta);
}

// ---------------------------------------------------------------------------
// Premise parameters

inline std::vector<double> premise_params(const AnfisModel& m) {
  std::vector<double> out;
  for (const auto& row : m.mfs)
    for (const auto& mf : row)
      for (int p = 0; p < mf.param_count(); ++p) out.push_back(mf.params[static_cast<std::size_t>(p)]);
  return out;
}

/// Writes premise parameters back, projecting onto valid MFs (positive widths
/// and slopes, ordered triangle vertices).
inline void set_premise_params(AnfisModel& m, std::span<const double> params) {
  std::size_t at = 0;
  for (auto& row : m.mfs)
    for (auto& mf : row) {
      for (int p = 0; p < mf.param_count(); ++p) {
        if (at >= params.size()) throw InvalidArgument("premise parameter vector too short");
        mf.params[static_cast<std::size_t>(p)] = params[at++];
      }
      if (mf.kind == MfKind::Triangular) {
        std::sort(mf.params.begin(), mf.params.end());
      } else {
        mf.params[1] = std::max(mf.params[1], 1e-9);
        if (mf.kind == MfKind::Bell) mf.params[2] = std::max(mf.params[2], 1e-9);
      }
    }
  if (at != params.size()) throw InvalidArgument("premise parameter vector too long");
}

namespace detail {

// log-softmax cross-entropy of one score vector
inline double cross_entropy(std::span<const double> s, int label, std::vector<double>* prob = nullptr) {
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double v : s) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  if (prob) {
    prob->resize(s.size());
    for (std::size_t c = 0; c < s.size(); ++c) (*prob)[c] = std::exp(s[c] - lse);
  }
  return lse - s[static_cast<std::size_t>(label - 1)];
}

}  // namespace detail

/// Mean softmax cross-entropy of the class scores.
inline double anfis_loss(const AnfisModel& m, const Matrix& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw InvalidArgument("feature rows and label count differ");
  double total = 0.0;
  std::vector<double> x(static_cast<std::size_t>(m.inputs));
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    for (int k = 0; k < m.inputs; ++k) x[static_cast<std::size_t>(k)] = X(t, k);
    total += detail::cross_entropy(anfis_forward(m, x).scores, y[static_cast<std::size_t>(t)]);
  }
  return total / static_cast<double>(std::max<Eigen::Index>(X.rows(), 1));
}

/// Central differences, h = 1e-5 * max(1, |theta|).
inline std::vector<double> finite_difference_gradient(const AnfisModel& m, const Matrix& X, std::span<const int> y) {
  const auto theta = premise_params(m);
  std::vector<double> grad(theta.size());
  AnfisModel probe = m;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
    auto plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    set_premise_params(probe, plus);
    const double fp = anfis_loss(probe, X, y);
    set_premise_params(probe, minus);
    const double fm = anfis_loss(probe, X, y);
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Analytic gradient of anfis_loss with respect to Gaussian premise parameters.
inline std::vector<double> gaussian_premise_gradient(const AnfisModel& m, const Matrix& X, std::span<const int> y) {
  for (const auto& row : m.mfs)
    for (const auto& mf : row)
      if (mf.kind != MfKind::Gaussian) throw InvalidArgument("analytic premise gradient requires Gaussian MFs");
  const auto M = static_cast<std::size_t>(m.mfs_per_input);
  const auto d = static_cast<std::size_t>(m.inputs);
  const std::size_t R = m.rule_count();
  std::vector<double> grad(d * M * 2, 0.0);
  std::vector<double> x(d), mu(d * M), w(R), f(R * static_cast<std::size_t>(m.classes)), prob, dmu(d * M);

  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    for (std::size_t k = 0; k < d; ++k) x[k] = X(t, static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < M; ++j) mu[i * M + j] = mf_eval(m.mfs[i][j], x[i]);
    double W = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double v = m.rule_weights[r];
      for (std::size_t i = 0; i < d; ++i) v *= mu[i * M + static_cast<std::size_t>(m.rule_mf(r, static_cast<int>(i)))];
      w[r] = v;
      W += v;
    }
    if (W < kFiringUnderflow) continue;  // uniform fallback has zero premise gradient
    std::vector<double> s(static_cast<std::size_t>(m.classes), 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (int c = 0; c < m.classes; ++c) {
        double v = m.consequent(r, c, m.inputs);
        for (std::size_t k = 0; k < d; ++k) v += m.consequent(r, c, static_cast<int>(k)) * x[k];
        f[r * static_cast<std::size_t>(m.classes) + static_cast<std::size_t>(c)] = v;
        s[static_cast<std::size_t>(c)] += w[r] / W * v;
      }
    detail::cross_entropy(s, y[static_cast<std::size_t>(t)], &prob);
    std::fill(dmu.begin(), dmu.end(), 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      double g = 0.0;  // dL/dw_r
      for (int c = 0; c < m.classes; ++c) {
        const double resid = prob[static_cast<std::size_t>(c)] - (c + 1 == y[static_cast<std::size_t>(t)] ? 1.0 : 0.0);
        g += resid * (f[r * static_cast<std::size_t>(m.classes) + static_cast<std::size_t>(c)] - s[static_cast<std::size_t>(c)]);
      }
      g /= W;
      for (std::size_t i = 0; i < d; ++i) {
        double others = m.rule_weights[r];
        for (std::size_t k = 0; k < d; ++k)
          if (k != i) others *= mu[k * M + static_cast<std::size_t>(m.rule_mf(r, static_cast<int>(k)))];
        dmu[i * M + static_cast<std::size_t>(m.rule_mf(r, static_cast<int>(i)))] += g * others;
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        const auto& p = m.mfs[i][j].params;
        const double u = x[i] - p[0];
        const double s2 = p[1] * p[1];
        const double val = mu[i * M + j];
        grad[(i * M + j) * 2] += dmu[i * M + j] * val * u / s2;
        grad[(i * M + j) * 2 + 1] += dmu[i * M + j] * val * u * u / (s2 * p[1]);
      }
  }
  const double n = static_cast<double>(std::max<Eigen::Index>(X.rows(), 1));
  for (auto& g : grad) g /= n;
  return grad;
}

inline std::vector<double> premise_gradient(const AnfisModel& m, const Matrix& X, std::span<const int> y) {
  bool all_gaussian = true;
  for (const auto& row : m.mfs)
    for (const auto& mf : row) all_gaussian = all_gaussian && mf.kind == MfKind::Gaussian;
  return all_gaussian ? gaussian_premise_gradient(m, X, y) : finite_difference_gradient(m, X, y);
}

struct FinetuneOptions {
  int epochs = 200;
  double learning_rate = 0.03;
  int max_backtracks = 20;
};

struct FinetuneResult {
  AnfisModel model;
  std::vector<double> loss_history;  // loss before epoch 1, then after each accepted epoch
  int epochs_run = 0;
  bool early_stopped = false;
};

/// Full-batch gradient descent on premise parameters with step halving, so the
/// training loss never increases. Consequents are held fixed.
inline FinetuneResult anfis_finetune(const AnfisModel& model, const Matrix& X, std::span<const int> y,
                                     const FinetuneOptions& opt) {
  if (opt.epochs < 0 || !(opt.learning_rate >= 0.0)) throw InvalidArgument("invalid fine-tuning options");
  FinetuneResult res{model, {}, 0, false};
  double loss = anfis_loss(res.model, X, y);
  if (!std::isfinite(loss)) throw NumericalError("non-finite initial loss");
  res.loss_history.push_back(loss);
  if (opt.learning_rate == 0.0) return res;

  auto theta = premise_params(res.model);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const auto grad = premise_gradient(res.model, X, y);
    bool accepted = false;
    double lr = opt.learning_rate;
    for (int b = 0; b <= opt.max_backtracks && !accepted; ++b, lr *= 0.5) {
      auto next = theta;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] -= lr * grad[i];
      AnfisModel candidate = res.model;
      set_premise_params(candidate, next);
      const double l = anfis_loss(candidate, X, y);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << " (step " << lr << ", previous loss " << loss << ")";
        throw NumericalError(msg.str());
      }
      if (l <= loss) {
        res.model = std::move(candidate);
        theta = premise_params(res.model);
        accepted = true;
        const double improvement = loss - l;
        loss = l;
        res.loss_history.push_back(loss);
        res.epochs_run = epoch + 1;
        if (improvement < 1e-12 * std::max(1.0, loss)) {
          res.early_stopped = true;
          return res;
        }
      }
    }
    if (!accepted) {
      res.early_stopped = true;
      break;
    }
  }
  return res;
}

inline double accuracy(const AnfisModel& m, const Matrix& X, std::span<const int> y) {
  if (X.rows() == 0) return 0.0;
  std::vector<double> x(static_cast<std::size_t>(m.inputs));
  std::size_t hits = 0;
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    for (int k = 0; k < m.inputs; ++k) x[static_cast<std::size_t>(k)] = X(t, k);
    hits += predict(m, x) == y[static_cast<std::size_t>(t)] ? 1u : 0u;
  }
  return static_cast<double>(hits) / static_cast<double>(X.rows());
}

}  // namespace mibci
