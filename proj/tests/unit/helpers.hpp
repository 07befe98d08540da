#pragma once

#include <cstdint>
#include <vector>

#include "mibci/anfis.hpp"
#include "mibci/rng.hpp"
#include "mibci/signal.hpp"
#include "mibci/trialstore.hpp"
#include "oracles.hpp"

namespace testutil {

inline mibci::Signal random_signal(mibci::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  mibci::Signal s(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) s(i, j) = scale * rng.normal();
  return s;
}

/// Random SPD matrix: A A^T / n + eps I.
inline mibci::Matrix random_spd(mibci::Rng& rng, Eigen::Index n, double eps = 0.1) {
  mibci::Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  mibci::Matrix s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += eps;
  return 0.5 * (s + s.transpose());
}

inline oracle::Mat to_mat(const mibci::Matrix& m) {
  oracle::Mat out = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

/// Small valid TrialSet with random data.
inline mibci::TrialSet random_set(std::uint64_t seed, std::size_t trials, std::size_t channels, std::size_t samples) {
  mibci::Rng rng(seed);
  mibci::TrialSet set;
  set.channels = channels;
  set.samples = samples;
  set.sample_rate = 250.0;
  for (std::size_t c = 0; c < channels; ++c) set.channel_names.push_back("ch" + std::to_string(c));
  for (std::size_t t = 0; t < trials; ++t) {
    mibci::Signal d = random_signal(rng, static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples), 10.0);
    d = d.cast<float>().cast<double>();
    set.trials.push_back({std::move(d), static_cast<int>(rng.below(4)) + 1, static_cast<int>(rng.below(9)) + 1,
                          static_cast<int>(rng.below(2)) + 1});
  }
  return set;
}

/// Random valid model: d inputs, M MFs per input, one MF kind for the whole model.
inline mibci::AnfisModel random_anfis(mibci::Rng& rng, int d, int M, mibci::MfKind kind, int classes = 4) {
  using mibci::MembershipFunction;
  mibci::AnfisModel m;
  m.inputs = d;
  m.mfs_per_input = M;
  m.classes = classes;
  for (int i = 0; i < d; ++i) {
    std::vector<MembershipFunction> row;
    for (int j = 0; j < M; ++j) {
      const double c = rng.uniform(-2.0, 2.0);
      switch (kind) {
        case mibci::MfKind::Gaussian: row.push_back(MembershipFunction::gaussian(c, rng.uniform(0.3, 2.0))); break;
        case mibci::MfKind::Bell:
          row.push_back(MembershipFunction::bell(c, rng.uniform(0.3, 2.0), rng.uniform(0.5, 4.0)));
          break;
        case mibci::MfKind::Triangular:
          row.push_back(MembershipFunction::triangular(c - rng.uniform(0.5, 3.0), c, c + rng.uniform(0.5, 3.0)));
          break;
      }
    }
    m.mfs.push_back(row);
  }
  for (std::size_t r = 0; r < m.rule_count(); ++r) m.rule_weights.push_back(rng.uniform(0.05, 1.0));
  m.consequents.resize(m.rule_count() * static_cast<std::size_t>(classes) * static_cast<std::size_t>(d + 1));
  for (auto& v : m.consequents) v = rng.normal();
  m.validate();
  return m;
}

inline oracle::Sugeno to_sugeno(const mibci::AnfisModel& m) {
  oracle::Sugeno s;
  s.d = m.inputs;
  s.M = m.mfs_per_input;
  s.C = m.classes;
  for (const auto& row : m.mfs) {
    std::vector<oracle::Mf> r;
    for (const auto& mf : row)
      r.push_back({static_cast<int>(mf.kind), mf.params[0], mf.params[1], mf.params[2]});
    s.mfs.push_back(r);
  }
  s.weights = m.rule_weights;
  for (std::size_t r = 0; r < m.rule_count(); ++r) {
    std::vector<std::vector<double>> per_class;
    for (int c = 0; c < m.classes; ++c) {
      std::vector<double> coef;
      for (int k = 0; k <= m.inputs; ++k) coef.push_back(m.consequent(r, c, k));
      per_class.push_back(coef);
    }
    s.coef.push_back(per_class);
  }
  return s;
}

/// Mean softmax cross-entropy computed through the oracle evaluator.
inline double oracle_loss(const oracle::Sugeno& s, const mibci::Matrix& X, const std::vector<int>& y) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    std::vector<double> x(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index k = 0; k < X.cols(); ++k) x[static_cast<std::size_t>(k)] = X(t, k);
    const auto out = oracle::sugeno_eval(s, x);
    double mx = out.scores[0];
    for (double v : out.scores) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : out.scores) z += std::exp(v - mx);
    total += mx + std::log(z) - out.scores[static_cast<std::size_t>(y[static_cast<std::size_t>(t)] - 1)];
  }
  return total / static_cast<double>(X.rows());
}

}  // namespace testutil
