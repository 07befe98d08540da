#pragma once

// Trial normalization, session standardization and the ICA cleaning pass.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mibci/error.hpp"
#include "mibci/ica.hpp"
#include "mibci/rng.hpp"
#include "mibci/signal.hpp"
#include "mibci/trialstore.hpp"

namespace mibci {

enum class ZscoreMode {
  PerChannel,   // mean and std per channel
  TrialScalar,  // one mean and std over the whole trial
};

inline std::string to_string(ZscoreMode m) { return m == ZscoreMode::PerChannel ? "per_channel" : "trial_scalar"; }

inline ZscoreMode zscore_mode_from_string(const std::string& s) {
  if (s == "per_channel") return ZscoreMode::PerChannel;
  if (s == "trial_scalar") return ZscoreMode::TrialScalar;
  throw InvalidArgument("unknown zscore mode '" + s + "'");
}

namespace detail {

inline bool degenerate_std(double sd, double mean) { return !(sd > 1e-12 * std::max(1.0, std::abs(mean))); }

}  // namespace detail

/// (x - mean) / std with the population standard deviation.
inline Signal zscore(const Signal& x, ZscoreMode mode = ZscoreMode::PerChannel) {
  const auto n = static_cast<double>(x.cols());
  if (x.cols() < 2) throw InvalidArgument("z-score needs at least two samples");
  Signal out(x.rows(), x.cols());
  if (mode == ZscoreMode::TrialScalar) {
    const double mu = x.mean();
    const double sd = std::sqrt((x.array() - mu).square().sum() / static_cast<double>(x.size()));
    if (detail::degenerate_std(sd, mu)) throw NumericalError("trial has zero variance");
    out = (x.array() - mu) / sd;
    return out;
  }
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    const double mu = x.row(c).mean();
    const double sd = std::sqrt((x.row(c).array() - mu).square().sum() / n);
    if (detail::degenerate_std(sd, mu)) throw NumericalError("channel " + std::to_string(c) + " has zero variance");
    out.row(c) = (x.row(c).array() - mu) / sd;
  }
  return out;
}

inline Trial zscore_trial(const Trial& t, ZscoreMode mode = ZscoreMode::PerChannel) {
  Trial out = t;
  try {
    out.data = zscore(t.data, mode);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (subject " + std::to_string(t.subject) + ", session " +
                         std::to_string(t.session) + ")");
  }
  return out;
}

/// Per-channel standardization over every sample of each (subject, session).
inline void standardize_sessions(TrialSet& set) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.trials.size(); ++i)
    groups[{set.trials[i].subject, set.trials[i].session}].push_back(i);
  const auto ch = static_cast<Eigen::Index>(set.channels);
  for (const auto& [key, idx] : groups) {
    Vector sum = Vector::Zero(ch), sumsq = Vector::Zero(ch);
    double count = 0;
    for (auto i : idx) {
      const Signal& d = set.trials[i].data;
      sum += d.rowwise().sum();
      count += static_cast<double>(d.cols());
    }
    const Vector mean = sum / count;
    for (auto i : idx) sumsq += (set.trials[i].data.colwise() - mean).array().square().matrix().rowwise().sum();
    const Vector sd = (sumsq / count).cwiseSqrt();
    for (Eigen::Index c = 0; c < ch; ++c)
      if (detail::degenerate_std(sd(c), mean(c)))
        throw NumericalError("channel " + std::to_string(c) + " has zero variance in subject " +
                             std::to_string(key.first) + " session " + std::to_string(key.second));
    const Vector inv = sd.cwiseInverse();
    for (auto i : idx) {
      Signal& d = set.trials[i].data;
      d = (d.colwise() - mean).array().colwise() * inv.array();
    }
  }
}

struct PreprocessConfig {
  bool session_standardize = true;
  bool ica_enabled = true;
  double ica_kurtosis_threshold = 5.0;
  std::vector<int> ica_reject;  // manual override; empty means kurtosis rule
  std::size_t ica_max_fit_samples = 20000;
  int ica_max_iter = 200;
  double ica_tol = 1e-4;
  bool zscore_enabled = true;
  ZscoreMode zscore_mode = ZscoreMode::PerChannel;
};

struct SessionIcaSummary {
  int subject = 0;
  int session = 0;
  std::vector<int> rejected;
  std::vector<double> kurtosis;
};

/// Session standardization -> per-session ICA cleaning -> per-trial z-score, in place.
inline std::vector<SessionIcaSummary> preprocess_in_place(TrialSet& set, const PreprocessConfig& cfg,
                                                          std::uint64_t seed) {
  std::vector<SessionIcaSummary> summary;
  if (set.trials.empty()) return summary;
  if (cfg.session_standardize) standardize_sessions(set);

  if (cfg.ica_enabled) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < set.trials.size(); ++i)
      groups[{set.trials[i].subject, set.trials[i].session}].push_back(i);
    for (const auto& [key, idx] : groups) {
      const std::size_t total = idx.size() * set.samples;
      const std::size_t stride = std::max<std::size_t>(1, (total + cfg.ica_max_fit_samples - 1) /
                                                               std::max<std::size_t>(1, cfg.ica_max_fit_samples));
      const std::size_t kept = (total + stride - 1) / stride;
      Signal fit(static_cast<Eigen::Index>(set.channels), static_cast<Eigen::Index>(kept));
      std::size_t col = 0;
      for (std::size_t g = 0; g < total; g += stride) {
        const Signal& d = set.trials[idx[g / set.samples]].data;
        fit.col(static_cast<Eigen::Index>(col++)) = d.col(static_cast<Eigen::Index>(g % set.samples));
      }
      IcaOptions opt;
      opt.seed = derive_seed(seed, {0x1CAull, static_cast<std::uint64_t>(key.first),
                                    static_cast<std::uint64_t>(key.second)});
      opt.max_iter = cfg.ica_max_iter;
      opt.tol = cfg.ica_tol;
      const IcaDecomposition ica = fastica_fit(fit, opt);
      SessionIcaSummary s{key.first, key.second,
                          cfg.ica_reject.empty() ? select_by_kurtosis(ica, cfg.ica_kurtosis_threshold) : cfg.ica_reject,
                          ica.kurtosis};
      if (!s.rejected.empty())
        for (auto i : idx) set.trials[i].data = ica_clean(ica, set.trials[i].data, s.rejected);
      summary.push_back(std::move(s));
    }
  }

  if (cfg.zscore_enabled)
    for (auto& t : set.trials) t = zscore_trial(t, cfg.zscore_mode);
  return summary;
}

}  // namespace mibci
