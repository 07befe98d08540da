#pragma once

// Mutual information between a continuous feature and class labels, estimated
// by equal-frequency binning of the feature (plug-in estimator, nats).

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

/// Bin of each sample: floor(r * bins / n), where r is the rank of the first
/// sample in its group of equal values. Equal values always share a bin.
inline std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
  if (bins < 1) throw InvalidArgument("bin count must be >= 1");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> out(n, 0);
  std::size_t group_start = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && values[order[r]] != values[order[r - 1]]) group_start = r;
    out[order[r]] = static_cast<int>(group_start * static_cast<std::size_t>(bins) / n);
  }
  return out;
}

inline double mutual_information(std::span<const double> feature, std::span<const int> labels, int bins = 8) {
  if (feature.size() != labels.size()) throw InvalidArgument("feature and label lengths differ");
  if (feature.empty()) return 0.0;
  const auto b = equal_frequency_bins(feature, bins);
  std::map<int, int> class_index;
  for (int y : labels) class_index.emplace(y, 0);
  int k = 0;
  for (auto& [y, idx] : class_index) idx = k++;
  const auto nc = static_cast<std::size_t>(k);
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<double> joint(nb * nc, 0.0), pb(nb, 0.0), pc(nc, 0.0);
  for (std::size_t i = 0; i < feature.size(); ++i) {
    const auto c = static_cast<std::size_t>(class_index[labels[i]]);
    joint[static_cast<std::size_t>(b[i]) * nc + c] += 1.0;
  }
  const double n = static_cast<double>(feature.size());
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t c = 0; c < nc; ++c) {
      pb[i] += joint[i * nc + c] / n;
      pc[c] += joint[i * nc + c] / n;
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t c = 0; c < nc; ++c) {
      const double p = joint[i * nc + c] / n;
      if (p > 0.0) mi += p * std::log(p / (pb[i] * pc[c]));
    }
  return std::max(mi, 0.0);
}

struct RankedFeature {
  std::size_t index = 0;
  double mi = 0.0;
};

/// Ranks the columns of `features` (trials x dims) by mutual information with
/// the labels, descending; ties go to the lower column index.
inline std::vector<RankedFeature> mutual_information_rank(const Matrix& features, std::span<const int> labels,
                                                          int bins = 8) {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw InvalidArgument("feature rows and label count differ");
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw InvalidArgument("mutual information ranking needs at least two classes");

  std::vector<RankedFeature> out;
  std::vector<double> column(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index d = 0; d < features.cols(); ++d) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) column[static_cast<std::size_t>(i)] = features(i, d);
    out.push_back({static_cast<std::size_t>(d), mutual_information(column, labels, bins)});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) { return a.mi > b.mi; });
  return out;
}

}  // namespace mibci
