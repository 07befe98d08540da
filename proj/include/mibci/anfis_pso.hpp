#pragma once

// Swarm search over ANFIS premise parameters and rule weights. Consequents are
// refitted by ridge least squares inside every fitness evaluation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mibci/anfis.hpp"
#include "mibci/anfis_train.hpp"
#include "mibci/error.hpp"
#include "mibci/pso.hpp"
#include "mibci/signal.hpp"

namespace mibci {

/// Flat position layout, input-major then MF-major:
///   gaussian    (center, sigma)
///   bell        (center, width, slope)
///   triangular  (peak, left span, right span)
/// followed by one weight per rule.
class ParameterCodec {
 public:
  ParameterCodec() = default;

  /// Bounds scale with the feature range r_i = hi_i - lo_i of each input.
  ParameterCodec(AnfisModel structure, std::span<const double> feature_lo, std::span<const double> feature_hi)
      : structure_(std::move(structure)) {
    structure_.validate();
    const auto d = static_cast<std::size_t>(structure_.inputs);
    if (feature_lo.size() != d || feature_hi.size() != d) throw InvalidArgument("feature range size mismatch");
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = feature_lo[i], hi = feature_hi[i];
      if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw InvalidArgument("invalid feature range");
      const double r = std::max(hi - lo, 1e-6);
      for (int j = 0; j < structure_.mfs_per_input; ++j) {
        switch (structure_.mfs[i][static_cast<std::size_t>(j)].kind) {
          case MfKind::Gaussian:
            push(lo - 0.25 * r, hi + 0.25 * r);
            push(0.05 * r, 1.5 * r);
            break;
          case MfKind::Bell:
            push(lo - 0.25 * r, hi + 0.25 * r);
            push(0.05 * r, 1.5 * r);
            push(0.5, 5.0);
            break;
          case MfKind::Triangular:
            push(lo - 0.25 * r, hi + 0.25 * r);
            push(0.05 * r, 2.0 * r);
            push(0.05 * r, 2.0 * r);
            break;
        }
      }
    }
    for (std::size_t r = 0; r < structure_.rule_count(); ++r) push(0.05, 1.0);
  }

  const Bounds& bounds() const { return bounds_; }
  std::size_t dims() const { return bounds_.dims(); }
  const AnfisModel& structure() const { return structure_; }

  std::vector<double> encode(const AnfisModel& m) const {
    check_structure(m);
    std::vector<double> x;
    x.reserve(dims());
    for (const auto& row : m.mfs)
      for (const auto& mf : row) {
        const auto& p = mf.params;
        if (mf.kind == MfKind::Triangular) {
          x.insert(x.end(), {p[1], p[1] - p[0], p[2] - p[1]});
        } else {
          for (int k = 0; k < mf.param_count(); ++k) x.push_back(p[static_cast<std::size_t>(k)]);
        }
      }
    x.insert(x.end(), m.rule_weights.begin(), m.rule_weights.end());
    return x;
  }

  /// Rebuilds premise parameters and rule weights; consequents are copied from
  /// the structure model. Throws InvalidArgument for positions outside the box.
  AnfisModel decode(std::span<const double> x) const {
    if (x.size() != dims()) throw InvalidArgument("position has wrong dimension");
    if (!bounds_.contains(x)) throw InvalidArgument("position outside codec bounds");
    AnfisModel m = structure_;
    std::size_t at = 0;
    for (auto& row : m.mfs)
      for (auto& mf : row) {
        auto& p = mf.params;
        if (mf.kind == MfKind::Triangular) {
          const double peak = x[at], ls = x[at + 1], rs = x[at + 2];
          p = {peak - ls, peak, peak + rs};
          at += 3;
        } else {
          for (int k = 0; k < mf.param_count(); ++k) p[static_cast<std::size_t>(k)] = x[at++];
        }
      }
    for (auto& w : m.rule_weights) w = x[at++];
    m.validate();
    return m;
  }

  /// Position of `m` clamped into the box.
  std::vector<double> encode_clamped(const AnfisModel& m) const {
    auto x = encode(m);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], bounds_.lo[i], bounds_.hi[i]);
    return x;
  }

 private:
  void push(double lo, double hi) {
    bounds_.lo.push_back(lo);
    bounds_.hi.push_back(hi);
  }

  void check_structure(const AnfisModel& m) const {
    if (m.inputs != structure_.inputs || m.mfs_per_input != structure_.mfs_per_input || m.classes != structure_.classes)
      throw InvalidArgument("model structure does not match codec");
    for (std::size_t i = 0; i < m.mfs.size(); ++i)
      for (std::size_t j = 0; j < m.mfs[i].size(); ++j)
        if (m.mfs[i][j].kind != structure_.mfs[i][j].kind) throw InvalidArgument("MF kind does not match codec");
  }

  AnfisModel structure_;
  Bounds bounds_;
};

/// Decode, fit consequents on the training rows, score accuracy on the
/// validation rows. Undecodable or numerically singular positions score -inf.
inline FitnessFn fitness_anfis(const ParameterCodec& codec, const Matrix& X_train, std::vector<int> y_train,
                               const Matrix& X_val, std::vector<int> y_val, double ridge) {
  if (X_val.rows() == 0) throw InvalidArgument("validation set is empty");
  if (static_cast<std::size_t>(X_val.rows()) != y_val.size() || static_cast<std::size_t>(X_train.rows()) != y_train.size())
    throw InvalidArgument("feature rows and label count differ");
  return [codec, X_train, y_train = std::move(y_train), X_val, y_val = std::move(y_val), ridge](std::span<const double> x) {
    AnfisModel m;
    try {
      m = codec.decode(x);
      fit_consequents(m, X_train, y_train, ridge);
    } catch (const InvalidArgument&) {
      return -std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
    return accuracy(m, X_val, y_val);
  };
}

struct AnfisPsoOptions {
  int classes = 4;
  int mfs_per_input = 2;
  MfKind mf_kind = MfKind::Gaussian;
  double ridge = 1e-3;
  PsoConfig pso;
};

struct AnfisPsoResult {
  AnfisModel model;  // best premise, consequents fitted on the training rows
  PsoResult pso;
  std::vector<double> feature_lo, feature_hi;
};

/// Column-wise min and max.
inline std::pair<std::vector<double>, std::vector<double>> feature_ranges(const Matrix& X) {
  if (X.rows() == 0) throw InvalidArgument("feature range of an empty matrix");
  std::vector<double> lo(static_cast<std::size_t>(X.cols())), hi(lo.size());
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    lo[static_cast<std::size_t>(k)] = X.col(k).minCoeff();
    hi[static_cast<std::size_t>(k)] = X.col(k).maxCoeff();
  }
  return {lo, hi};
}

/// Seeds particle 0 with the evenly spaced grid model, then searches.
inline AnfisPsoResult train_anfis_pso(const Matrix& X_train, std::span<const int> y_train, const Matrix& X_val,
                                      std::span<const int> y_val, const AnfisPsoOptions& opt,
                                      const SwarmObserver& observer = {}) {
  const auto [lo, hi] = feature_ranges(X_train);
  const int d = static_cast<int>(X_train.cols());
  AnfisModel grid = make_grid_model(d, opt.mfs_per_input, opt.mf_kind, opt.classes, lo, hi);
  const ParameterCodec codec(grid, lo, hi);
  const FitnessFn fit = fitness_anfis(codec, X_train, {y_train.begin(), y_train.end()}, X_val,
                                      {y_val.begin(), y_val.end()}, opt.ridge);
  const std::vector<std::vector<double>> initial{codec.encode_clamped(grid)};
  AnfisPsoResult res;
  res.pso = pso_optimize(opt.pso, codec.bounds(), fit, initial, observer);
  if (!std::isfinite(res.pso.best_fitness)) throw NumericalError("no feasible ANFIS configuration found by the swarm");
  res.model = codec.decode(res.pso.best_position);
  fit_consequents(res.model, X_train, y_train, opt.ridge);
  res.feature_lo = lo;
  res.feature_hi = hi;
  return res;
}

}  // namespace mibci
