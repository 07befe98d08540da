#pragma once

// First-order Sugeno ANFIS with a grid-partition rule base and one linear
// consequent head per class.
//
//   layer 1  mu_ij = MF_ij(x_i)
//   layer 2  w_r   = weight_r * prod_i mu_{i, j_r(i)}
//   layer 3  n_r   = w_r / sum_k w_k        (uniform if the sum underflows)
//   layer 4  f_rc  = a_rc . x + b_rc
//   layer 5  s_c   = sum_r n_r f_rc

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "mibci/error.hpp"

namespace mibci {

inline constexpr std::size_t kMaxRules = 128;
inline constexpr double kFiringUnderflow = 1e-300;

enum class MfKind { Gaussian, Bell, Triangular };

inline std::string to_string(MfKind k) {
  switch (k) {
    case MfKind::Gaussian: return "gaussian";
    case MfKind::Bell: return "bell";
    case MfKind::Triangular: return "triangular";
  }
  return "?";
}

inline MfKind mf_kind_from_string(const std::string& s) {
  if (s == "gaussian") return MfKind::Gaussian;
  if (s == "bell") return MfKind::Bell;
  if (s == "triangular") return MfKind::Triangular;
  throw InvalidArgument("unknown membership function kind '" + s + "'");
}

inline int mf_param_count(MfKind k) { return k == MfKind::Gaussian ? 2 : 3; }

/// gaussian: (center, sigma); bell: (center, width, slope); triangular: (left, peak, right).
struct MembershipFunction {
  MfKind kind = MfKind::Gaussian;
  std::array<double, 3> params{0.0, 1.0, 0.0};

  static MembershipFunction gaussian(double center, double sigma) { return {MfKind::Gaussian, {center, sigma, 0.0}}; }
  static MembershipFunction bell(double center, double width, double slope) {
    return {MfKind::Bell, {center, width, slope}};
  }
  static MembershipFunction triangular(double left, double peak, double right) {
    return {MfKind::Triangular, {left, peak, right}};
  }

  int param_count() const { return mf_param_count(kind); }

  bool valid() const {
    for (int i = 0; i < param_count(); ++i)
      if (!std::isfinite(params[static_cast<std::size_t>(i)])) return false;
    switch (kind) {
      case MfKind::Gaussian: return params[1] > 0.0;
      case MfKind::Bell: return params[1] > 0.0 && params[2] > 0.0;
      case MfKind::Triangular: return params[0] <= params[1] && params[1] <= params[2];
    }
    return false;
  }

  std::string describe() const {
    char buf[160];
    switch (kind) {
      case MfKind::Gaussian: std::snprintf(buf, sizeof buf, "gauss(c=%.4f, s=%.4f)", params[0], params[1]); break;
      case MfKind::Bell:
        std::snprintf(buf, sizeof buf, "bell(c=%.4f, a=%.4f, b=%.4f)", params[0], params[1], params[2]);
        break;
      case MfKind::Triangular:
        std::snprintf(buf, sizeof buf, "tri(l=%.4f, p=%.4f, r=%.4f)", params[0], params[1], params[2]);
        break;
    }
    return buf;
  }
};

inline double mf_eval(const MembershipFunction& mf, double x) {
  const auto& p = mf.params;
  switch (mf.kind) {
    case MfKind::Gaussian: {
      const double u = (x - p[0]) / p[1];
      return std::exp(-0.5 * u * u);
    }
    case MfKind::Bell: {
      const double u = std::abs((x - p[0]) / p[1]);
      return 1.0 / (1.0 + std::pow(u, 2.0 * p[2]));
    }
    case MfKind::Triangular: {
      if (x == p[1]) return 1.0;
      if (x < p[1]) return p[0] < p[1] && x > p[0] ? (x - p[0]) / (p[1] - p[0]) : 0.0;
      return p[2] > p[1] && x < p[2] ? (p[2] - x) / (p[2] - p[1]) : 0.0;
    }
  }
  return 0.0;
}

struct AnfisModel {
  int inputs = 0;
  int mfs_per_input = 2;
  int classes = 4;
  std::vector<std::vector<MembershipFunction>> mfs;  // [input][mf]
  std::vector<double> rule_weights;
  std::vector<double> consequents;  // [(rule * classes + class) * (inputs + 1) + k], k == inputs is the bias
  std::vector<std::string> input_names;

  std::size_t rule_count() const {
    std::size_t r = 1;
    for (int i = 0; i < inputs; ++i) r *= static_cast<std::size_t>(mfs_per_input);
    return r;
  }

  /// Index of the MF of input i used by rule r; input 0 is the most significant digit.
  int rule_mf(std::size_t r, int i) const {
    std::size_t div = 1;
    for (int k = i + 1; k < inputs; ++k) div *= static_cast<std::size_t>(mfs_per_input);
    return static_cast<int>((r / div) % static_cast<std::size_t>(mfs_per_input));
  }

  std::size_t consequent_index(std::size_t r, int c, int k) const {
    return (r * static_cast<std::size_t>(classes) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(inputs + 1) +
           static_cast<std::size_t>(k);
  }
  double consequent(std::size_t r, int c, int k) const { return consequents[consequent_index(r, c, k)]; }
  double& consequent(std::size_t r, int c, int k) { return consequents[consequent_index(r, c, k)]; }

  void validate() const {
    if (inputs < 1 || mfs_per_input < 1 || classes < 1) throw InvalidArgument("ANFIS needs inputs, MFs and classes >= 1");
    double rules = 1.0;
    for (int i = 0; i < inputs; ++i) rules *= mfs_per_input;
    if (rules > static_cast<double>(kMaxRules))
      throw InvalidArgument("rule base of " + std::to_string(static_cast<long long>(rules)) + " rules exceeds the cap of " +
                            std::to_string(kMaxRules));
    if (mfs.size() != static_cast<std::size_t>(inputs)) throw InvalidArgument("MF table does not match input count");
    for (const auto& row : mfs) {
      if (row.size() != static_cast<std::size_t>(mfs_per_input)) throw InvalidArgument("MF row has wrong length");
      for (const auto& mf : row)
        if (!mf.valid()) throw InvalidArgument("invalid membership function " + mf.describe());
    }
    if (rule_weights.size() != rule_count()) throw InvalidArgument("rule weight count mismatch");
    for (double w : rule_weights)
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("rule weights must be positive and finite");
    if (consequents.size() != rule_count() * static_cast<std::size_t>(classes) * static_cast<std::size_t>(inputs + 1))
      throw InvalidArgument("consequent tensor has wrong size");
    for (double v : consequents)
      if (!std::isfinite(v)) throw InvalidArgument("non-finite consequent");
    if (!input_names.empty() && input_names.size() != static_cast<std::size_t>(inputs))
      throw InvalidArgument("input name count mismatch");
  }
};

/// Grid model with MFs evenly spread over [lo_i, hi_i], unit rule weights, zero consequents.
inline AnfisModel make_grid_model(int inputs, int mfs_per_input, MfKind kind, int classes, std::span<const double> lo,
                                  std::span<const double> hi) {
  if (lo.size() != static_cast<std::size_t>(inputs) || hi.size() != static_cast<std::size_t>(inputs))
    throw InvalidArgument("feature range size mismatch");
  AnfisModel m;
  m.inputs = inputs;
  m.mfs_per_input = mfs_per_input;
  m.classes = classes;
  for (int i = 0; i < inputs; ++i) {
    const double a = lo[static_cast<std::size_t>(i)];
    const double range = std::max(hi[static_cast<std::size_t>(i)] - a, 1e-6);
    const double step = mfs_per_input > 1 ? range / (mfs_per_input - 1) : range;
    std::vector<MembershipFunction> row;
    for (int j = 0; j < mfs_per_input; ++j) {
      const double c = mfs_per_input > 1 ? a + j * step : a + 0.5 * range;
      switch (kind) {
        case MfKind::Gaussian: row.push_back(MembershipFunction::gaussian(c, step / 2.0)); break;
        case MfKind::Bell: row.push_back(MembershipFunction::bell(c, step / 2.0, 2.0)); break;
        case MfKind::Triangular: row.push_back(MembershipFunction::triangular(c - step, c, c + step)); break;
      }
    }
    m.mfs.push_back(std::move(row));
  }
  m.rule_weights.assign(m.rule_count(), 1.0);
  m.consequents.assign(m.rule_count() * static_cast<std::size_t>(classes) * static_cast<std::size_t>(inputs + 1), 0.0);
  m.validate();
  return m;
}

struct ForwardResult {
  std::vector<double> scores;             // per class
  std::vector<double> normalized_firing;  // per rule, sums to 1
};

/// Layers 1-3: normalized firing strengths into `out` (size rule_count()).
inline void normalized_firing(const AnfisModel& m, std::span<const double> x, std::span<double> out) {
  if (x.size() != static_cast<std::size_t>(m.inputs))
    throw InvalidArgument("input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(m.inputs));
  const auto M = static_cast<std::size_t>(m.mfs_per_input);
  double mu[16 * 8];
  std::vector<double> mu_heap;
  double* mu_ptr = mu;
  if (static_cast<std::size_t>(m.inputs) * M > sizeof(mu) / sizeof(double)) {
    mu_heap.resize(static_cast<std::size_t>(m.inputs) * M);
    mu_ptr = mu_heap.data();
  }
  for (int i = 0; i < m.inputs; ++i)
    for (std::size_t j = 0; j < M; ++j)
      mu_ptr[static_cast<std::size_t>(i) * M + j] = mf_eval(m.mfs[static_cast<std::size_t>(i)][j], x[static_cast<std::size_t>(i)]);

  const std::size_t R = m.rule_count();
  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    double w = m.rule_weights[r];
    std::size_t rest = r;
    for (int i = m.inputs - 1; i >= 0; --i) {
      w *= mu_ptr[static_cast<std::size_t>(i) * M + rest % M];
      rest /= M;
    }
    out[r] = w;
    total += w;
  }
  if (total < kFiringUnderflow || !std::isfinite(total)) {
    for (std::size_t r = 0; r < R; ++r) out[r] = 1.0 / static_cast<double>(R);
    return;
  }
  for (std::size_t r = 0; r < R; ++r) out[r] /= total;
}

inline ForwardResult anfis_forward(const AnfisModel& m, std::span<const double> x) {
  ForwardResult res;
  const std::size_t R = m.rule_count();
  res.normalized_firing.resize(R);
  normalized_firing(m, x, res.normalized_firing);
  res.scores.assign(static_cast<std::size_t>(m.classes), 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const double n = res.normalized_firing[r];
    for (int c = 0; c < m.classes; ++c) {
      const double* a = &m.consequents[m.consequent_index(r, c, 0)];
      double f = a[m.inputs];
      for (int k = 0; k < m.inputs; ++k) f += a[k] * x[static_cast<std::size_t>(k)];
      res.scores[static_cast<std::size_t>(c)] += n * f;
    }
  }
  return res;
}

/// 1-based index of the largest score; ties resolve to the lowest class id.
inline int argmax_class(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<int>(best) + 1;
}

inline int predict(const AnfisModel& m, std::span<const double> x) { return argmax_class(anfis_forward(m, x).scores); }

}  // namespace mibci
