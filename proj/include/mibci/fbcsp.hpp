#pragma once

// Filter-bank CSP: per-band one-vs-rest CSP filters, log-variance features and
// mutual-information feature selection.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/csp.hpp"
#include "mibci/error.hpp"
#include "mibci/filter.hpp"
#include "mibci/mutual_info.hpp"
#include "mibci/parallel.hpp"
#include "mibci/signal.hpp"
#include "mibci/trialstore.hpp"

namespace mibci {

/// Per-band spatial covariances of one trial; everything CSP needs.
struct BandCovariances {
  std::vector<Matrix> bands;
};

inline BandCovariances band_covariances(const FilterBank& bank, const Signal& trial) {
  BandCovariances out;
  out.bands.reserve(bank.size());
  for (const auto& f : bank.filters) out.bands.push_back(trial_covariance(filtfilt(f, trial)));
  return out;
}

inline std::vector<BandCovariances> band_covariances(const FilterBank& bank, const TrialSet& set, int jobs = 1) {
  std::vector<BandCovariances> out(set.size());
  parallel_for(set.size(), jobs, [&](std::size_t i) { out[i] = band_covariances(bank, set.trials[i].data); });
  return out;
}

enum class SelectionMode {
  Global,      // top k over all band/pairing/component features
  PerPairing,  // top k within each one-vs-rest pairing
};

struct FbcspOptions {
  int components_per_band = 4;
  int select_k = 4;
  SelectionMode selection = SelectionMode::Global;
  double shrinkage = 0.05;
  int mi_bins = 8;
  int classes = kNumClasses;
};

struct FeatureProvenance {
  int band = 0;
  int pairing = 1;  // class id
  int component = 0;
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<FeatureProvenance> provenance;
};

class FbcspExtractor {
 public:
  FbcspExtractor() = default;

  static FbcspExtractor fit(const FilterBank& bank, std::span<const BandCovariances> trials, std::span<const int> labels,
                            const FbcspOptions& opt) {
    if (trials.size() != labels.size()) throw InvalidArgument("trial and label counts differ");
    if (opt.components_per_band < 2 || opt.components_per_band % 2 != 0)
      throw InvalidArgument("components per band must be even and >= 2");
    FbcspExtractor ex;
    ex.bank_ = bank;
    ex.options_ = opt;
    for (int c = 1; c <= opt.classes; ++c)
      if (std::find(labels.begin(), labels.end(), c) == labels.end())
        throw InvalidArgument("class " + std::to_string(c) + " missing from training data");
    for (int y : labels)
      if (y < 1 || y > opt.classes) throw InvalidArgument("label " + std::to_string(y) + " out of range");

    const std::size_t nb = bank.size();
    ex.csp_.assign(nb, {});
    for (std::size_t b = 0; b < nb; ++b) {
      for (int c = 1; c <= opt.classes; ++c) {
        std::vector<Matrix> in, out;
        for (std::size_t i = 0; i < trials.size(); ++i) {
          if (trials[i].bands.size() != nb) throw InvalidArgument("band count mismatch in training covariances");
          (labels[i] == c ? in : out).push_back(trials[i].bands[b]);
        }
        const Matrix ca = regularized_covariance(std::span<const Matrix>(in), opt.shrinkage);
        const Matrix cb = regularized_covariance(std::span<const Matrix>(out), opt.shrinkage);
        ex.csp_[b].push_back(csp_fit(ca, cb, opt.components_per_band, c));
      }
    }
    ex.feature_dim_ = nb * static_cast<std::size_t>(opt.classes) * static_cast<std::size_t>(opt.components_per_band);
    const std::size_t groups = opt.selection == SelectionMode::Global ? 1 : static_cast<std::size_t>(opt.classes);
    if (opt.select_k < 1 || static_cast<std::size_t>(opt.select_k) * groups > ex.feature_dim_)
      throw InvalidArgument("select_k " + std::to_string(opt.select_k) + " exceeds the " +
                            std::to_string(ex.feature_dim_ / groups) + " available features");

    Matrix feats(static_cast<Eigen::Index>(trials.size()), static_cast<Eigen::Index>(ex.feature_dim_));
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto row = ex.all_features(trials[i]);
      for (std::size_t d = 0; d < row.size(); ++d) feats(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
    }
    ex.ranking_ = mutual_information_rank(feats, labels, opt.mi_bins);
    if (opt.selection == SelectionMode::Global) {
      for (int k = 0; k < opt.select_k; ++k) ex.selected_.push_back(ex.ranking_[static_cast<std::size_t>(k)].index);
    } else {
      for (int c = 1; c <= opt.classes; ++c) {
        int taken = 0;
        for (const auto& r : ex.ranking_) {
          if (taken == opt.select_k) break;
          if (ex.provenance_of(r.index).pairing == c) {
            ex.selected_.push_back(r.index);
            ++taken;
          }
        }
      }
    }
    return ex;
  }

  /// Every band x pairing x component feature, before selection.
  std::vector<double> all_features(const BandCovariances& covs) const {
    if (covs.bands.size() != csp_.size()) throw InvalidArgument("band count mismatch");
    std::vector<double> out;
    out.reserve(feature_dim_);
    for (std::size_t b = 0; b < csp_.size(); ++b)
      for (const auto& model : csp_[b]) {
        const auto f = csp_features_from_covariance(model, covs.bands[b]);
        out.insert(out.end(), f.begin(), f.end());
      }
    return out;
  }

  FeatureVector transform(const BandCovariances& covs) const {
    const auto all = all_features(covs);
    FeatureVector fv;
    for (auto idx : selected_) {
      fv.values.push_back(all[idx]);
      fv.provenance.push_back(provenance_of(idx));
    }
    return fv;
  }

  FeatureVector transform(const Signal& trial) const {
    if (trial.rows() != channels()) throw InvalidArgument("trial has " + std::to_string(trial.rows()) +
                                                          " channels, extractor expects " + std::to_string(channels()));
    return transform(band_covariances(bank_, trial));
  }

  /// trials x selected features.
  Matrix transform_many(std::span<const BandCovariances> covs) const {
    Matrix out(static_cast<Eigen::Index>(covs.size()), static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t i = 0; i < covs.size(); ++i) {
      const auto fv = transform(covs[i]);
      for (std::size_t d = 0; d < fv.values.size(); ++d)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = fv.values[d];
    }
    return out;
  }

  FeatureProvenance provenance_of(std::size_t flat) const {
    const auto m = static_cast<std::size_t>(options_.components_per_band);
    const auto k = static_cast<std::size_t>(options_.classes);
    return {static_cast<int>(flat / (k * m)), static_cast<int>((flat / m) % k) + 1, static_cast<int>(flat % m)};
  }

  std::string describe(const FeatureProvenance& p) const {
    return bank_.filters.at(static_cast<std::size_t>(p.band)).band.label() + "/class" + std::to_string(p.pairing) +
           "-vs-rest/c" + std::to_string(p.component);
  }

  std::vector<std::string> selected_names() const {
    std::vector<std::string> out;
    for (auto idx : selected_) out.push_back(describe(provenance_of(idx)));
    return out;
  }

  Eigen::Index channels() const { return csp_.empty() ? 0 : csp_.front().front().filters.cols(); }
  const FilterBank& bank() const { return bank_; }
  const FbcspOptions& options() const { return options_; }
  const std::vector<std::vector<CspModel>>& csp_models() const { return csp_; }
  const std::vector<std::size_t>& selected() const { return selected_; }
  const std::vector<RankedFeature>& ranking() const { return ranking_; }
  std::size_t feature_dim() const { return feature_dim_; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "mibci-fbcsp";
    j["version"] = 1;
    j["sample_rate"] = bank_.sample_rate;
    j["filter_order"] = bank_.order;
    for (const auto& b : bank_.bands()) j["bands"].push_back({{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
    j["components_per_band"] = options_.components_per_band;
    j["select_k"] = options_.select_k;
    j["selection"] = options_.selection == SelectionMode::Global ? "global" : "per_pairing";
    j["shrinkage"] = options_.shrinkage;
    j["mi_bins"] = options_.mi_bins;
    j["classes"] = options_.classes;
    j["feature_dim"] = feature_dim_;
    j["csp"] = nlohmann::json::array();
    for (std::size_t b = 0; b < csp_.size(); ++b)
      for (const auto& m : csp_[b]) {
        std::vector<double> flat(static_cast<std::size_t>(m.filters.size()));
        for (Eigen::Index r = 0; r < m.filters.rows(); ++r)
          for (Eigen::Index c = 0; c < m.filters.cols(); ++c)
            flat[static_cast<std::size_t>(r * m.filters.cols() + c)] = m.filters(r, c);
        j["csp"].push_back({{"band", b},
                            {"pairing", m.pairing},
                            {"rows", m.filters.rows()},
                            {"cols", m.filters.cols()},
                            {"filters", flat},
                            {"eigenvalues", m.eigenvalues}});
      }
    j["selected"] = selected_;
    j["selected_names"] = selected_names();
    return j;
  }

  static FbcspExtractor from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != "mibci-fbcsp") throw FormatError("not an FBCSP extractor document");
      if (j.at("version").get<int>() != 1) throw FormatError("unsupported FBCSP extractor version");
      std::vector<BandSpec> bands;
      for (const auto& b : j.at("bands"))
        bands.push_back({b.at("name").get<std::string>(), b.at("low_hz").get<double>(), b.at("high_hz").get<double>()});
      FbcspExtractor ex;
      ex.bank_ = FilterBank::design(bands, j.at("filter_order").get<int>(), j.at("sample_rate").get<double>());
      ex.options_.components_per_band = j.at("components_per_band").get<int>();
      ex.options_.select_k = j.at("select_k").get<int>();
      ex.options_.selection = j.at("selection").get<std::string>() == "global" ? SelectionMode::Global
                                                                              : SelectionMode::PerPairing;
      ex.options_.shrinkage = j.at("shrinkage").get<double>();
      ex.options_.mi_bins = j.at("mi_bins").get<int>();
      ex.options_.classes = j.at("classes").get<int>();
      ex.feature_dim_ = j.at("feature_dim").get<std::size_t>();
      ex.csp_.assign(bands.size(), {});
      for (const auto& c : j.at("csp")) {
        CspModel m;
        m.pairing = c.at("pairing").get<int>();
        const auto rows = c.at("rows").get<Eigen::Index>();
        const auto cols = c.at("cols").get<Eigen::Index>();
        const auto flat = c.at("filters").get<std::vector<double>>();
        if (flat.size() != static_cast<std::size_t>(rows * cols)) throw FormatError("CSP filter array size mismatch");
        m.filters.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
          for (Eigen::Index k = 0; k < cols; ++k) m.filters(r, k) = flat[static_cast<std::size_t>(r * cols + k)];
        m.eigenvalues = c.at("eigenvalues").get<std::vector<double>>();
        ex.csp_.at(c.at("band").get<std::size_t>()).push_back(std::move(m));
      }
      ex.selected_ = j.at("selected").get<std::vector<std::size_t>>();
      for (auto s : ex.selected_)
        if (s >= ex.feature_dim_) throw FormatError("selected feature index out of range");
      return ex;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed FBCSP extractor: ") + e.what());
    }
  }

 private:
  FilterBank bank_;
  FbcspOptions options_;
  std::vector<std::vector<CspModel>> csp_;  // [band][pairing - 1]
  std::vector<std::size_t> selected_;
  std::vector<RankedFeature> ranking_;
  std::size_t feature_dim_ = 0;
};

inline FbcspExtractor fbcsp_fit(const TrialSet& train, const FilterBank& bank, int components_per_band, int select_k,
                                int jobs = 1) {
  FbcspOptions opt;
  opt.components_per_band = components_per_band;
  opt.select_k = select_k;
  const auto covs = band_covariances(bank, train, jobs);
  const auto labels = train.labels();
  return FbcspExtractor::fit(bank, covs, labels, opt);
}

inline FeatureVector fbcsp_transform(const FbcspExtractor& ex, const Trial& trial) { return ex.transform(trial.data); }

}  // namespace mibci
