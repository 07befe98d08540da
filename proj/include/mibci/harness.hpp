#pragma once

// Within-subject and leave-one-subject-out evaluation of the ANFIS-FBCSP-PSO
// pipeline.
//
// Per fold, with R the fold's training side and T its test side:
//   R is split (stratified 75/25) into F, the fitting part, and V, the swarm's
//   validation part. Synthetic trials S are recombined from donors in F only.
//   The extractor is fitted on F + S. The swarm scores each position by fitting
//   consequents on F + S and measuring accuracy on V. The winning premise then
//   gets final consequents fitted on F + V + S. Trials of T are pushed through
//   the full filter-bank transform one at a time and never touch any fit.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/anfis.hpp"
#include "mibci/anfis_io.hpp"
#include "mibci/anfis_pso.hpp"
#include "mibci/anfis_train.hpp"
#include "mibci/augment.hpp"
#include "mibci/error.hpp"
#include "mibci/fbcsp.hpp"
#include "mibci/filter.hpp"
#include "mibci/metrics.hpp"
#include "mibci/parallel.hpp"
#include "mibci/preprocess.hpp"
#include "mibci/report.hpp"
#include "mibci/splits.hpp"
#include "mibci/trialstore.hpp"

namespace mibci {

struct PipelineConfig {
  PreprocessConfig preprocess;
  std::vector<BandSpec> bands = default_bands();
  int filter_order = 5;
  FbcspOptions fbcsp;
  AnfisPsoOptions anfis;  // pso.seed and pso.jobs are set per fold
  bool finetune = false;
  FinetuneOptions finetune_options;
  bool augment = true;
  SrConfig augment_options;  // seed is set per fold
  double train_fraction = 0.8;
  double inner_train_fraction = 0.75;
  int session = 0;  // 0 pools every session
  StdKind std_kind = StdKind::Population;
  int jobs = 1;
};

/// Which trials each stage of one fold touched. Indices refer to the TrialSet.
struct FoldAudit {
  int test_subject = 0;
  std::vector<std::size_t> train, test;
  std::vector<std::size_t> extractor_fit, consequent_fit, pso_fit, pso_validation, donors;
  std::size_t synthetic = 0;
  std::size_t evaluated = 0;

  /// Throws LeakageError if any fitting stage saw a test trial, if donors left
  /// the fitting part, or if anything other than the real test trials was scored.
  void check(const TrialSet& set, Protocol protocol) const {
    const std::set<std::size_t> tr(train.begin(), train.end()), te(test.begin(), test.end());
    auto fail = [&](const std::string& what) {
      throw LeakageError("fold for subject " + std::to_string(test_subject) + ": " + what);
    };
    for (auto i : test)
      if (tr.count(i)) fail("trial " + std::to_string(i) + " is on both sides");
    auto within_train = [&](const std::vector<std::size_t>& v, const char* stage) {
      for (auto i : v)
        if (!tr.count(i) || te.count(i)) fail(std::string(stage) + " used trial " + std::to_string(i) + " from outside the training side");
    };
    within_train(extractor_fit, "extractor fit");
    within_train(consequent_fit, "consequent fit");
    within_train(pso_fit, "swarm fitting part");
    within_train(pso_validation, "swarm validation");
    within_train(donors, "augmentation");
    const std::set<std::size_t> fit(pso_fit.begin(), pso_fit.end());
    for (auto i : pso_validation)
      if (fit.count(i)) fail("swarm validation trial " + std::to_string(i) + " is also a fitting trial");
    for (auto i : donors)
      if (!fit.count(i)) fail("augmentation donor " + std::to_string(i) + " is outside the fitting part");
    if (evaluated != test.size()) fail("scored " + std::to_string(evaluated) + " trials, expected " + std::to_string(test.size()));
    for (auto i : test)
      if (i >= set.size() || set.trials[i].subject != test_subject) fail("test trial " + std::to_string(i) + " is not from the test subject");
    if (protocol == Protocol::Loso)
      for (auto i : train)
        if (set.trials[i].subject == test_subject) fail("held-out subject appears on the training side");
  }
};

struct FoldResult {
  int subject = 0;
  MetricRow row;
  ConfusionMatrix confusion{kNumClasses};
  AnfisModel model;
  FbcspExtractor extractor;
  PsoResult pso;
  FoldAudit audit;
  Matrix reference;  // features the final consequents were fitted on
  std::vector<int> y_true, y_pred;
};

struct ProtocolResult {
  EvalReport report;
  std::vector<FoldResult> folds;
  std::vector<SessionIcaSummary> ica;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
std::vector<T> gather(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace detail

/// Seed the harness hands to preprocess_in_place for a run seeded with `seed`.
inline std::uint64_t preprocess_seed(std::uint64_t seed) { return derive_seed(seed, {0x1CA}); }

/// Runs one protocol on a copy of `input`. The copy is preprocessed once
/// (unsupervised, label-free), then every fold is fitted from its training side.
inline ProtocolResult run_protocol(const TrialSet& input, Protocol protocol, const PipelineConfig& cfg, std::uint64_t seed,
                                   const ProgressFn& progress = {}) {
  input.validate();
  if (input.trials.empty()) throw InvalidArgument("empty trial set");
  ProtocolResult result;
  TrialSet set = input;
  result.ica = preprocess_in_place(set, cfg.preprocess, preprocess_seed(seed));
  const FilterBank bank = FilterBank::design(cfg.bands, cfg.filter_order, set.sample_rate);
  const std::vector<int> labels = set.labels();

  struct FoldPlan {
    int subject;
    Split split;
  };
  std::vector<FoldPlan> folds;
  if (protocol == Protocol::Within) {
    for (int s : set.subjects()) folds.push_back({s, within_subject_split(set, s, cfg.train_fraction, seed, cfg.session)});
  } else {
    for (const auto& f : loso_folds(set)) {
      Split sp = loso_split(set, f);
      if (cfg.session != 0) {
        auto keep = [&](std::vector<std::size_t>& v) {
          std::erase_if(v, [&](std::size_t i) { return set.trials[i].session != cfg.session; });
        };
        keep(sp.train);
        keep(sp.test);
      }
      folds.push_back({f.test_subject, std::move(sp)});
    }
  }

  // Band covariances of training-side trials, computed once. Each fold is
  // charged the compute time of the cached entries it uses.
  std::vector<BandCovariances> cache(set.size());
  std::vector<double> cache_seconds(set.size(), 0.0);
  {
    std::vector<char> needed(set.size(), 0);
    for (const auto& f : folds)
      for (auto i : f.split.train) needed[i] = 1;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (needed[i]) todo.push_back(i);
    if (progress) progress("filtering " + std::to_string(todo.size()) + " training trials");
    parallel_for(todo.size(), cfg.jobs, [&](std::size_t k) {
      const auto t0 = detail::Clock::now();
      cache[todo[k]] = band_covariances(bank, set.trials[todo[k]].data);
      cache_seconds[todo[k]] = detail::seconds_since(t0);
    });
  }

  for (const auto& plan : folds) {
    const auto t0 = detail::Clock::now();
    const std::uint64_t fold_seed = derive_seed(seed, {0xF01Dull, static_cast<std::uint64_t>(plan.subject)});
    FoldResult fr;
    fr.subject = plan.subject;
    FoldAudit& audit = fr.audit;
    audit.test_subject = plan.subject;
    audit.train = plan.split.train;
    audit.test = plan.split.test;

    const Split inner = stratified_partition(labels, plan.split.train, cfg.inner_train_fraction, fold_seed, 0x1AAull);
    audit.pso_fit = inner.train;
    audit.pso_validation = inner.test;

    std::vector<BandCovariances> fit_covs = detail::gather(cache, inner.train);
    std::vector<int> fit_labels = detail::gather(labels, inner.train);
    double charged = 0.0;
    for (auto i : plan.split.train) charged += cache_seconds[i];

    if (cfg.augment) {
      SrConfig sr = cfg.augment_options;
      sr.seed = derive_seed(fold_seed, {0xA06ull});
      std::vector<SyntheticTrial> synthetic;
      for (int c = 1; c <= kNumClasses; ++c) {
        std::vector<const Signal*> donors;
        for (auto i : inner.train)
          if (labels[i] == c) {
            donors.push_back(&set.trials[i].data);
            audit.donors.push_back(i);
          }
        auto part = sr_augment(donors, c, sr);
        for (auto& t : part) synthetic.push_back(std::move(t));
      }
      std::vector<BandCovariances> syn_covs(synthetic.size());
      parallel_for(synthetic.size(), cfg.jobs, [&](std::size_t k) { syn_covs[k] = band_covariances(bank, synthetic[k].data); });
      for (std::size_t k = 0; k < synthetic.size(); ++k) {
        fit_covs.push_back(std::move(syn_covs[k]));
        fit_labels.push_back(synthetic[k].label);
      }
      audit.synthetic = synthetic.size();
    }
    std::sort(audit.donors.begin(), audit.donors.end());

    fr.extractor = FbcspExtractor::fit(bank, fit_covs, fit_labels, cfg.fbcsp);
    audit.extractor_fit = inner.train;
    const Matrix X_fit = fr.extractor.transform_many(fit_covs);
    const std::vector<BandCovariances> val_covs = detail::gather(cache, inner.test);
    const Matrix X_val = fr.extractor.transform_many(val_covs);
    const std::vector<int> y_val = detail::gather(labels, inner.test);

    AnfisPsoOptions opt = cfg.anfis;
    opt.pso.seed = derive_seed(fold_seed, {0x950ull});
    opt.pso.jobs = cfg.jobs;
    if (progress) progress("subject " + std::to_string(plan.subject) + ": swarm search over " +
                           std::to_string(X_fit.rows()) + " fitting / " + std::to_string(X_val.rows()) + " validation trials");
    AnfisPsoResult trained = train_anfis_pso(X_fit, fit_labels, X_val, y_val, opt);
    fr.pso = std::move(trained.pso);
    fr.model = std::move(trained.model);
    fr.model.input_names = fr.extractor.selected_names();

    fr.reference = detail::vstack(X_fit, X_val);
    std::vector<int> y_all = fit_labels;
    y_all.insert(y_all.end(), y_val.begin(), y_val.end());
    fit_consequents(fr.model, fr.reference, y_all, opt.ridge);
    if (cfg.finetune) fr.model = anfis_finetune(fr.model, fr.reference, y_all, cfg.finetune_options).model;
    audit.consequent_fit = plan.split.train;
    const double train_s = detail::seconds_since(t0) + charged;

    double predict_s = 0.0;
    for (auto i : plan.split.test) {
      const auto p0 = detail::Clock::now();
      const FeatureVector fv = fr.extractor.transform(set.trials[i].data);
      const int y = predict(fr.model, fv.values);
      predict_s += detail::seconds_since(p0);
      fr.y_true.push_back(labels[i]);
      fr.y_pred.push_back(y);
    }
    audit.evaluated = fr.y_pred.size();
    audit.check(set, protocol);

    fr.confusion = confusion(fr.y_true, fr.y_pred, kNumClasses);
    const double latency = fr.y_pred.empty() ? 0.0 : predict_s / static_cast<double>(fr.y_pred.size());
    fr.row = metric_row(plan.subject, metrics(fr.confusion), train_s, latency);
    if (progress) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "subject %d: accuracy %.2f%%, kappa %.2f%%, train %.1f s", plan.subject,
                    fr.row.accuracy, fr.row.kappa, train_s);
      progress(buf);
    }
    result.report.rows.push_back(fr.row);
    result.folds.push_back(std::move(fr));
  }

  result.report.protocol = protocol;
  result.report.model = "anfis-fbcsp-pso";
  result.report.seed = seed;
  result.report.std_kind = cfg.std_kind;
  result.report.finalize();
  return result;
}

/// Self-contained trained pipeline for one fold: extractor, model and the
/// reference features used to rank rules.
inline nlohmann::json pipeline_bundle_json(const FoldResult& fold, Protocol protocol) {
  nlohmann::json ref = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fold.reference.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(fold.reference.cols()));
    for (Eigen::Index c = 0; c < fold.reference.cols(); ++c) row[static_cast<std::size_t>(c)] = fold.reference(r, c);
    ref.push_back(row);
  }
  return {{"format", "mibci-pipeline"},
          {"version", 1},
          {"protocol", to_string(protocol)},
          {"subject", fold.subject},
          {"extractor", fold.extractor.to_json()},
          {"anfis", anfis_to_json(fold.model)},
          {"reference_features", std::move(ref)}};
}

struct PipelineBundle {
  int subject = 0;
  FbcspExtractor extractor;
  AnfisModel model;
  Matrix reference;
};

inline PipelineBundle pipeline_bundle_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mibci-pipeline") throw FormatError("not a pipeline bundle");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported pipeline bundle version");
    PipelineBundle b;
    b.subject = j.at("subject").get<int>();
    b.extractor = FbcspExtractor::from_json(j.at("extractor"));
    b.model = anfis_from_json(j.at("anfis"));
    const auto& ref = j.at("reference_features");
    b.reference.resize(static_cast<Eigen::Index>(ref.size()), b.model.inputs);
    for (std::size_t r = 0; r < ref.size(); ++r) {
      const auto row = ref[r].get<std::vector<double>>();
      if (row.size() != static_cast<std::size_t>(b.model.inputs)) throw FormatError("reference row has wrong width");
      for (std::size_t c = 0; c < row.size(); ++c) b.reference(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed pipeline bundle: ") + e.what());
  }
}

}  // namespace mibci
