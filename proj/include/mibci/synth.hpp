#pragma once

// Synthetic four-class motor imagery epochs.
//
// Background activity is AR(1) noise per channel, mixed by a subject-specific
// near-identity matrix. Each class adds one band-limited source, projected onto
// a class-specific channel group, scaled so that the band variance on that
// group is `variance_ratio` times the background band variance. Bands and
// channel groups are shared by all subjects; the mixing matrix, source
// patterns and channel gains vary per subject.

#include <cstdint>
#include <vector>

#include "mibci/error.hpp"
#include "mibci/filter.hpp"
#include "mibci/parallel.hpp"
#include "mibci/rng.hpp"
#include "mibci/trialstore.hpp"

namespace mibci {

struct ClassSignature {
  int label = 1;
  BandSpec band;
  std::vector<int> channels;  // indices into standard_channel_names()
};

/// Left hand: Mu over the right sensorimotor strip; right hand: Mu over the
/// left strip; feet: low beta over the midline; tongue: mid beta parietal.
inline std::vector<ClassSignature> synth_signatures() {
  return {{1, {"Mu", 8, 12}, {5, 10, 11, 12, 17}},
          {2, {"Mu", 8, 12}, {1, 6, 7, 8, 13}},
          {3, {"LowBeta", 12, 16}, {0, 3, 9, 15}},
          {4, {"MidBeta", 16, 20}, {18, 19, 20, 21}}};
}

struct SynthOptions {
  int subjects = 9;
  int trials_per_class = 72;
  int sessions = 1;
  std::uint64_t seed = 42;
  double variance_ratio = 4.0;
  double sample_rate = 250.0;
  std::size_t samples = 1000;
  double ar_coefficient = 0.9;
  double amplitude_uv = 10.0;
  int jobs = 1;
};

namespace detail {

inline double row_variance(const Eigen::Ref<const Eigen::RowVectorXd>& r) {
  const double mu = r.mean();
  return (r.array() - mu).square().mean();
}

struct SubjectModel {
  Matrix mixing;
  Vector gains;
  std::vector<Vector> patterns;  // per class, weights over that class's channel group
};

inline SubjectModel make_subject(int subject, std::size_t channels, const std::vector<ClassSignature>& sigs,
                                 std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x5B1ull, static_cast<std::uint64_t>(subject)}));
  const auto ch = static_cast<Eigen::Index>(channels);
  SubjectModel m;
  m.mixing = Matrix::Identity(ch, ch);
  const double spread = 0.15 / std::sqrt(static_cast<double>(channels));
  for (Eigen::Index i = 0; i < ch; ++i)
    for (Eigen::Index j = 0; j < ch; ++j) m.mixing(i, j) += spread * rng.normal();
  m.gains.resize(ch);
  for (Eigen::Index i = 0; i < ch; ++i) m.gains(i) = rng.uniform(0.7, 1.3);
  for (const auto& s : sigs) {
    Vector p(static_cast<Eigen::Index>(s.channels.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(0.7, 1.3);
    m.patterns.push_back(p);
  }
  return m;
}

}  // namespace detail

inline TrialSet synth_trialset(const SynthOptions& opt) {
  if (opt.subjects < 1 || opt.trials_per_class < 1 || opt.sessions < 1)
    throw InvalidArgument("synthetic generator needs subjects, trials_per_class and sessions >= 1");
  if (opt.subjects > 0xFFFF || opt.sessions > 0xFF) throw InvalidArgument("subject or session count too large");
  if (!(opt.variance_ratio >= 1.0)) throw InvalidArgument("variance ratio must be >= 1");

  const auto names = standard_channel_names();
  const auto sigs = synth_signatures();
  TrialSet set;
  set.sample_rate = opt.sample_rate;
  set.channel_names = names;
  set.channels = names.size();
  set.samples = opt.samples;
  set.cue_window = {0.0, static_cast<double>(opt.samples) / opt.sample_rate};

  std::vector<IirFilter> source_filters, analysis_filters;
  for (const auto& s : sigs) {
    source_filters.push_back(design_bandpass(s.band, 4, opt.sample_rate));
    analysis_filters.push_back(design_bandpass(s.band, 5, opt.sample_rate));
  }

  struct Slot {
    int subject, session, label, index;
  };
  std::vector<Slot> slots;
  std::vector<detail::SubjectModel> models;
  for (int subj = 1; subj <= opt.subjects; ++subj) {
    models.push_back(detail::make_subject(subj, set.channels, sigs, opt.seed));
    for (int sess = 1; sess <= opt.sessions; ++sess) {
      std::vector<int> labels;
      for (int c = 1; c <= kNumClasses; ++c) labels.insert(labels.end(), static_cast<std::size_t>(opt.trials_per_class), c);
      Rng order(derive_seed(opt.seed, {0x0DDull, static_cast<std::uint64_t>(subj), static_cast<std::uint64_t>(sess)}));
      for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[order.below(i)]);
      for (std::size_t i = 0; i < labels.size(); ++i) slots.push_back({subj, sess, labels[i], static_cast<int>(i)});
    }
  }

  set.trials.resize(slots.size());
  const auto ch = static_cast<Eigen::Index>(set.channels);
  const auto n = static_cast<Eigen::Index>(set.samples);
  parallel_for(slots.size(), opt.jobs, [&](std::size_t k) {
    const Slot& sl = slots[k];
    const auto& model = models[static_cast<std::size_t>(sl.subject - 1)];
    Rng rng(derive_seed(opt.seed, {0x7A1ull, static_cast<std::uint64_t>(sl.subject),
                                   static_cast<std::uint64_t>(sl.session), static_cast<std::uint64_t>(sl.index)}));
    const double rho = opt.ar_coefficient;
    Signal bg(ch, n);
    for (Eigen::Index c = 0; c < ch; ++c) {
      double x = rng.normal() / std::sqrt(1.0 - rho * rho);
      for (Eigen::Index t = 0; t < n; ++t) {
        bg(c, t) = x;
        x = rho * x + rng.normal();
      }
    }
    Signal data = model.mixing * bg;

    const std::size_t cls = static_cast<std::size_t>(sl.label - 1);
    const ClassSignature& sig = sigs[cls];
    Signal white(1, n);
    for (Eigen::Index t = 0; t < n; ++t) white(0, t) = rng.normal();
    const Signal source = filtfilt(source_filters[cls], white);

    // Calibrate the source gain against this trial's own background band power.
    const IirFilter& af = analysis_filters[cls];
    const Vector& pattern = model.patterns[cls];
    double bg_band = 0.0;
    Signal group(static_cast<Eigen::Index>(sig.channels.size()), n);
    for (std::size_t i = 0; i < sig.channels.size(); ++i) group.row(static_cast<Eigen::Index>(i)) = data.row(sig.channels[i]);
    const Signal group_band = filtfilt(af, group);
    for (Eigen::Index i = 0; i < group_band.rows(); ++i) bg_band += detail::row_variance(group_band.row(i));
    bg_band /= static_cast<double>(group_band.rows());
    const double src_band = detail::row_variance(filtfilt(af, source).row(0));
    const double amp = std::sqrt((opt.variance_ratio - 1.0) * bg_band / (src_band * pattern.squaredNorm() /
                                                                           static_cast<double>(pattern.size())));
    for (std::size_t i = 0; i < sig.channels.size(); ++i)
      data.row(sig.channels[i]) += amp * pattern(static_cast<Eigen::Index>(i)) * source.row(0);

    data = (model.gains * opt.amplitude_uv).asDiagonal() * data;
    // Round through f32 so the in-memory set equals its container image.
    data = data.cast<float>().cast<double>();
    set.trials[k] = Trial{std::move(data), sl.label, sl.subject, sl.session};
  });
  return set;
}

inline TrialSet synth_trialset(int subjects, int trials_per_class, std::uint64_t seed) {
  SynthOptions opt;
  opt.subjects = subjects;
  opt.trials_per_class = trials_per_class;
  opt.seed = seed;
  return synth_trialset(opt);
}

}  // namespace mibci
