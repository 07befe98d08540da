#pragma once

// Train/test partitions. The index sets are a pure function of the trial order,
// labels and seed, so another implementation can reproduce them exactly:
//
//   for each class c = 1..4, in ascending order:
//     members = indices i of the pool (ascending) with label c
//     rng     = Rng(derive_seed(seed, {tag, c}))
//     for i = n-1 down to 1: j = rng.below(i + 1); swap(members[i], members[j])
//     the first floor(fraction * n + 1e-9) members go to train, the rest to test
//   both sides are returned sorted ascending
//
// Within-subject splits use tag = subject id over that subject's trials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mibci/error.hpp"
#include "mibci/rng.hpp"
#include "mibci/trialstore.hpp"

namespace mibci {

struct Split {
  std::vector<std::size_t> train, test;
};

inline std::size_t split_train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

/// Stratified partition of `pool` (indices into `labels`).
inline Split stratified_partition(std::span<const int> labels, std::span<const std::size_t> pool, double fraction,
                                  std::uint64_t seed, std::uint64_t tag, int classes = kNumClasses,
                                  std::size_t min_per_class = 2) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must lie in (0, 1)");
  std::vector<std::size_t> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end());
  Split out;
  for (int c = 1; c <= classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i : sorted) {
      if (i >= labels.size()) throw InvalidArgument("pool index out of range");
      if (labels[i] == c) members.push_back(i);
    }
    if (members.size() < min_per_class)
      throw InvalidArgument("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                            " trials; at least " + std::to_string(min_per_class) + " required");
    Rng rng(derive_seed(seed, {tag, static_cast<std::uint64_t>(c)}));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    const std::size_t k = split_train_count(members.size(), fraction);
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Indices of one subject's trials, optionally restricted to one session (0 = all).
inline std::vector<std::size_t> subject_indices(const TrialSet& set, int subject, int session = 0) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < set.trials.size(); ++i)
    if (set.trials[i].subject == subject && (session == 0 || set.trials[i].session == session)) out.push_back(i);
  return out;
}

inline Split within_subject_split(const TrialSet& set, int subject, double train_fraction, std::uint64_t seed,
                                  int session = 0) {
  const auto pool = subject_indices(set, subject, session);
  if (pool.empty()) throw InvalidArgument("subject " + std::to_string(subject) + " has no trials");
  const auto labels = set.labels();
  return stratified_partition(labels, pool, train_fraction, seed, static_cast<std::uint64_t>(subject));
}

struct LosoFold {
  int test_subject = 0;
  std::vector<int> train_subjects;
};

inline std::vector<LosoFold> loso_folds(const TrialSet& set) {
  const auto subjects = set.subjects();
  if (subjects.size() < 2) throw InvalidArgument("leave-one-subject-out needs at least two subjects");
  std::vector<LosoFold> folds;
  for (int s : subjects) {
    LosoFold f{s, {}};
    for (int o : subjects)
      if (o != s) f.train_subjects.push_back(o);
    folds.push_back(std::move(f));
  }
  return folds;
}

/// Trial indices on each side of a fold.
inline Split loso_split(const TrialSet& set, const LosoFold& fold) {
  Split out;
  for (std::size_t i = 0; i < set.trials.size(); ++i)
    (set.trials[i].subject == fold.test_subject ? out.test : out.train).push_back(i);
  return out;
}

}  // namespace mibci
