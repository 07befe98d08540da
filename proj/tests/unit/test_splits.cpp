#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "mibci/splits.hpp"

using namespace mibci;

namespace {

TrialSet labelled(int subjects, int per_class, int sessions = 1) {
  TrialSet set;
  set.channels = 1;
  set.samples = 2;
  for (int s = 1; s <= subjects; ++s)
    for (int sess = 1; sess <= sessions; ++sess)
      for (int k = 0; k < per_class; ++k)
        for (int c = 1; c <= 4; ++c) set.trials.push_back({Signal::Zero(1, 2), c, s, sess});
  return set;
}

}  // namespace

TEST(Splits, FloorRuleGivesFiftySevenOfSeventyTwo) {
  const auto set = labelled(1, 72);
  const auto sp = within_subject_split(set, 1, 0.8, 42);
  EXPECT_EQ(sp.train.size(), 4u * 57);
  EXPECT_EQ(sp.test.size(), 4u * 15);
  const auto labels = set.labels();
  for (int c = 1; c <= 4; ++c)
    EXPECT_EQ(std::count_if(sp.train.begin(), sp.train.end(), [&](std::size_t i) { return labels[i] == c; }), 57);
  EXPECT_EQ(split_train_count(10, 0.7), 7u);  // 0.7 * 10 is 6.9999999999999991 in binary
  EXPECT_EQ(split_train_count(3, 0.75), 2u);
}

TEST(Splits, PartitionAndDeterminism) {
  const auto set = labelled(3, 11, 2);
  for (int s = 1; s <= 3; ++s) {
    const auto a = within_subject_split(set, s, 0.8, 7);
    const auto b = within_subject_split(set, s, 0.8, 7);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::vector<std::size_t> all = a.train;
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, subject_indices(set, s));
    EXPECT_TRUE(std::is_sorted(a.train.begin(), a.train.end()));
    const auto c = within_subject_split(set, s, 0.8, 8);
    EXPECT_NE(a.train, c.train);
  }
}

TEST(Splits, MatchesDocumentedAlgorithm) {
  // reimplementation from the header comment
  const auto set = labelled(2, 9);
  const auto labels = set.labels();
  const std::uint64_t seed = 123;
  const int subject = 2;
  std::vector<std::size_t> train, test;
  for (int c = 1; c <= 4; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set.trials[i].subject == subject && labels[i] == c) members.push_back(i);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(subject), static_cast<std::uint64_t>(c)}));
    for (std::size_t i = members.size() - 1; i >= 1; --i) std::swap(members[i], members[rng.below(i + 1)]);
    const auto k = static_cast<std::size_t>(0.8 * static_cast<double>(members.size()) + 1e-9);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const auto sp = within_subject_split(set, subject, 0.8, seed);
  EXPECT_EQ(sp.train, train);
  EXPECT_EQ(sp.test, test);
}

TEST(Splits, SessionFilter) {
  const auto set = labelled(1, 5, 2);
  const auto sp = within_subject_split(set, 1, 0.8, 1, 2);
  for (auto i : sp.train) EXPECT_EQ(set.trials[i].session, 2);
  for (auto i : sp.test) EXPECT_EQ(set.trials[i].session, 2);
  EXPECT_EQ(sp.train.size() + sp.test.size(), 20u);
}

TEST(Splits, Errors) {
  auto set = labelled(1, 1);
  EXPECT_THROW(within_subject_split(set, 1, 0.8, 1), InvalidArgument);
  EXPECT_THROW(within_subject_split(labelled(1, 4), 2, 0.8, 1), InvalidArgument);
  EXPECT_THROW(within_subject_split(labelled(1, 4), 1, 1.0, 1), InvalidArgument);
  EXPECT_THROW(loso_folds(labelled(1, 4)), InvalidArgument);
}

TEST(Loso, NineFoldsPartitionSubjects) {
  const auto set = labelled(9, 3);
  const auto folds = loso_folds(set);
  ASSERT_EQ(folds.size(), 9u);
  std::set<int> tested;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train_subjects.size(), 8u);
    EXPECT_EQ(std::count(f.train_subjects.begin(), f.train_subjects.end(), f.test_subject), 0);
    tested.insert(f.test_subject);
    const auto sp = loso_split(set, f);
    for (auto i : sp.train) EXPECT_NE(set.trials[i].subject, f.test_subject);
    for (auto i : sp.test) EXPECT_EQ(set.trials[i].subject, f.test_subject);
    EXPECT_EQ(sp.train.size() + sp.test.size(), set.size());
  }
  EXPECT_EQ(tested.size(), 9u);
}
