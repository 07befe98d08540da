#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "mibci/anfis_io.hpp"

using namespace mibci;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

Matrix random_reference(Rng& rng, int rows, int d) {
  Matrix X(rows, d);
  for (int t = 0; t < rows; ++t)
    for (int i = 0; i < d; ++i) X(t, i) = rng.uniform(-2.0, 2.0);
  return X;
}

}  // namespace

TEST(AnfisProperties, ScoresAreConvexCombinationsOfRuleOutputs) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const auto m = testutil::random_anfis(rng, d, 2 + static_cast<int>(rng.below(2)), static_cast<MfKind>(rng.below(3)));
    std::vector<double> x;
    for (int i = 0; i < d; ++i) x.push_back(rng.uniform(-3, 3));
    const auto out = anfis_forward(m, x);
    for (int c = 0; c < m.classes; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t r = 0; r < m.rule_count(); ++r) {
        double v = m.consequent(r, c, d);
        for (int k = 0; k < d; ++k) v += m.consequent(r, c, k) * x[static_cast<std::size_t>(k)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double s = out.scores[static_cast<std::size_t>(c)];
      const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
      EXPECT_GE(s, lo - tol);
      EXPECT_LE(s, hi + tol);
    }
  }
}

TEST(AnfisProperties, PredictInvariantToCommonBiasShift) {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const auto m = testutil::random_anfis(rng, d, 2, MfKind::Gaussian);
    auto shifted = m;
    const double delta = rng.uniform(-50, 50);
    for (std::size_t r = 0; r < m.rule_count(); ++r)
      for (int c = 0; c < m.classes; ++c) shifted.consequent(r, c, d) += delta;
    for (int k = 0; k < 5; ++k) {
      std::vector<double> x;
      for (int i = 0; i < d; ++i) x.push_back(rng.uniform(-3, 3));
      EXPECT_EQ(predict(m, x), predict(shifted, x));
    }
  }
}

TEST(AnfisProperties, DominantClassAlwaysWins) {
  Rng rng(3);
  auto m = testutil::random_anfis(rng, 2, 3, MfKind::Bell);
  for (std::size_t r = 0; r < m.rule_count(); ++r)
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < 2; ++k) m.consequent(r, c, k) = 0.0;
      m.consequent(r, c, 2) = c == 2 ? 1.0 : 0.0;
    }
  for (int k = 0; k < 50; ++k) EXPECT_EQ(predict(m, std::vector<double>{rng.uniform(-5, 5), rng.uniform(-5, 5)}), 3);
}

TEST(AnfisJson, RoundTripEveryKind) {
  Rng rng(4);
  for (int kind = 0; kind < 3; ++kind) {
    auto m = testutil::random_anfis(rng, 3, 2, static_cast<MfKind>(kind));
    m.input_names = {"a", "b", "c"};
    const auto j = anfis_to_json(m);
    const auto back = anfis_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(anfis_to_json(back), j);
    EXPECT_EQ(back.consequents, m.consequents);
    const std::vector<double> x{0.3, -1.2, 2.0};
    EXPECT_EQ(anfis_forward(back, x).scores, anfis_forward(m, x).scores);
  }
}

TEST(AnfisJson, RejectsMalformed) {
  Rng rng(5);
  const auto j = anfis_to_json(testutil::random_anfis(rng, 2, 2, MfKind::Gaussian));
  auto bad = j;
  bad["format"] = "other";
  EXPECT_THROW(anfis_from_json(bad), FormatError);
  bad = j;
  bad["mfs"][0][0]["params"] = {1.0, 2.0, 3.0};
  EXPECT_THROW(anfis_from_json(bad), FormatError);
  bad = j;
  bad["consequents"].erase(0);
  EXPECT_THROW(anfis_from_json(bad), FormatError);
  bad = j;
  bad.erase("rule_weights");
  EXPECT_THROW(anfis_from_json(bad), FormatError);
}

TEST(RulesReport, OneLinePerRuleOrderedByFiring) {
  Rng rng(6);
  const auto single = testutil::random_anfis(rng, 2, 1, MfKind::Gaussian);
  EXPECT_EQ(lines_of(rules_report(single, random_reference(rng, 10, 2))).size(), 1u);

  auto m = testutil::random_anfis(rng, 4, 3, MfKind::Gaussian);
  m.input_names = {"Mu(8-12Hz)/class1-vs-rest/c0", "b", "c", "d"};
  const Matrix ref = random_reference(rng, 40, 4);
  const auto text = rules_report(m, ref);
  const auto lines = lines_of(text);
  ASSERT_EQ(lines.size(), 81u);
  EXPECT_EQ(text, rules_report(m, ref));
  EXPECT_NE(lines[0].find("IF Mu(8-12Hz)/class1-vs-rest/c0 is gauss("), std::string::npos) << lines[0];
  EXPECT_NE(lines[0].find("class 4 ="), std::string::npos);

  const auto fire = mean_firing(m, ref);
  double prev = 2.0;
  std::set<std::size_t> seen;
  for (const auto& line : lines) {
    const auto r = static_cast<std::size_t>(std::stoul(line.substr(1, line.find(' ') - 1))) - 1;
    seen.insert(r);
    EXPECT_LE(fire[r], prev);
    prev = fire[r];
  }
  EXPECT_EQ(seen.size(), 81u);
  double total = 0;
  for (double f : fire) total += f;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(rules_report(m, Matrix::Zero(3, 2)), InvalidArgument);
}
