#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "mibci/pso.hpp"

using namespace mibci;

namespace {

FitnessFn wrap(double (*f)(const std::vector<double>&)) {
  return [f](std::span<const double> x) { return f(std::vector<double>(x.begin(), x.end())); };
}

Bounds box(std::size_t d, double half) { return {std::vector<double>(d, -half), std::vector<double>(d, half)}; }

}  // namespace

TEST(Pso, SphereReachesOrigin) {
  PsoConfig cfg;
  cfg.particles = 30;
  cfg.iterations = 100;
  cfg.seed = 42;
  const auto res = pso_optimize(cfg, box(2, 5.0), wrap(oracle::neg_sphere));
  EXPECT_GE(res.best_fitness, -1e-3);
  EXPECT_EQ(res.history.size(), 101u);
  EXPECT_EQ(res.evaluations, 30u * 101);
  EXPECT_EQ(res.best_fitness, oracle::neg_sphere(res.best_position));
}

TEST(Pso, MinimizeMirrorsMaximize) {
  PsoConfig cfg;
  cfg.particles = 30;
  cfg.iterations = 100;
  cfg.seed = 42;
  cfg.maximize = false;
  const auto res = pso_optimize(cfg, box(2, 5.0), [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; });
  EXPECT_LE(res.best_fitness, 1e-3);
  for (std::size_t i = 1; i < res.history.size(); ++i) EXPECT_LE(res.history[i].gbest, res.history[i - 1].gbest);
}

TEST(Pso, ConstantFitnessKeepsFirstSample) {
  PsoConfig cfg;
  cfg.particles = 12;
  cfg.iterations = 20;
  cfg.seed = 3;
  std::vector<double> first;
  const auto res = pso_optimize(cfg, box(3, 1.0), [](std::span<const double>) { return 0.5; }, {},
                                [&](const SwarmState& s) {
                                  if (s.iteration == 0) first = s.positions[0];
                                });
  EXPECT_EQ(res.best_position, first);
  for (const auto& h : res.history) {
    EXPECT_EQ(h.gbest, 0.5);
    EXPECT_EQ(h.mean, 0.5);
  }
}

TEST(Pso, RastriginSeedEnsemble) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsoConfig cfg;
    cfg.particles = 50;
    cfg.iterations = 100;
    cfg.seed = seed;
    const auto res = pso_optimize(cfg, box(2, 5.12), wrap(oracle::neg_rastrigin));
    hits += res.best_fitness >= -0.1 ? 1 : 0;
  }
  RecordProperty("rastrigin_hits", hits);
  EXPECT_GE(hits, 8);
}

TEST(Pso, GbestMonotoneForManySeeds) {
  const std::vector<std::pair<double (*)(const std::vector<double>&), double>> fns{
      {oracle::neg_sphere, 5.0}, {oracle::neg_rastrigin, 5.12}, {oracle::neg_rosenbrock, 2.0}};
  for (std::uint64_t seed = 100; seed < 150; ++seed)
    for (const auto& [f, half] : fns) {
      PsoConfig cfg;
      cfg.particles = 30;
      cfg.iterations = 40;
      cfg.seed = seed;
      const auto res = pso_optimize(cfg, box(3, half), wrap(f));
      for (std::size_t i = 1; i < res.history.size(); ++i) ASSERT_GE(res.history[i].gbest, res.history[i - 1].gbest);
    }
}

TEST(Pso, SameSeedSameHistoryAcrossJobCounts) {
  auto run = [](int jobs, std::uint64_t seed) {
    PsoConfig cfg;
    cfg.particles = 20;
    cfg.iterations = 30;
    cfg.seed = seed;
    cfg.jobs = jobs;
    return pso_optimize(cfg, box(4, 5.12), wrap(oracle::neg_rastrigin));
  };
  const auto a = run(1, 9), b = run(1, 9), c = run(4, 9), d = run(1, 10);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].gbest, b.history[i].gbest);
    EXPECT_EQ(a.history[i].mean, b.history[i].mean);
    EXPECT_EQ(a.history[i].gbest, c.history[i].gbest);
  }
  EXPECT_EQ(a.best_position, c.best_position);
  EXPECT_NE(a.best_position, d.best_position);
}

TEST(Pso, PositionsInBoxVelocitiesClamped) {
  PsoConfig cfg;
  cfg.particles = 25;
  cfg.iterations = 50;
  cfg.seed = 4;
  cfg.c1 = cfg.c2 = 2.0;
  cfg.inertia_start = cfg.inertia_end = 1.0;
  const Bounds b{{-1.0, 0.0, 10.0}, {1.0, 0.5, 30.0}};
  std::size_t checked = 0;
  pso_optimize(cfg, b, [](std::span<const double> x) { return x[0] + x[1] + x[2]; }, {}, [&](const SwarmState& s) {
    for (std::size_t p = 0; p < s.positions.size(); ++p) {
      EXPECT_TRUE(b.contains(s.positions[p]));
      for (std::size_t d = 0; d < 3; ++d)
        EXPECT_LE(std::abs(s.velocities[p][d]), 0.2 * (b.hi[d] - b.lo[d]) + 1e-12);
      ++checked;
    }
  });
  EXPECT_EQ(checked, 25u * 51);
}

TEST(Pso, InertiaSchedule) {
  PsoConfig cfg;
  cfg.iterations = 5;
  EXPECT_DOUBLE_EQ(cfg.inertia(1), 0.9);
  EXPECT_DOUBLE_EQ(cfg.inertia(5), 0.7);
  EXPECT_NEAR(cfg.inertia(3), 0.8, 1e-15);
  cfg.iterations = 1;
  EXPECT_DOUBLE_EQ(cfg.inertia(1), 0.9);
}

TEST(Pso, InitialPositionsAreUsed) {
  PsoConfig cfg;
  cfg.particles = 5;
  cfg.iterations = 0;
  const std::vector<std::vector<double>> init{{0.0, 0.0}};
  const auto res = pso_optimize(cfg, box(2, 5.0), wrap(oracle::neg_sphere), init);
  EXPECT_EQ(res.best_fitness, 0.0);
  EXPECT_EQ(res.best_position, init[0]);
  EXPECT_EQ(res.history.size(), 1u);
  const std::vector<std::vector<double>> wrong{{0.0}};
  EXPECT_THROW(pso_optimize(cfg, box(2, 5.0), wrap(oracle::neg_sphere), wrong), InvalidArgument);
}

TEST(Pso, InfeasibleSentinelAndNonFiniteAbort) {
  PsoConfig cfg;
  cfg.particles = 10;
  cfg.iterations = 10;
  cfg.seed = 1;
  // half the box is infeasible
  const auto res = pso_optimize(cfg, box(2, 1.0), [](std::span<const double> x) {
    return x[0] < 0 ? -std::numeric_limits<double>::infinity() : -x[0];
  });
  EXPECT_TRUE(std::isfinite(res.best_fitness));
  EXPECT_GE(res.best_position[0], 0.0);

  try {
    pso_optimize(cfg, box(2, 1.0), [](std::span<const double> x) { return x[1] > 0.5 ? std::nan("") : 0.0; });
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("position ["), std::string::npos) << e.what();
  }
  EXPECT_THROW(pso_optimize(cfg, box(2, 1.0), [](std::span<const double>) { return HUGE_VAL; }), NumericalError);
}

TEST(Pso, ConfigAndBoundsValidation) {
  PsoConfig cfg;
  cfg.particles = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.c1 = -1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.velocity_clamp = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_THROW((Bounds{{0.0}, {0.0}}).validate(), InvalidArgument);
  EXPECT_THROW((Bounds{{}, {}}).validate(), InvalidArgument);
  EXPECT_THROW((Bounds{{0.0, 1.0}, {1.0}}).validate(), InvalidArgument);
}

TEST(Pso, HistoryJsonLines) {
  std::vector<PsoHistoryEntry> h{{0, 0.25, 0.1}, {1, 0.5, -std::numeric_limits<double>::infinity()}};
  std::ostringstream os;
  write_history_jsonl(h, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["iteration"], 0);
  EXPECT_EQ(j["gbest"], 0.25);
  std::getline(is, line);
  j = nlohmann::json::parse(line);
  EXPECT_TRUE(j["mean"].is_null());
}
