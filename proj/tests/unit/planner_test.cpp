#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "xferlaw/planner.hpp"
#include "xferlaw/synth.hpp"

namespace xferlaw {
namespace {

constexpr LawParams kEncyclopedia{284.766, 2.570, 0.730, 0.123, 0.538};

AllocationProblem base_problem(double budget = 1e4) {
  AllocationProblem problem;
  problem.budget = budget;
  problem.cost_per_pretrain_step = 1.0;
  problem.cost_per_finetune_point = 1.0;
  problem.params = kEncyclopedia;
  return problem;
}

// Exhaustive scan over integer fine-tuning sizes f = 1..B with C_p = C_f = 1.
double scan_best_f(const LawParams& w, double budget) {
  double best_f = 1.0, best = INFINITY;
  const auto n = static_cast<long>(budget);
  for (long f = 1; f <= n; ++f) {
    const double p = 1.0 + (budget - static_cast<double>(f));
    const double v = (w.A * std::pow(p, -w.alpha) + w.G) * std::pow(static_cast<double>(f), -w.beta) + w.E;
    if (v < best) {
      best = v;
      best_f = static_cast<double>(f);
    }
  }
  return best_f;
}

TEST(Allocate, BudgetIsSpentExactly) {
  const auto r = optimize_allocation(base_problem());
  EXPECT_NEAR(r.pretrain_spend + r.f_star, 1e4, 1e-9 * 1e4);
  EXPECT_NEAR(r.pretrain_steps + r.f_star, 1e4, 1e-9 * 1e4);
  EXPECT_DOUBLE_EQ(r.p_star, 1.0 + r.pretrain_steps);
  EXPECT_DOUBLE_EQ(r.loss_at_optimum, evaluate(kEncyclopedia, {r.p_star, r.f_star}));
  EXPECT_GE(r.f_star, 1.0);
}

TEST(Allocate, MatchesMillionPointScan) {
  const auto r = optimize_allocation(base_problem(1e6));
  EXPECT_LE(std::abs(r.f_star - scan_best_f(kEncyclopedia, 1e6)), 1.0);
}

TEST(Allocate, RandomProblemsMatchCoarseScan) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const LawParams w{std::exp(6.0 * u(rng)), 0.05 + 3.0 * u(rng), 0.1 + 0.8 * u(rng),
                      0.05 + 0.5 * u(rng), 2.0 * u(rng)};
    auto problem = base_problem(2e4);
    problem.params = w;
    const auto r = optimize_allocation(problem);
    EXPECT_LE(std::abs(r.f_star - scan_best_f(w, 2e4)), 1.0) << "draw " << i;
  }
}

TEST(Allocate, PretrainingUselessSendsEverythingToFineTuning) {
  auto problem = base_problem();
  problem.params.A = 1e-12;
  problem.params.G = 50.0;
  const auto r = optimize_allocation(problem);
  EXPECT_NEAR(r.finetune_budget_fraction, 1.0, 1e-9);
}

TEST(Allocate, FlatFineTuningKeepsMinimalF) {
  auto problem = base_problem();
  problem.params.G = 0.0;
  problem.params.beta = 1e-9;
  const auto r = optimize_allocation(problem);
  EXPECT_EQ(r.f_star, 1.0);
}

TEST(Allocate, CostScaleInvariance) {
  auto a = base_problem();
  auto b = a;
  b.budget *= 1000.0;
  b.cost_per_pretrain_step *= 1000.0;
  b.cost_per_finetune_point *= 1000.0;
  const auto ra = optimize_allocation(a);
  const auto rb = optimize_allocation(b);
  EXPECT_NEAR(ra.f_star, rb.f_star, 1e-6 * ra.f_star);
  EXPECT_NEAR(ra.finetune_budget_fraction, rb.finetune_budget_fraction, 1e-9);
}

TEST(Allocate, InvalidAndInfeasible) {
  auto problem = base_problem();
  problem.budget = 0.5;
  EXPECT_THROW(optimize_allocation(problem), InfeasibleError);
  problem.budget = -1.0;
  EXPECT_THROW(optimize_allocation(problem), InputError);
  problem = base_problem();
  problem.cost_per_pretrain_step = 0.0;
  EXPECT_THROW(optimize_allocation(problem), InputError);
  problem = base_problem();
  problem.params.beta = 0.0;
  EXPECT_THROW(optimize_allocation(problem), DegenerateParamsError);
}

TEST(Allocate, WarnsOnFlatObjective) {
  auto problem = base_problem();
  problem.budget = 1.0;  // a single feasible point
  const auto r = optimize_allocation(problem);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_TRUE(optimize_allocation(base_problem()).warnings.empty());
}

TEST(Sweep, SingleGapEqualsDirectAllocation) {
  const std::vector<double> gap = {2.570};
  const auto s = sweep_gap(base_problem(), gap);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].allocation.f_star, optimize_allocation(base_problem()).f_star);
}

TEST(Sweep, RepeatedGapGivesIdenticalFractions) {
  const std::vector<double> gap = {1.0, 1.0, 1.0};
  const auto s = sweep_gap(base_problem(), gap);
  EXPECT_EQ(s[0].allocation.finetune_budget_fraction, s[2].allocation.finetune_budget_fraction);
}

TEST(Sweep, GapFractionNonDecreasing) {
  const auto gaps = log_spaced(0.1, 10.0, 50);
  const auto s = sweep_gap(base_problem(), gaps);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_GE(s[i].allocation.finetune_budget_fraction,
              s[i - 1].allocation.finetune_budget_fraction - 1e-12);
  }
}

TEST(Sweep, CostRatioOneIsDirectAllocation) {
  const std::vector<double> ratio = {1.0};
  const auto s = sweep_cost_ratio(base_problem(), ratio);
  EXPECT_EQ(s[0].allocation.f_star, optimize_allocation(base_problem()).f_star);
}

TEST(Sweep, LargeCostRatioMatchesScan) {
  // C_f = 1e6 with B = 1e10: f ranges over 1..1e4, p = 1 + B - 1e6 f.
  auto problem = base_problem(1e10);
  const std::vector<double> ratio = {1e6};
  const auto r = sweep_cost_ratio(problem, ratio)[0].allocation;
  double best_f = 1.0, best = INFINITY;
  for (int f = 1; f <= 10000; ++f) {
    const double v = evaluate(kEncyclopedia, {1.0 + 1e10 - 1e6 * f, static_cast<double>(f)});
    if (v < best) {
      best = v;
      best_f = f;
    }
  }
  EXPECT_LE(std::abs(r.f_star - best_f), 1.0);
}

TEST(Sweep, RejectsUnsortedOrNonPositive) {
  EXPECT_THROW(sweep_gap(base_problem(), std::vector<double>{2.0, 1.0}), InputError);
  EXPECT_THROW(sweep_cost_ratio(base_problem(), std::vector<double>{0.0}), InputError);
  EXPECT_THROW(sweep_gap(base_problem(), std::vector<double>{}), InputError);
}

TEST(IsoLoss, CornerAndResidual) {
  const auto& w = kEncyclopedia;
  const double corner = w.A + w.G + w.E;
  const auto c = iso_loss(w, corner, 1.0, 1e5, 40);
  EXPECT_EQ(c.points.front().p, 1.0);
  EXPECT_NEAR(c.points.front().f, 1.0, 1e-12);
  for (double target : {0.6, 1.0, 2.0, 50.0}) {
    const auto curve = iso_loss(w, target, 1.0, 1.5e5, 100);
    double prev_p = 0.0;
    for (const auto& pt : curve.points) {
      EXPECT_GT(pt.p, prev_p);
      prev_p = pt.p;
      EXPECT_GE(pt.f, 1.0);
      EXPECT_LE(std::abs(evaluate(w, {pt.p, pt.f}) - target), 1e-6 * target);
    }
  }
}

TEST(IsoLoss, Errors) {
  EXPECT_THROW(iso_loss(kEncyclopedia, kEncyclopedia.E, 1.0, 10.0, 5), UnachievableTargetError);
  EXPECT_THROW(iso_loss(kEncyclopedia, 1e4, 1.0, 10.0, 5), UnachievableTargetError);
  EXPECT_THROW(iso_loss(kEncyclopedia, 2.0, 0.5, 10.0, 5), InputError);
  EXPECT_THROW(iso_loss(kEncyclopedia, 2.0, 1.0, 10.0, 0), InputError);
}

TEST(Compute, UnitCase) {
  const std::vector<RunRecord> one = {{"d", 0.0, 1.0, 2.0, 1.0, std::nullopt}};
  EXPECT_EQ(estimate_compute(one, 1.0), 6.0);
}

TEST(Compute, SumsOverAllRuns) {
  SynthSpec spec;
  spec.params = kEncyclopedia;
  spec.epochs = 3.0;
  std::vector<RunRecord> records;
  for (int d = 0; d < 5; ++d) {
    const auto part = generate(spec);
    records.insert(records.end(), part.begin(), part.end());
  }
  ASSERT_EQ(records.size(), 750u);
  double tokens = 0.0;
  for (double f : standard_grid().finetune_levels) tokens += f;
  EXPECT_NEAR(estimate_compute(records, 2.8e9), 6.0 * 2.8e9 * 3.0 * 75.0 * tokens, 1e-3);
}

TEST(Compute, MissingEpochsNamesRow) {
  std::vector<RunRecord> records = {{"d", 0.0, 1.0, 2.0, 1.0, std::nullopt},
                                    {"d", 0.0, 2.0, 2.0, std::nullopt, std::nullopt}};
  try {
    estimate_compute(records, 1.0);
    FAIL() << "expected missing epochs";
  } catch (const MissingEpochsError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(estimate_compute(records, 0.0), InputError);
}

}  // namespace
}  // namespace xferlaw
