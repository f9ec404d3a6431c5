// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modelsel/cascading.hpp"

#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "modelsel/routing.hpp"
#include "test_support.hpp"

namespace modelsel {
namespace {

using testing::exact_table;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sets every before-run quality estimate of model m to after + offset[q].
void shift_before(EstimateTable& t, ModelId m, const std::vector<double>& offset) {
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    const Estimate after = t.quality(q, m, Regime::kAfter);
    t.set_estimates(q, m, Regime::kBefore, {after.mean + offset[q], 0.0},
                    t.cost(q, m, Regime::kBefore));
  }
}

TEST(EstimateSigmaTest, Examples) {
  EstimateTable t = exact_table({{0.5, 0.2}, {0.6, 0.3}}, {{1, 2}, {1, 2}});
  shift_before(t, ModelId{0}, {0.1, -0.1});
  shift_before(t, ModelId{1}, {0.2, 0.2});
  const SigmaTable s = estimate_sigma(t);
  EXPECT_NEAR(s.at(ModelId{0}, 1), 0.1, 1e-12);
  EXPECT_NEAR(s.at(ModelId{1}, 1), 0.0, 1e-12);
  EXPECT_NEAR(s.at(ModelId{1}, 2), 0.0, 1e-12);  // still before-regime
  // Final-step estimates coincide with themselves.
  EXPECT_EQ(s.at(ModelId{0}, 3), 0.0);
  EXPECT_EQ(s.at(ModelId{0}, 2), 0.0);
}

TEST(EstimateSigmaTest, NeedsTwoRows) {
  const EstimateTable t = exact_table({{0.5}}, {{1.0}});
  try {
    estimate_sigma(t);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "insufficient data for variance");
  }
}

TEST(CascadeStepTest, StopsWhenGainIsNotWorthTheCost) {
  // m0 computed with estimate 0.95, m1 adds cost 2 for a 0.01 gain.
  const EstimateTable t = exact_table({{0.95, 0.96}}, {{1.0, 2.0}});
  const SigmaTable sigma = estimate_sigma(exact_table({{0.95, 0.96}, {0.95, 0.96}},
                                                      {{1.0, 2.0}, {1.0, 2.0}}));
  const NormalDraws draws(16, 2, 0);
  StrategyParams p;
  p.lambdas = {0.1, 0.1};
  for (auto agg : {QualityAggregation::kExpectedMax, QualityAggregation::kMaxMean}) {
    EXPECT_EQ(cascade_step(t, 0, 2, p, sigma, agg, draws, 0.5), StepDecision::kStop);
    EXPECT_EQ(cascade_step(t, 0, 1, p, sigma, agg, draws, 0.5),
              StepDecision::kContinue);
  }
  p.lambdas = {0.0, 0.0};
  EXPECT_EQ(cascade_step(t, 0, 2, p, sigma, QualityAggregation::kExpectedMax, draws, 0.5),
            StepDecision::kContinue);
}

TEST(CascadeCandidatesTest, ChainCostNondecreasing) {
  const EstimateTable t = testing::random_table(30, 5, 2);
  const SigmaTable sigma = estimate_sigma(t);
  const NormalDraws draws(64, 5, 1);
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    for (std::size_t step = 1; step <= 5; ++step) {
      const auto c = cascade_candidates(t, q, step, sigma,
                                        QualityAggregation::kExpectedMax, draws);
      ASSERT_EQ(c.size(), step == 1 ? 5u : 7u - step);
      EXPECT_EQ(c.front().id, step == 1 ? 1u : step - 1);
      for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i].cost, c[i - 1].cost);
    }
  }
}

TEST(RunCascadeTest, SingleModelAlwaysRunsIt) {
  const EstimateTable t = exact_table({{0.3}, {0.8}}, {{1.0}, {2.0}});
  StrategyParams p;
  p.lambdas = {5.0};
  const SigmaTable sigma = estimate_sigma(t);
  for (std::size_t q = 0; q < 2; ++q) {
    const DecisionTrace tr = run_cascade(t, q, p, sigma, {});
    ASSERT_EQ(tr.executed.size(), 1u);
    EXPECT_EQ(tr.answer_model.index, 0u);
  }
  const FittedCascade f = fit_cascade(t, 1.5);
  EXPECT_NEAR(f.validation.cost, 1.5, 1e-12);
  EXPECT_NEAR(f.validation.quality, 0.55, 1e-12);
}

TEST(RunCascadeTest, AnswersWithLastExecutedAndMatchesEvaluator) {
  const EstimateTable t = testing::random_table(40, 4, 3);
  const SigmaTable sigma = estimate_sigma(t);
  CascadeOptions opt;
  opt.seed = 5;
  const CascadeEvaluator ev(t, sigma, opt);
  StrategyParams p;
  p.lambdas = {0.0, 0.3, 0.2, 0.5};
  p.gamma = 0.6;
  double cost = 0.0, quality = 0.0;
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    const DecisionTrace tr = run_cascade(t, q, p, sigma, opt);
    EXPECT_EQ(tr.answer_model, tr.executed.back());
    for (std::size_t i = 0; i < tr.executed.size(); ++i) {
      EXPECT_EQ(tr.executed[i].index, i);
    }
    EXPECT_EQ(ev.depth(q, p), tr.executed.size());
    cost += tr.realized_cost;
    quality += tr.realized_quality;
  }
  const Evaluation e = ev.evaluate(p);
  EXPECT_NEAR(e.cost, cost / 40, 1e-12);
  EXPECT_NEAR(e.quality, quality / 40, 1e-12);
}

TEST(FitCascadeTest, FullBudgetMatchesRunningBoth) {
  const EstimateTable t = testing::random_table(60, 2, 4);
  CascadeOptions opt;
  opt.seed = 1;
  const SigmaTable sigma = estimate_sigma(t);
  const CascadeEvaluator ev(t, sigma, opt);
  StrategyParams both;
  both.lambdas = {0.0, 0.0};
  both.gamma = 0.0;
  double both_cost = 0.0, both_quality = 0.0;
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    both_cost += t.true_cost(q, ModelId{0}) + t.true_cost(q, ModelId{1});
    both_quality += t.true_quality(q, ModelId{1});
  }
  both_cost /= 60;
  both_quality /= 60;
  const FittedCascade f = fit_cascade(t, both_cost, opt);
  EXPECT_LE(f.validation.cost, both_cost + 1e-9);
  EXPECT_GE(f.validation.quality, both_quality - 1e-6);
  EXPECT_GE(f.validation.quality, f.stage_one.quality);
}

TEST(FitCascadeTest, FeasibleAndStageTwoNeverWorse) {
  const EstimateTable t = testing::random_table(80, 4, 6);
  const auto costs = [&] {
    std::vector<double> c(4, 0.0);
    for (std::size_t q = 0; q < 80; ++q)
      for (std::size_t m = 0; m < 4; ++m) c[m] += t.true_cost(q, ModelId{m}) / 80;
    return c;
  }();
  for (double budget : {costs[0], costs[0] + 0.3, costs[0] + costs[1] + costs[2]}) {
    CascadeOptions opt;
    opt.search.max_evals = 60;
    const FittedCascade f = fit_cascade(t, budget, opt);
    EXPECT_LE(f.validation.cost, budget + 1e-6);
    EXPECT_GE(f.validation.quality, f.stage_one.quality);
    EXPECT_EQ(f.params.lambdas.size(), 4u);
  }
  EXPECT_THROW(fit_cascade(t, 0.5 * costs[0]), std::invalid_argument);
}

TEST(ThresholdCascadeTest, Examples) {
  const EstimateTable t = exact_table({{0.7, 0.2, 0.9}}, {{1, 2, 3}});
  const std::vector<double> low(3, -kInf), high(3, kInf);
  EXPECT_EQ(threshold_cascade(t, 0, low).executed.size(), 1u);
  const DecisionTrace all = threshold_cascade(t, 0, high);
  EXPECT_EQ(all.executed.size(), 3u);
  EXPECT_EQ(all.answer_model.index, 2u);
  EXPECT_EQ(all.realized_cost, 6.0);
  const std::vector<double> mid{0.6, kInf, kInf};
  EXPECT_EQ(threshold_cascade(t, 0, mid).executed.size(), 1u);
  const std::vector<double> above{0.8, 0.1, kInf};
  EXPECT_EQ(threshold_cascade(t, 0, above).executed.size(), 2u);
}

TEST(FitThresholdCascadeTest, BudgetExamples) {
  const EstimateTable t = testing::random_table(100, 3, 8);
  std::vector<double> costs(3, 0.0);
  double stop_at_one_quality = 0.0;
  for (std::size_t q = 0; q < 100; ++q) {
    for (std::size_t m = 0; m < 3; ++m) costs[m] += t.true_cost(q, ModelId{m}) / 100;
    stop_at_one_quality += t.true_quality(q, ModelId{0}) / 100;
  }
  const FittedThresholds one = fit_threshold_cascade(t, costs[0]);
  EXPECT_LE(one.validation.cost, costs[0] + 1e-9);
  const FittedThresholds all =
      fit_threshold_cascade(t, costs[0] + costs[1] + costs[2]);
  EXPECT_GE(all.validation.quality, stop_at_one_quality);
  double previous = -kInf;
  for (double extra : {0.0, 0.1, 0.2, 0.4, 0.8}) {
    const FittedThresholds f = fit_threshold_cascade(t, costs[0] + extra);
    EXPECT_GE(f.validation.quality, previous - 1e-12);
    previous = f.validation.quality;
  }
  EXPECT_THROW(fit_threshold_cascade(t, 0.5 * costs[0]), std::invalid_argument);
}

TEST(CascadeProperty, ThresholdEquivalence) {
  const EstimateTable t = testing::threshold_equivalence_table(300, 4, 21);
  CascadeOptions opt;
  opt.aggregation = QualityAggregation::kLastModel;
  opt.search.max_evals = 40;
  double full = 0.0;
  for (std::size_t m = 0; m < 4; ++m) full += t.true_cost(0, ModelId{m});
  for (double frac : {0.3, 0.6}) {
    const FittedCascade f = fit_cascade(t, frac * full, opt);
    const auto thresholds = testing::derived_thresholds(t, f.params.lambdas);
    for (std::size_t q = 0; q < t.num_queries(); ++q) {
      EXPECT_EQ(run_cascade(t, q, f.params, f.sigma, opt).executed,
                threshold_cascade(t, q, thresholds).executed)
          << "query " << q;
    }
  }
}

TEST(EqualLambdaSearchTest, CheapestFeasibleAtZero) {
  const Objective obj = [](const StrategyParams& p) {
    return Evaluation{1.0, 1.0 / (1.0 + p.lambdas[0]) + 0.0 * p.gamma};
  };
  const StageOneResult r = equal_lambda_search(obj, 2, 1.0);
  EXPECT_EQ(r.params.lambdas, (std::vector<double>{0.0, 0.0}));
  const StageOneResult tight = equal_lambda_search(obj, 2, 0.25);
  EXPECT_LE(tight.value.cost, 0.25 + 1e-12);
  EXPECT_NEAR(tight.params.lambdas[0], 3.0, 1e-6);
}

}  // namespace
}  // namespace modelsel
