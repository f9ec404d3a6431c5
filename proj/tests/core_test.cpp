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

#include "modelsel/core.hpp"

#include <random>

#include "gtest/gtest.h"
#include "test_support.hpp"

namespace modelsel {
namespace {

TEST(TradeoffTest, Arithmetic) {
  EXPECT_NEAR(tradeoff(0.8, 0.002, 100), 0.6, 1e-12);
  EXPECT_EQ(tradeoff(0.5, 0.01, 0), 0.5);
  EXPECT_EQ(tradeoff(0.7, 0.7, 1), 0.0);
}

TEST(ArgmaxTradeoffTest, TieResolvedByCost) {
  const std::vector<Candidate> c{{0, 0.5, 1.0}, {1, 1.0, 2.0}};
  // Both tau values are zero at lambda 0.5.
  ASSERT_EQ(tradeoff(0.5, 1.0, 0.5), tradeoff(1.0, 2.0, 0.5));
  EXPECT_EQ(argmax_tradeoff(c, 0.5, Pick::kMinCost), 0u);
  EXPECT_EQ(argmax_tradeoff(c, 0.5, Pick::kMaxCost), 1u);
}

TEST(ArgmaxTradeoffTest, Singleton) {
  const std::vector<Candidate> c{{0, 0.9, 1.0}};
  EXPECT_EQ(argmax_tradeoff(c, 7.0, Pick::kMinCost), 0u);
}

TEST(ArgmaxTradeoffTest, EmptyThrows) {
  EXPECT_THROW(argmax_tradeoff({}, 1.0, Pick::kMinCost), std::invalid_argument);
}

TEST(ArgmaxTradeoffTest, EqualCostTiesGoToLowestId) {
  const std::vector<Candidate> c{{7, 0.5, 1.0}, {3, 0.5, 1.0}, {5, 0.4, 0.0}};
  EXPECT_EQ(argmax_tradeoff(c, 0.0, Pick::kMinCost), 3u);
  EXPECT_EQ(argmax_tradeoff(c, 0.0, Pick::kMaxCost), 3u);
}

TEST(ArgmaxTradeoffTest, NearTiesWithinToleranceCount) {
  const std::vector<Candidate> c{{0, 1.0, 1.0}, {1, 1.0 + 1e-13, 2.0}};
  EXPECT_EQ(argmax_tradeoff(c, 0.0, Pick::kMinCost), 0u);
  EXPECT_EQ(argmax_tradeoff(c, 0.0, Pick::kMaxCost), 1u);
}

std::vector<Candidate> random_candidates(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Candidate> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = {i, unit(gen), unit(gen)};
  return c;
}

TEST(ArgmaxTradeoffProperty, ScaleInvariance) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_candidates(gen, 1 + trial % 7);
    const double lambda = 3.0 * unit(gen);
    const double alpha = 0.01 + 10.0 * unit(gen);
    auto scaled = c;
    for (Candidate& x : scaled) x.cost *= alpha;
    for (Pick p : {Pick::kMinCost, Pick::kMaxCost}) {
      EXPECT_EQ(argmax_tradeoff(c, lambda, p),
                argmax_tradeoff(scaled, lambda / alpha, p));
    }
  }
}

TEST(ArgmaxTradeoffProperty, QualityShiftInvariance) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_candidates(gen, 1 + trial % 7);
    const double lambda = 3.0 * unit(gen);
    const double shift = unit(gen) - 0.5;
    auto shifted = c;
    for (Candidate& x : shifted) x.quality += shift;
    for (Pick p : {Pick::kMinCost, Pick::kMaxCost}) {
      EXPECT_EQ(argmax_tradeoff(c, lambda, p),
                argmax_tradeoff(shifted, lambda, p));
    }
  }
}

TEST(ArgmaxTradeoffProperty, MinAndMaxPicksTie) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_candidates(gen, 2 + trial % 6);
    // Force a tie: candidate 1 sits on candidate 0's tradeoff line.
    const double lambda = unit(gen);
    c[1].cost = c[0].cost + 0.5;
    c[1].quality = c[0].quality + lambda * 0.5;
    const auto lo = argmax_tradeoff_index(c, lambda, Pick::kMinCost);
    const auto hi = argmax_tradeoff_index(c, lambda, Pick::kMaxCost);
    const double tau_lo = tradeoff(c[lo].quality, c[lo].cost, lambda);
    const double tau_hi = tradeoff(c[hi].quality, c[hi].cost, lambda);
    EXPECT_NEAR(tau_lo, tau_hi, tie_tolerance(tau_lo));
    EXPECT_LE(c[lo].cost, c[hi].cost);
  }
}

TEST(PickForDrawTest, GammaMixing) {
  EXPECT_EQ(pick_for_draw(1.0, 0.999), Pick::kMinCost);
  EXPECT_EQ(pick_for_draw(0.0, 0.0), Pick::kMaxCost);
  EXPECT_EQ(pick_for_draw(0.3, 0.2), Pick::kMinCost);
  EXPECT_EQ(pick_for_draw(0.3, 0.3), Pick::kMaxCost);
}

TEST(ModelSetTest, Operations) {
  const ModelSet a = ModelSet::single(ModelId{0}).with(ModelId{2});
  EXPECT_EQ(a.size(), 2);
  EXPECT_TRUE(a.contains(ModelId{2}));
  EXPECT_FALSE(a.contains(ModelId{1}));
  EXPECT_EQ(a.without(ModelId{0}), ModelSet::single(ModelId{2}));
  EXPECT_EQ(ModelSet::prefix(3).mask(), 0b111u);
  EXPECT_TRUE(ModelSet::prefix(3).contains(a));
  EXPECT_EQ(ModelSet::prefix(3).minus(a), ModelSet::single(ModelId{1}));
  const auto members = a.members();
  ASSERT_EQ(members.size(), 2u);
  EXPECT_EQ(members[0].index, 0u);
  EXPECT_EQ(members[1].index, 2u);
  EXPECT_THROW(ModelSet::all(33), std::invalid_argument);
}

TEST(EstimateTableTest, RegimeAtStep) {
  // Step j means the first j-1 models have been computed.
  EXPECT_EQ(EstimateTable::regime_at_step(ModelId{0}, 1), Regime::kBefore);
  EXPECT_EQ(EstimateTable::regime_at_step(ModelId{0}, 2), Regime::kAfter);
  EXPECT_EQ(EstimateTable::regime_at_step(ModelId{1}, 2), Regime::kBefore);
  EXPECT_EQ(EstimateTable::regime_at_step(ModelId{2}, 4), Regime::kAfter);
}

TEST(EstimateTableTest, SelectAndReorder) {
  const EstimateTable t = testing::exact_table({{0.1, 0.2}, {0.3, 0.4}},
                                               {{1.0, 2.0}, {3.0, 4.0}});
  const std::vector<std::size_t> rows{1};
  const EstimateTable s = t.select_queries(rows);
  EXPECT_EQ(s.num_queries(), 1u);
  EXPECT_EQ(s.query_ids()[0], "q1");
  EXPECT_EQ(s.true_quality(0, ModelId{1}), 0.4);
  const std::vector<std::size_t> order{1, 0};
  const EstimateTable r = t.reorder_models(order);
  EXPECT_EQ(r.model_names()[0], "m1");
  EXPECT_EQ(r.true_cost(1, ModelId{0}), 4.0);
  EXPECT_EQ(r.cost(1, ModelId{1}, Regime::kBefore).mean, 3.0);
  const std::vector<std::size_t> bad{0, 0};
  EXPECT_THROW(t.reorder_models(bad), std::invalid_argument);
}

TEST(EstimateTableTest, RejectsInvalidValues) {
  EstimateTable t(testing::numbered("q", 1), testing::numbered("m", 1));
  EXPECT_THROW(t.set_truth(0, ModelId{0}, 0.5, -1.0), std::invalid_argument);
  EXPECT_THROW(t.set_estimates(0, ModelId{0}, Regime::kBefore, {0.5, -0.1},
                               {0.0, 0.0}),
               std::invalid_argument);
  EXPECT_THROW(t.set_truth(1, ModelId{0}, 0.5, 1.0), std::out_of_range);
  // Negative cost predictions are floored.
  t.set_estimates(0, ModelId{0}, Regime::kBefore, {0.5, 0.0}, {-0.2, 0.0});
  EXPECT_EQ(t.cost(0, ModelId{0}, Regime::kBefore).mean, 0.0);
}

TEST(RealizeTest, SumsExecutedCostsAndReadsAnswer) {
  const EstimateTable t =
      testing::exact_table({{0.1, 0.9, 0.5}}, {{1.0, 2.0, 4.0}});
  DecisionTrace trace;
  trace.executed = {ModelId{0}, ModelId{2}};
  trace.answer_model = ModelId{2};
  realize(t, 0, trace);
  EXPECT_EQ(trace.query, "q0");
  EXPECT_EQ(trace.realized_cost, 5.0);
  EXPECT_EQ(trace.realized_quality, 0.5);
  trace.answer_model = ModelId{1};
  EXPECT_THROW(realize(t, 0, trace), std::logic_error);
}

TEST(StrategyParamsTest, Validate) {
  StrategyParams p;
  p.lambdas = {0.0, 1.0};
  p.gamma = 0.5;
  EXPECT_NO_THROW(p.validate());
  p.gamma = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.gamma = 0.5;
  p.lambdas = {-1.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace modelsel
