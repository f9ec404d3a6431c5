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

#include "modelsel/hyperopt.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace modelsel {
namespace {

StrategyParams at(double lambda, double gamma = 1.0) {
  StrategyParams p;
  p.lambdas = {lambda};
  p.gamma = gamma;
  return p;
}

// Concave in lambda with its peak at 3; cost falls as lambda grows.
Evaluation bowl(const StrategyParams& p) {
  const double x = p.lambdas[0];
  return {10.0 - (x - 3.0) * (x - 3.0), 1.0 / (1.0 + x)};
}

TEST(OptimizeTest, ConstantObjectiveReturnsInit) {
  const Objective flat = [](const StrategyParams&) { return Evaluation{0.5, 0.1}; };
  SearchConfig cfg;
  cfg.seed = 3;
  const SearchResult r = optimize(flat, 1.0, at(2.0, 0.4), cfg);
  EXPECT_EQ(r.params, at(2.0, 0.4));
  EXPECT_EQ(r.accepted, 0);
  EXPECT_EQ(r.evaluations, cfg.max_evals);
}

TEST(OptimizeTest, InfeasibleInitThrows) {
  try {
    optimize(bowl, 0.01, at(1.0), SearchConfig{});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "initial point violates budget");
  }
}

TEST(OptimizeTest, ConcaveObjectiveNearGridOptimum) {
  const double budget = 0.3;  // lambda >= 7/3
  double grid_best = -1e9;
  for (int i = 0; i <= 20000; ++i) {
    const Evaluation e = bowl(at(i * 1e-3));
    if (e.cost <= budget) grid_best = std::max(grid_best, e.quality);
  }
  SearchConfig cfg;
  cfg.seed = 1;
  cfg.search_gamma = false;
  const SearchResult r = optimize(bowl, budget, at(12.0), cfg);
  EXPECT_LE(r.value.cost, budget + 1e-9);
  EXPECT_GE(r.value.quality, grid_best - 0.05 * std::abs(grid_best));
}

TEST(OptimizeProperty, NeverWorseThanInitAlwaysFeasibleDeterministic) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SearchConfig cfg;
    cfg.seed = seed;
    cfg.max_evals = 50;
    const Objective noisy = [](const StrategyParams& p) {
      const double x = p.lambdas[0];
      return Evaluation{std::sin(3.0 * x) + p.gamma, p.gamma + 1.0 / (1.0 + x)};
    };
    const StrategyParams init = at(4.0, 0.2);
    const double budget = 0.6;
    const SearchResult a = optimize(noisy, budget, init, cfg);
    const SearchResult b = optimize(noisy, budget, init, cfg);
    EXPECT_GE(a.value.quality, noisy(init).quality);
    EXPECT_LE(a.value.cost, budget + 1e-9);
    EXPECT_EQ(a.params, b.params);
    EXPECT_NO_THROW(a.params.validate());
  }
}

TEST(OptimizeTest, ZeroLambdaLeavesZeroViaFloor) {
  // Quality rewards a positive lambda only.
  const Objective obj = [](const StrategyParams& p) {
    return Evaluation{p.lambdas[0] > 0.0 ? 1.0 : 0.0, 0.0};
  };
  SearchConfig cfg;
  cfg.lambda_floor = 0.1;
  cfg.search_gamma = false;
  EXPECT_GT(optimize(obj, 1.0, at(0.0), cfg).params.lambdas[0], 0.0);
}

TEST(SearchConfigTest, Validate) {
  SearchConfig cfg;
  cfg.max_evals = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace modelsel
