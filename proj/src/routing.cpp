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

#include "modelsel/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "modelsel/budget.hpp"
#include "modelsel/random.hpp"

namespace modelsel {

std::vector<Candidate> routing_candidates(const EstimateTable& table,
                                          std::size_t q) {
  std::vector<Candidate> out(table.num_models());
  for (std::size_t m = 0; m < table.num_models(); ++m) {
    const ModelId id{m};
    out[m] = {m, table.quality(q, id, Regime::kBefore).mean,
              table.cost(q, id, Regime::kBefore).mean};
  }
  return out;
}

namespace {

void require_queries(const EstimateTable& table) {
  if (table.num_queries() == 0) {
    throw std::invalid_argument("routing needs a nonempty table");
  }
}

struct Moments {
  double quality = 0.0;
  double cost = 0.0;
};

Moments strategy_moments(const EstimateTable& table, double lambda,
                         Pick pick) {
  require_queries(table);
  Moments sum;
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    const auto cands = routing_candidates(table, q);
    const Candidate& c = cands[argmax_tradeoff_index(cands, lambda, pick)];
    sum.quality += c.quality;
    sum.cost += c.cost;
  }
  const double n = static_cast<double>(table.num_queries());
  return {sum.quality / n, sum.cost / n};
}

double mix_gamma(double cost_min, double cost_max, double budget) {
  if (cost_max <= cost_min) return 1.0;
  return std::clamp((cost_max - budget) / (cost_max - cost_min), 0.0, 1.0);
}

// Lambdas in [lo, hi] at which some query's s_min choice switches between
// the choice at lo and the choice at hi.
std::vector<double> crossings(const EstimateTable& table, double lo,
                              double hi) {
  std::vector<double> out;
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    const auto cands = routing_candidates(table, q);
    const Candidate& a = cands[argmax_tradeoff_index(cands, lo, Pick::kMinCost)];
    const Candidate& b = cands[argmax_tradeoff_index(cands, hi, Pick::kMinCost)];
    if (a.id == b.id || a.cost == b.cost) continue;
    const double x = (a.quality - b.quality) / (a.cost - b.cost);
    const double slack = 1e-9 * (1.0 + hi);
    if (x >= lo - slack && x <= hi + slack) out.push_back(std::max(x, 0.0));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double strategy_cost(const EstimateTable& table, double lambda, Pick pick) {
  return strategy_moments(table, lambda, pick).cost;
}

double strategy_quality(const EstimateTable& table, double lambda, Pick pick) {
  return strategy_moments(table, lambda, pick).quality;
}

double min_routing_cost(const EstimateTable& table) {
  require_queries(table);
  double sum = 0.0;
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < table.num_models(); ++m) {
      best = std::min(best, table.cost(q, ModelId{m}, Regime::kBefore).mean);
    }
    sum += best;
  }
  return sum / static_cast<double>(table.num_queries());
}

FittedRouter fit_router(const EstimateTable& table, double budget) {
  require_queries(table);
  FittedRouter out;
  out.budget = budget;

  const double max_at_zero = strategy_cost(table, 0.0, Pick::kMaxCost);
  if (within_budget(max_at_zero, budget)) {
    out.lambda_star = 0.0;
    out.gamma = 0.0;
    out.fit_cost_min = strategy_cost(table, 0.0, Pick::kMinCost);
    out.fit_cost_max = max_at_zero;
    return out;
  }
  if (!within_budget(min_routing_cost(table), budget)) {
    throw std::invalid_argument("budget below cheapest strategy");
  }
  const double min_at_zero = strategy_cost(table, 0.0, Pick::kMinCost);
  if (within_budget(min_at_zero, budget)) {
    out.lambda_star = 0.0;
    out.fit_cost_min = min_at_zero;
    out.fit_cost_max = max_at_zero;
    out.gamma = mix_gamma(min_at_zero, max_at_zero, budget);
    return out;
  }

  double lo = 0.0;
  double hi = 1.0;
  while (!within_budget(strategy_cost(table, hi, Pick::kMinCost), budget)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kLambdaCap) {
      throw std::invalid_argument("budget below cheapest strategy");
    }
  }
  while (hi - lo > 1e-9 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    if (within_budget(strategy_cost(table, mid, Pick::kMinCost), budget)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  // The bracket straddles a breakpoint; land on it exactly so the tie between
  // s_min and s_max is visible and the mixture can hit the budget.
  for (double x : crossings(table, lo, hi)) {
    const double cmin = strategy_cost(table, x, Pick::kMinCost);
    if (!within_budget(cmin, budget)) continue;
    out.lambda_star = x;
    out.fit_cost_min = cmin;
    out.fit_cost_max = strategy_cost(table, x, Pick::kMaxCost);
    out.gamma = mix_gamma(cmin, out.fit_cost_max, budget);
    return out;
  }
  out.lambda_star = hi;
  out.fit_cost_min = strategy_cost(table, hi, Pick::kMinCost);
  out.fit_cost_max = strategy_cost(table, hi, Pick::kMaxCost);
  out.gamma = mix_gamma(out.fit_cost_min, out.fit_cost_max, budget);
  return out;
}

double router_expected_quality(const EstimateTable& table,
                               const FittedRouter& router) {
  return router.gamma *
             strategy_quality(table, router.lambda_star, Pick::kMinCost) +
         (1.0 - router.gamma) *
             strategy_quality(table, router.lambda_star, Pick::kMaxCost);
}

double router_expected_cost(const EstimateTable& table,
                            const FittedRouter& router) {
  return router.gamma * strategy_cost(table, router.lambda_star, Pick::kMinCost) +
         (1.0 - router.gamma) *
             strategy_cost(table, router.lambda_star, Pick::kMaxCost);
}

ModelId route(const FittedRouter& router,
              std::span<const Candidate> query_estimates, double uniform_draw) {
  const Pick pick = pick_for_draw(router.gamma, uniform_draw);
  return ModelId{static_cast<std::size_t>(
      argmax_tradeoff(query_estimates, router.lambda_star, pick))};
}

DecisionTrace run_router(const EstimateTable& table, std::size_t q,
                         const FittedRouter& router, std::uint64_t seed) {
  const auto cands = routing_candidates(table, q);
  const ModelId m =
      route(router, cands, mixing_draw(seed, table.query_ids()[q], 1));
  DecisionTrace trace;
  trace.executed = {m};
  trace.answer_model = m;
  realize(table, q, trace);
  return trace;
}

}  // namespace modelsel
