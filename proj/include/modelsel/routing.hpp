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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modelsel/core.hpp"

namespace modelsel {

// The gamma-mixture of the cheapest and dearest tradeoff maximizers at
// lambda_star, fitted so the expected validation cost meets the budget.
struct FittedRouter {
  double lambda_star = 0.0;
  double gamma = 1.0;
  double budget = 0.0;
  double fit_cost_min = 0.0;
  double fit_cost_max = 0.0;

  friend bool operator==(const FittedRouter&, const FittedRouter&) = default;
};

// Step-1 (nothing computed) estimates of every model for query q.
std::vector<Candidate> routing_candidates(const EstimateTable& table,
                                          std::size_t q);

// Mean estimated cost of the deterministic strategy s_min / s_max at lambda.
double strategy_cost(const EstimateTable& table, double lambda, Pick pick);
// Mean estimated quality of the same strategy.
double strategy_quality(const EstimateTable& table, double lambda, Pick pick);

// Mean over queries of the cheapest model's estimated cost: the floor any
// routing strategy can reach.
double min_routing_cost(const EstimateTable& table);

// Throws std::invalid_argument("budget below cheapest strategy") when no
// routing strategy fits the budget.
FittedRouter fit_router(const EstimateTable& table, double budget);

// Expected estimated quality / cost of the fitted mixture.
double router_expected_quality(const EstimateTable& table,
                               const FittedRouter& router);
double router_expected_cost(const EstimateTable& table,
                            const FittedRouter& router);

// Samples the mixture with a uniform draw in [0, 1).
ModelId route(const FittedRouter& router,
              std::span<const Candidate> query_estimates, double uniform_draw);

// Routes query q with its seeded draw and realizes the outcome.
DecisionTrace run_router(const EstimateTable& table, std::size_t q,
                         const FittedRouter& router, std::uint64_t seed);

}  // namespace modelsel
