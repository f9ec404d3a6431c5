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
#include <functional>

#include "modelsel/core.hpp"

namespace modelsel {

// Random local search settings. Lambdas move in log space, gamma by a
// Gaussian step reflected at [0, 1], thresholds by an additive Gaussian step.
struct SearchConfig {
  int max_evals = 200;
  std::uint64_t seed = 0;
  double lambda_log_scale = 0.5;
  double gamma_scale = 0.15;
  double threshold_scale = 0.05;
  // A zero lambda can only leave zero by jumping to this scale.
  double lambda_floor = 0.0;
  bool search_lambdas = true;
  bool search_gamma = true;
  bool search_thresholds = false;

  void validate() const;
};

struct Evaluation {
  double quality = 0.0;
  double cost = 0.0;
};

using Objective = std::function<Evaluation(const StrategyParams&)>;

struct SearchResult {
  StrategyParams params;
  Evaluation value;
  int evaluations = 0;  // proposals, excluding the initial point
  int accepted = 0;
};

// Maximizes quality subject to cost <= budget, starting from `init`.
// A proposal replaces the incumbent only if feasible and strictly better.
// Throws std::invalid_argument("initial point violates budget").
SearchResult optimize(const Objective& objective, double budget,
                      const StrategyParams& init, const SearchConfig& config);

}  // namespace modelsel
