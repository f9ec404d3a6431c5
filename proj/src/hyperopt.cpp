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
#include <random>
#include <stdexcept>

#include "modelsel/budget.hpp"

namespace modelsel {

void SearchConfig::validate() const {
  if (max_evals < 1) throw std::invalid_argument("max_evals must be >= 1");
  if (lambda_log_scale < 0.0 || gamma_scale < 0.0 || threshold_scale < 0.0 ||
      lambda_floor < 0.0) {
    throw std::invalid_argument("search scales must be >= 0");
  }
}

namespace {

double reflect_unit(double x) {
  // Fold onto [0, 2) then mirror the upper half.
  x = std::fmod(std::abs(x), 2.0);
  return x > 1.0 ? 2.0 - x : x;
}

class Proposer {
 public:
  explicit Proposer(const SearchConfig& config)
      : config_(config), gen_(config.seed) {}

  StrategyParams propose(const StrategyParams& base) {
    StrategyParams next = base;
    // Each searchable coordinate moves with probability 1/2; at least one.
    const std::size_t n_lambda = config_.search_lambdas ? base.lambdas.size() : 0;
    const std::size_t n_gamma = config_.search_gamma ? 1 : 0;
    const std::size_t n_thresh = config_.search_thresholds && base.thresholds
                                     ? base.thresholds->size()
                                     : 0;
    const std::size_t total = n_lambda + n_gamma + n_thresh;
    if (total == 0) return next;

    std::vector<bool> move(total);
    bool any = false;
    for (std::size_t i = 0; i < total; ++i) {
      move[i] = coin_(gen_);
      any = any || move[i];
    }
    if (!any) {
      std::uniform_int_distribution<std::size_t> pick(0, total - 1);
      move[pick(gen_)] = true;
    }

    for (std::size_t i = 0; i < n_lambda; ++i) {
      if (!move[i]) continue;
      double& l = next.lambdas[i];
      const double step = std::exp(config_.lambda_log_scale * normal_(gen_));
      if (l > 0.0) {
        l *= step;
      } else if (config_.lambda_floor > 0.0) {
        l = config_.lambda_floor * step;
      }
    }
    if (n_gamma == 1 && move[n_lambda]) {
      next.gamma = reflect_unit(next.gamma + config_.gamma_scale * normal_(gen_));
    }
    for (std::size_t i = 0; i < n_thresh; ++i) {
      if (!move[n_lambda + n_gamma + i]) continue;
      (*next.thresholds)[i] += config_.threshold_scale * normal_(gen_);
    }
    return next;
  }

 private:
  const SearchConfig& config_;
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::bernoulli_distribution coin_{0.5};
};

}  // namespace

SearchResult optimize(const Objective& objective, double budget,
                      const StrategyParams& init, const SearchConfig& config) {
  config.validate();
  init.validate();
  SearchResult result;
  result.params = init;
  result.value = objective(init);
  if (!within_budget(result.value.cost, budget)) {
    throw std::invalid_argument("initial point violates budget");
  }

  Proposer proposer(config);
  for (int i = 0; i < config.max_evals; ++i) {
    StrategyParams candidate = proposer.propose(result.params);
    const Evaluation value = objective(candidate);
    ++result.evaluations;
    if (within_budget(value.cost, budget) &&
        value.quality > result.value.quality) {
      result.params = std::move(candidate);
      result.value = value;
      ++result.accepted;
    }
  }
  return result;
}

}  // namespace modelsel
