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
#include "modelsel/expected_max.hpp"
#include "modelsel/hyperopt.hpp"

namespace modelsel {

// How a supermodel's quality is derived from its members' estimates.
enum class QualityAggregation {
  kExpectedMax,  // E[max] over members' Gaussian estimates
  kMaxMean,      // best member mean, uncertainty ignored
  kLastModel,    // quality of the last chain member (threshold-equivalent)
};

// Residual std of quality estimates per (model, chain step), steps 1..k+1.
class SigmaTable {
 public:
  SigmaTable() = default;
  explicit SigmaTable(std::size_t num_models);

  std::size_t num_models() const { return k_; }
  double at(ModelId m, std::size_t step) const;
  void set(ModelId m, std::size_t step, double sigma);

  // Regime lookup for arbitrary computed sets: computed models read the final
  // step, uncomputed ones step 1.
  double in_state(ModelId m, ModelSet computed) const {
    return computed.contains(m) ? at(m, k_ + 1) : at(m, 1);
  }

  friend bool operator==(const SigmaTable&, const SigmaTable&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> sigma_;
};

// Population std over `rows` of (step-j quality mean - final quality mean).
// Throws std::invalid_argument("insufficient data for variance") below two
// rows.
SigmaTable estimate_sigma(const EstimateTable& table,
                          std::span<const std::size_t> rows);
SigmaTable estimate_sigma(const EstimateTable& table);

struct CascadeOptions {
  std::size_t mc_samples = 512;
  std::uint64_t seed = 0;
  QualityAggregation aggregation = QualityAggregation::kExpectedMax;
  SearchConfig search;
  bool run_search = true;  // stage 2

  MonteCarloConfig mc() const { return {mc_samples, seed}; }
};

// Estimates of the chain supermodels considered at `step` (1-based): ids are
// chain lengths i, from step-1 (stop; absent at step 1) through k.
std::vector<Candidate> cascade_candidates(const EstimateTable& table,
                                          std::size_t q, std::size_t step,
                                          const SigmaTable& sigma,
                                          QualityAggregation aggregation,
                                          const NormalDraws& draws);

enum class StepDecision { kContinue, kStop };

StepDecision cascade_step(const EstimateTable& table, std::size_t q,
                          std::size_t step, const StrategyParams& params,
                          const SigmaTable& sigma,
                          QualityAggregation aggregation,
                          const NormalDraws& draws, double uniform_draw);

// Runs the chain on query q; mixing draws and Monte Carlo draws come from
// options.seed.
DecisionTrace run_cascade(const EstimateTable& table, std::size_t q,
                          const StrategyParams& params, const SigmaTable& sigma,
                          const CascadeOptions& options);

struct FittedCascade {
  StrategyParams params;
  SigmaTable sigma;
  Evaluation validation;  // on the fitting table
  Evaluation stage_one;
};

// Simulates the cascade over a whole table for many parameter vectors;
// candidate estimates are computed once per (query, step).
class CascadeEvaluator {
 public:
  CascadeEvaluator(const EstimateTable& table, const SigmaTable& sigma,
                   const CascadeOptions& options);

  Evaluation evaluate(const StrategyParams& params) const;
  // Number of models executed on query q.
  std::size_t depth(std::size_t q, const StrategyParams& params) const;

 private:
  const EstimateTable& table_;
  std::size_t k_;
  std::uint64_t seed_;
  // candidates_[q * (k + 1) + step]
  std::vector<std::vector<Candidate>> candidates_;
  std::vector<std::vector<double>> draws_;  // [q][step]
  std::vector<double> prefix_cost_;         // [q * (k + 1) + i], i models run
  std::vector<double> realized_quality_;    // [q * k + m]
};

// Equal-lambda bisection on a cascade cost functional, then gamma set by
// interpolating the s_min / s_max costs at the bracket and repaired until
// feasible. Throws std::invalid_argument("budget below cheapest strategy").
struct StageOneResult {
  StrategyParams params;
  Evaluation value;
};
StageOneResult equal_lambda_search(const Objective& objective,
                                   std::size_t num_models, double budget);

// Scale for lambdas that start at zero: one tenth of quality per mean cost.
double lambda_reference(const EstimateTable& table);

// Stage 1 followed, when run_search is set, by local search over every lambda
// and gamma. A zero lambda_floor in `search` is replaced by `lambda_floor`.
struct TwoStageResult {
  StrategyParams params;
  Evaluation validation;
  Evaluation stage_one;
};
TwoStageResult fit_two_stage(const Objective& objective, std::size_t num_models,
                             double budget, const SearchConfig& search,
                             bool run_search, double lambda_floor);

FittedCascade fit_cascade(const EstimateTable& table, double budget,
                          const CascadeOptions& options = {});

// Stop after model i when its after-run quality estimate reaches
// thresholds[i]; the last entry is never consulted.
DecisionTrace threshold_cascade(const EstimateTable& table, std::size_t q,
                                std::span<const double> thresholds);

struct FittedThresholds {
  std::vector<double> thresholds;
  Evaluation validation;
};

FittedThresholds fit_threshold_cascade(const EstimateTable& table,
                                       double budget,
                                       const CascadeOptions& options = {});

}  // namespace modelsel
