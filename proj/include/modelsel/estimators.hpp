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
#include <string_view>
#include <vector>

#include "modelsel/core.hpp"

namespace modelsel {

// Standard deviations of the Gaussian noise added to true quality and cost
// before (model not yet run) and after (model run) computation.
struct NoiseSpec {
  double quality_before = 0.0;
  double quality_after = 0.0;
  double cost_before = 0.0;
  double cost_after = 0.0;

  // RouterBench noise levels; costs are in dollars per query.
  static NoiseSpec low() { return {0.6, 0.3, 0.0002, 0.00005}; }
  static NoiseSpec medium() { return {1.6, 0.8, 0.0004, 0.0001}; }
  static NoiseSpec high() { return {2.4, 1.2, 100.0, 100.0}; }
  // "low", "medium" or "high"; throws std::invalid_argument otherwise.
  static NoiseSpec preset(std::string_view name);

  void validate() const;
  // Cascades only pay off when running a model sharpens its estimates.
  bool after_sharper() const {
    return quality_after < quality_before && cost_after < cost_before;
  }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

// Synthetic workload with topic experts. Every query has a topic and a
// difficulty; each model has a base skill, one expert topic and a base cost.
// The answer is correct with probability
// sigmoid(skill + expertise * [expert] - difficulty + noise); true quality is
// that 0/1 outcome, or the probability itself when binary_quality is off.
// True cost is the base cost times a per-query length factor shared by all
// models.
struct WorkloadSpec {
  std::size_t n_queries = 1000;
  std::size_t k = 5;
  std::size_t topics = 0;  // 0: one topic per model
  double min_cost = 7.3e-5;
  double max_cost = 3.281e-3;
  std::vector<double> base_costs;  // empty: log-spaced min_cost..max_cost
  std::vector<double> skills;      // empty: evenly spaced skill_low..skill_high
  double skill_low = -0.5;
  double skill_high = 1.0;
  double expertise = 1.5;
  double difficulty_spread = 1.0;
  double quality_noise = 0.5;
  double length_spread = 0.3;
  bool binary_quality = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Truth-only table; model i is "model_<i>", query ids are "q<index>".
EstimateTable generate_workload(const WorkloadSpec& spec);

// Ordinary least squares with intercept.
struct LinearEstimator {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double residual_std = 0.0;  // population std of the training residuals
  bool ridge_fallback = false;

  double predict(std::span<const double> features) const;
};

// features[i] is the feature row of sample i. A rank-deficient design is
// solved with a 1e-8 ridge penalty and flagged. Throws std::invalid_argument
// below two samples, without features, or on ragged rows.
LinearEstimator fit_linear_estimator(
    const std::vector<std::vector<double>>& features,
    std::span<const double> targets);

// Adds noise to the truth and maps each noisy signal back through a
// univariate linear fit per (model, regime), fitted on `fit_rows` (all rows
// when empty). A constant signal falls back to the mean predictor. Estimate
// stds are the fit's residual stds.
EstimateTable simulate_estimates(const EstimateTable& truth,
                                 const NoiseSpec& noise, std::uint64_t seed,
                                 std::span<const std::size_t> fit_rows = {});

}  // namespace modelsel
