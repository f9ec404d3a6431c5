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

#include <algorithm>
#include <cmath>
#include <limits>

namespace modelsel {

std::vector<ModelId> ModelSet::members() const {
  std::vector<ModelId> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::uint32_t rest = mask_; rest != 0; rest &= rest - 1) {
    out.push_back(ModelId{static_cast<std::size_t>(std::countr_zero(rest))});
  }
  return out;
}

EstimateTable::EstimateTable(std::vector<std::string> query_ids,
                             std::vector<std::string> model_names)
    : query_ids_(std::move(query_ids)), model_names_(std::move(model_names)) {
  if (model_names_.empty()) {
    throw std::invalid_argument("estimate table needs at least one model");
  }
  if (model_names_.size() > ModelSet::kMaxModels) {
    throw std::invalid_argument("at most 32 models are supported");
  }
  const std::size_t cells = query_ids_.size() * model_names_.size();
  true_quality_.assign(cells, 0.0);
  true_cost_.assign(cells, 0.0);
  quality_before_.assign(cells, Estimate{});
  quality_after_.assign(cells, Estimate{});
  cost_before_.assign(cells, Estimate{});
  cost_after_.assign(cells, Estimate{});
}

void EstimateTable::check(std::size_t q, ModelId m) const {
  if (q >= num_queries() || m.index >= num_models()) {
    throw std::out_of_range("estimate table index out of range");
  }
}

std::size_t EstimateTable::at(std::size_t q, ModelId m) const {
  return q * model_names_.size() + m.index;
}

double EstimateTable::true_quality(std::size_t q, ModelId m) const {
  return true_quality_[at(q, m)];
}

double EstimateTable::true_cost(std::size_t q, ModelId m) const {
  return true_cost_[at(q, m)];
}

void EstimateTable::set_truth(std::size_t q, ModelId m, double quality,
                              double cost) {
  check(q, m);
  if (!std::isfinite(quality) || !std::isfinite(cost) || cost < 0.0) {
    throw std::invalid_argument("truth must be finite with cost >= 0");
  }
  true_quality_[at(q, m)] = quality;
  true_cost_[at(q, m)] = cost;
  has_truth_ = true;
}

const Estimate& EstimateTable::quality(std::size_t q, ModelId m,
                                       Regime r) const {
  return r == Regime::kBefore ? quality_before_[at(q, m)]
                              : quality_after_[at(q, m)];
}

const Estimate& EstimateTable::cost(std::size_t q, ModelId m, Regime r) const {
  return r == Regime::kBefore ? cost_before_[at(q, m)]
                              : cost_after_[at(q, m)];
}

void EstimateTable::set_estimates(std::size_t q, ModelId m, Regime r,
                                  Estimate quality, Estimate cost) {
  check(q, m);
  if (!std::isfinite(quality.mean) || !std::isfinite(cost.mean) ||
      quality.std < 0.0 || cost.std < 0.0) {
    throw std::invalid_argument("estimates must be finite with std >= 0");
  }
  // Negative cost predictions from a linear fit are floored at zero.
  cost.mean = std::max(cost.mean, 0.0);
  const std::size_t i = at(q, m);
  if (r == Regime::kBefore) {
    quality_before_[i] = quality;
    cost_before_[i] = cost;
  } else {
    quality_after_[i] = quality;
    cost_after_[i] = cost;
  }
  has_estimates_ = true;
}

EstimateTable EstimateTable::select_queries(
    std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= num_queries()) throw std::out_of_range("query row out of range");
    ids.push_back(query_ids_[r]);
  }
  EstimateTable out(std::move(ids), model_names_);
  out.has_truth_ = has_truth_;
  out.has_estimates_ = has_estimates_;
  const std::size_t k = num_models();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t src = rows[i] * k + m;
      const std::size_t dst = i * k + m;
      out.true_quality_[dst] = true_quality_[src];
      out.true_cost_[dst] = true_cost_[src];
      out.quality_before_[dst] = quality_before_[src];
      out.quality_after_[dst] = quality_after_[src];
      out.cost_before_[dst] = cost_before_[src];
      out.cost_after_[dst] = cost_after_[src];
    }
  }
  return out;
}

EstimateTable EstimateTable::reorder_models(
    std::span<const std::size_t> order) const {
  const std::size_t k = num_models();
  if (order.size() != k) throw std::invalid_argument("order must cover all models");
  std::vector<bool> seen(k, false);
  std::vector<std::string> names;
  for (std::size_t old : order) {
    if (old >= k || seen[old]) {
      throw std::invalid_argument("order must be a permutation");
    }
    seen[old] = true;
    names.push_back(model_names_[old]);
  }
  EstimateTable out(query_ids_, std::move(names));
  out.has_truth_ = has_truth_;
  out.has_estimates_ = has_estimates_;
  for (std::size_t q = 0; q < num_queries(); ++q) {
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t src = q * k + order[m];
      const std::size_t dst = q * k + m;
      out.true_quality_[dst] = true_quality_[src];
      out.true_cost_[dst] = true_cost_[src];
      out.quality_before_[dst] = quality_before_[src];
      out.quality_after_[dst] = quality_after_[src];
      out.cost_before_[dst] = cost_before_[src];
      out.cost_after_[dst] = cost_after_[src];
    }
  }
  return out;
}

void StrategyParams::validate() const {
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("lambdas must be finite and >= 0");
    }
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1]");
  }
}

void realize(const EstimateTable& table, std::size_t q, DecisionTrace& trace) {
  if (std::find(trace.executed.begin(), trace.executed.end(),
                trace.answer_model) == trace.executed.end()) {
    throw std::logic_error("answer model was never executed");
  }
  trace.query = table.query_ids()[q];
  double cost = 0.0;
  for (ModelId m : trace.executed) {
    cost += table.has_truth() ? table.true_cost(q, m)
                              : table.cost(q, m, Regime::kAfter).mean;
  }
  trace.realized_cost = cost;
  trace.realized_quality =
      table.has_truth() ? table.true_quality(q, trace.answer_model)
                        : table.quality(q, trace.answer_model, Regime::kAfter)
                              .mean;
}

double tie_tolerance(double tau_max) {
  return std::max(kTieRelTol * std::abs(tau_max), kTieAbsTol);
}

std::size_t argmax_tradeoff_index(std::span<const Candidate> candidates,
                                  double lambda, Pick pick) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  double best = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates) {
    best = std::max(best, tradeoff(c.quality, c.cost, lambda));
  }
  const double floor = best - tie_tolerance(best);
  std::size_t chosen = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    if (tradeoff(c.quality, c.cost, lambda) < floor) continue;
    if (chosen == candidates.size()) {
      chosen = i;
      continue;
    }
    const Candidate& cur = candidates[chosen];
    const bool better_cost = pick == Pick::kMinCost ? c.cost < cur.cost
                                                    : c.cost > cur.cost;
    if (better_cost || (c.cost == cur.cost && c.id < cur.id)) chosen = i;
  }
  return chosen;
}

std::uint64_t argmax_tradeoff(std::span<const Candidate> candidates,
                              double lambda, Pick pick) {
  return candidates[argmax_tradeoff_index(candidates, lambda, pick)].id;
}

}  // namespace modelsel
