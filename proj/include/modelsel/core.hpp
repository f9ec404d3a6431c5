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

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace modelsel {

// Dense model index in [0, k).
struct ModelId {
  std::size_t index = 0;

  friend auto operator<=>(const ModelId&, const ModelId&) = default;
};

// Set of models packed in a bitmask. k is limited to 32 models, which is far
// beyond what a 2^k lattice enumeration can handle anyway.
class ModelSet {
 public:
  static constexpr std::size_t kMaxModels = 32;

  constexpr ModelSet() = default;
  constexpr explicit ModelSet(std::uint32_t mask) : mask_(mask) {}

  static ModelSet all(std::size_t k) {
    if (k > kMaxModels) throw std::invalid_argument("too many models");
    return ModelSet(k == kMaxModels ? ~std::uint32_t{0}
                                    : (std::uint32_t{1} << k) - 1);
  }
  static ModelSet single(ModelId m) {
    return ModelSet(std::uint32_t{1} << m.index);
  }
  // Chain prefix {m_0, ..., m_{n-1}}.
  static ModelSet prefix(std::size_t n) { return all(n); }

  constexpr std::uint32_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const { return std::popcount(mask_); }
  constexpr bool contains(ModelId m) const {
    return (mask_ >> m.index) & 1U;
  }
  constexpr bool contains(ModelSet other) const {
    return (other.mask_ & ~mask_) == 0;
  }
  ModelSet with(ModelId m) const { return ModelSet(mask_ | (1U << m.index)); }
  ModelSet without(ModelId m) const {
    return ModelSet(mask_ & ~(1U << m.index));
  }
  constexpr ModelSet operator|(ModelSet o) const {
    return ModelSet(mask_ | o.mask_);
  }
  constexpr ModelSet operator&(ModelSet o) const {
    return ModelSet(mask_ & o.mask_);
  }
  constexpr ModelSet minus(ModelSet o) const {
    return ModelSet(mask_ & ~o.mask_);
  }
  std::vector<ModelId> members() const;

  friend constexpr bool operator==(ModelSet, ModelSet) = default;

 private:
  std::uint32_t mask_ = 0;
};

// A quality or cost estimate with its uncertainty.
struct Estimate {
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

// Estimates come in two regimes: before the model has been run on the query
// and after. A step-j view (first j-1 chain models computed) picks the regime
// per model.
enum class Regime { kBefore = 0, kAfter = 1 };

// Per-(query, model) ground truth plus before/after estimates. Rows are
// queries, columns are models; storage is row-major.
class EstimateTable {
 public:
  EstimateTable() = default;
  EstimateTable(std::vector<std::string> query_ids,
                std::vector<std::string> model_names);

  std::size_t num_queries() const { return query_ids_.size(); }
  std::size_t num_models() const { return model_names_.size(); }
  const std::vector<std::string>& query_ids() const { return query_ids_; }
  const std::vector<std::string>& model_names() const { return model_names_; }

  bool has_truth() const { return has_truth_; }
  bool has_estimates() const { return has_estimates_; }

  double true_quality(std::size_t q, ModelId m) const;
  double true_cost(std::size_t q, ModelId m) const;
  void set_truth(std::size_t q, ModelId m, double quality, double cost);

  const Estimate& quality(std::size_t q, ModelId m, Regime r) const;
  const Estimate& cost(std::size_t q, ModelId m, Regime r) const;
  void set_estimates(std::size_t q, ModelId m, Regime r, Estimate quality,
                     Estimate cost);

  // Estimates seen at chain step `step` (1-based, in [1, k+1]): models with
  // index < step-1 have been computed.
  static Regime regime_at_step(ModelId m, std::size_t step) {
    return m.index + 1 < step ? Regime::kAfter : Regime::kBefore;
  }
  static Regime regime_in(ModelId m, ModelSet computed) {
    return computed.contains(m) ? Regime::kAfter : Regime::kBefore;
  }

  // Rows in the given order.
  EstimateTable select_queries(std::span<const std::size_t> rows) const;
  // Columns in the given order; order[i] is the old index of new model i.
  EstimateTable reorder_models(std::span<const std::size_t> order) const;

  friend bool operator==(const EstimateTable&, const EstimateTable&) = default;

 private:
  std::size_t at(std::size_t q, ModelId m) const;
  void check(std::size_t q, ModelId m) const;

  std::vector<std::string> query_ids_;
  std::vector<std::string> model_names_;
  bool has_truth_ = false;
  bool has_estimates_ = false;
  std::vector<double> true_quality_;
  std::vector<double> true_cost_;
  std::vector<Estimate> quality_before_;
  std::vector<Estimate> quality_after_;
  std::vector<Estimate> cost_before_;
  std::vector<Estimate> cost_after_;
};

// Fitted hyperparameters shared by every strategy. Routing uses lambdas[0].
struct StrategyParams {
  std::vector<double> lambdas;
  double gamma = 1.0;
  std::optional<std::vector<double>> thresholds;

  void validate() const;
  friend bool operator==(const StrategyParams&, const StrategyParams&) =
      default;
};

// What a strategy did for one query.
struct DecisionTrace {
  std::string query;
  std::vector<ModelId> executed;
  ModelId answer_model;
  double realized_cost = 0.0;
  double realized_quality = 0.0;
};

// Fills realized cost/quality from the truth (or from after-regime estimates
// when the table carries no truth). answer_model must be in executed.
void realize(const EstimateTable& table, std::size_t q, DecisionTrace& trace);

// tau = quality - lambda * cost.
inline double tradeoff(double quality_mean, double cost_mean, double lambda) {
  return quality_mean - lambda * cost_mean;
}

enum class Pick { kMinCost, kMaxCost };

struct Candidate {
  std::uint64_t id = 0;
  double quality = 0.0;
  double cost = 0.0;
};

// Tolerance under which two tradeoff values count as tied.
inline constexpr double kTieRelTol = 1e-9;
inline constexpr double kTieAbsTol = 1e-12;
double tie_tolerance(double tau_max);

// Among candidates whose tradeoff ties the maximum, the cheapest (kMinCost)
// or dearest (kMaxCost); equal costs resolve to the lowest id.
// Throws std::invalid_argument("no candidates") on an empty span.
std::uint64_t argmax_tradeoff(std::span<const Candidate> candidates,
                              double lambda, Pick pick);

// Index into `candidates` rather than the id.
std::size_t argmax_tradeoff_index(std::span<const Candidate> candidates,
                                  double lambda, Pick pick);

// Mixing: draw < gamma selects kMinCost.
inline Pick pick_for_draw(double gamma, double uniform_draw) {
  return uniform_draw < gamma ? Pick::kMinCost : Pick::kMaxCost;
}

}  // namespace modelsel
