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
#include <optional>
#include <string_view>
#include <vector>

#include "modelsel/cascading.hpp"
#include "modelsel/core.hpp"
#include "modelsel/expected_max.hpp"
#include "modelsel/hyperopt.hpp"

namespace modelsel {

// Ablations of cascade routing.
//   kSlow: no pruning, every extension of the prefix is scored.
//   kGreedy: only the prefix and the prefix plus one model.
//   kNoExpect: supermodel quality is the best member mean, no uncertainty.
enum class Variant { kDefault, kSlow, kGreedy, kNoExpect };

std::string_view to_string(Variant v);
// Accepts "default", "slow", "greedy", "no_expect" (case-insensitive, '-' or
// '_'). Throws std::invalid_argument on anything else.
Variant parse_variant(std::string_view name);

// Which computed model answers the query. A supermodel is worth its best
// member, so cascade routing answers with the computed model whose after-run
// quality estimate is highest; kLastComputed mirrors plain cascades.
enum class AnswerRule { kLastComputed, kBestEstimate };

// Lattice enumeration is 2^k; beyond this it is not attempted.
inline constexpr std::size_t kMaxLatticeModels = 16;

// Supermodels extending the computed prefix.
struct CandidateSet {
  ModelSet prefix;
  std::vector<ModelSet> extensions;  // includes the bare prefix unless empty
};

// Every prefix | S for S a subset of `uncomputed` (singletons only for
// kGreedy). The empty supermodel is never a candidate. chain_only keeps only
// chain prefixes {m_0..m_{i-1}}.
CandidateSet enumerate_candidates(ModelSet prefix, ModelSet uncomputed,
                                  Variant variant, bool chain_only = false);

// Everything needed to score supermodels of one query in one state.
struct QueryView {
  const EstimateTable& table;
  std::size_t query;
  ModelSet computed;
  const SigmaTable& sigma;
  const NormalDraws& draws;
  Variant variant;
};

// Quality: expected max of members' current estimates (max of means under
// kNoExpect). Cost: sum of members' current cost means. The id is the mask.
Candidate supermodel_estimate(const QueryView& view, ModelSet supermodel);

// Drops every candidate containing a set M whose uncomputed member m has
// tau(M) - tau(M \ m) below a round-off tolerance. The bare prefix survives.
CandidateSet prune_candidates(const CandidateSet& candidates,
                              const QueryView& view, double lambda);

ModelSet select_supermodel(const CandidateSet& candidates,
                           const QueryView& view, double lambda, double gamma,
                           double uniform_draw);

struct CascadeRouteOptions {
  Variant variant = Variant::kDefault;
  bool chain_only = false;  // restrict to chain supermodels, run in index order
  AnswerRule answer = AnswerRule::kBestEstimate;
  std::size_t mc_samples = 512;
  std::uint64_t seed = 0;
  SearchConfig search;
  bool run_search = true;

  MonteCarloConfig mc() const { return {mc_samples, seed}; }
};

// Next model to run from a selected supermodel: the uncomputed member with
// the lowest before-run cost estimate, lower index on ties (lowest index when
// chain_only).
ModelId next_model(const EstimateTable& table, std::size_t q,
                   ModelSet computed, ModelSet selected, bool chain_only);

DecisionTrace run_cascade_route(const EstimateTable& table, std::size_t q,
                                const StrategyParams& params,
                                const SigmaTable& sigma,
                                const CascadeRouteOptions& options);

// Whole-table simulation for fitting. Candidate estimates are memoized per
// (query, computed set) and scored without pruning, which selects the same
// supermodels as the pruned online path.
class CascadeRouteEvaluator {
 public:
  CascadeRouteEvaluator(const EstimateTable& table, const SigmaTable& sigma,
                        const CascadeRouteOptions& options);

  Evaluation evaluate(const StrategyParams& params) const;
  DecisionTrace trace(std::size_t q, const StrategyParams& params) const;

 private:
  const std::vector<Candidate>& candidates(std::size_t q,
                                           ModelSet computed) const;

  const EstimateTable& table_;
  const SigmaTable& sigma_;
  CascadeRouteOptions options_;
  std::size_t k_;
  std::vector<std::vector<double>> mixing_;  // [q][step]
  mutable std::vector<std::optional<NormalDraws>> draws_;
  mutable std::vector<std::vector<std::optional<std::vector<Candidate>>>>
      cache_;  // [q][computed mask]
};

struct FittedCascadeRouter {
  StrategyParams params;
  SigmaTable sigma;
  Evaluation validation;
  Evaluation stage_one;
};

// Same two-stage scheme as fit_cascade with cascade routing as the
// simulation kernel.
FittedCascadeRouter fit_cascade_router(const EstimateTable& table,
                                       double budget,
                                       const CascadeRouteOptions& options = {});

}  // namespace modelsel
