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

#include "modelsel/cascade_routing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "modelsel/random.hpp"

namespace modelsel {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kDefault:
      return "default";
    case Variant::kSlow:
      return "slow";
    case Variant::kGreedy:
      return "greedy";
    case Variant::kNoExpect:
      return "no_expect";
  }
  return "default";
}

Variant parse_variant(std::string_view name) {
  std::string s;
  for (char c : name) {
    s.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(
                                     static_cast<unsigned char>(c))));
  }
  if (s == "default") return Variant::kDefault;
  if (s == "slow") return Variant::kSlow;
  if (s == "greedy") return Variant::kGreedy;
  if (s == "no_expect" || s == "noexpect") return Variant::kNoExpect;
  throw std::invalid_argument("unknown variant: " + std::string(name));
}

namespace {

bool is_chain(ModelSet s) { return (s.mask() & (s.mask() + 1)) == 0; }

double before_cost(const EstimateTable& table, std::size_t q, ModelId m) {
  return table.cost(q, m, Regime::kBefore).mean;
}

}  // namespace

CandidateSet enumerate_candidates(ModelSet prefix, ModelSet uncomputed,
                                  Variant variant, bool chain_only) {
  if (!(prefix & uncomputed).empty()) {
    throw std::invalid_argument("prefix and uncomputed sets overlap");
  }
  CandidateSet out;
  out.prefix = prefix;
  const auto keep = [&](ModelSet s) {
    if (s.empty()) return;
    if (chain_only && !is_chain(s)) return;
    out.extensions.push_back(s);
  };
  if (variant == Variant::kGreedy) {
    keep(prefix);
    for (ModelId m : uncomputed.members()) keep(prefix.with(m));
    return out;
  }
  // Subsets of `uncomputed` in increasing mask order.
  const std::uint32_t u = uncomputed.mask();
  std::uint32_t sub = 0;
  while (true) {
    keep(prefix | ModelSet(sub));
    if (sub == u) break;
    sub = (sub - u) & u;
  }
  return out;
}

Candidate supermodel_estimate(const QueryView& view, ModelSet supermodel) {
  if (supermodel.empty()) {
    throw std::invalid_argument("the empty supermodel has no estimate");
  }
  Candidate c;
  c.id = supermodel.mask();
  double max_mean = -std::numeric_limits<double>::infinity();
  GaussianTerm terms[ModelSet::kMaxModels];
  std::size_t n = 0;
  for (ModelId m : supermodel.members()) {
    const Regime r = EstimateTable::regime_in(m, view.computed);
    const double mean = view.table.quality(view.query, m, r).mean;
    max_mean = std::max(max_mean, mean);
    terms[n++] = {m.index, mean, view.sigma.in_state(m, view.computed)};
    c.cost += view.table.cost(view.query, m, r).mean;
  }
  c.quality = view.variant == Variant::kNoExpect
                  ? max_mean
                  : expected_max(std::span(terms, n), view.draws).value;
  return c;
}

CandidateSet prune_candidates(const CandidateSet& candidates,
                              const QueryView& view, double lambda) {
  const std::size_t k = view.table.num_models();
  if (k > kMaxLatticeModels) {
    throw std::invalid_argument("too many models for lattice pruning");
  }
  // Scale bound on |tau| for the round-off tolerance of the gain test.
  double scale = 0.0;
  {
    double total_cost = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const ModelId m{i};
      const Regime r = EstimateTable::regime_in(m, view.computed);
      max_abs = std::max(max_abs,
                         std::abs(view.table.quality(view.query, m, r).mean) +
                             4.0 * view.sigma.in_state(m, view.computed));
      total_cost += view.table.cost(view.query, m, r).mean;
    }
    scale = max_abs + lambda * total_cost;
  }
  const double slack = std::max(kTieRelTol * scale, kTieAbsTol);

  const std::size_t lattice = std::size_t{1} << k;
  std::vector<char> present(lattice, 0);
  std::vector<char> dead(lattice, 0);
  std::vector<char> scored(lattice, 0);
  std::vector<double> tau(lattice, 0.0);
  for (ModelSet s : candidates.extensions) present[s.mask()] = 1;

  const auto tau_of = [&](ModelSet s) -> double {
    if (s.empty()) return -std::numeric_limits<double>::infinity();
    if (!scored[s.mask()]) {
      const Candidate c = supermodel_estimate(view, s);
      tau[s.mask()] = tradeoff(c.quality, c.cost, lambda);
      scored[s.mask()] = 1;
    }
    return tau[s.mask()];
  };

  std::vector<ModelSet> order = candidates.extensions;
  std::stable_sort(order.begin(), order.end(), [](ModelSet a, ModelSet b) {
    return a.size() < b.size();
  });
  for (ModelSet s : order) {
    if (s == candidates.prefix) continue;
    const ModelSet fresh = s.minus(view.computed);
    bool is_dead = false;
    for (ModelId m : fresh.members()) {
      const ModelSet parent = s.without(m);
      if (present[parent.mask()] && dead[parent.mask()]) {
        is_dead = true;
        break;
      }
    }
    if (!is_dead) {
      const double t = tau_of(s);
      for (ModelId m : fresh.members()) {
        if (t - tau_of(s.without(m)) < -slack) {
          is_dead = true;
          break;
        }
      }
    }
    dead[s.mask()] = is_dead ? 1 : 0;
  }

  CandidateSet out;
  out.prefix = candidates.prefix;
  for (ModelSet s : candidates.extensions) {
    if (s == candidates.prefix || !dead[s.mask()]) out.extensions.push_back(s);
  }
  return out;
}

ModelSet select_supermodel(const CandidateSet& candidates,
                           const QueryView& view, double lambda, double gamma,
                           double uniform_draw) {
  std::vector<Candidate> scored;
  scored.reserve(candidates.extensions.size());
  for (ModelSet s : candidates.extensions) {
    scored.push_back(supermodel_estimate(view, s));
  }
  return ModelSet(static_cast<std::uint32_t>(
      argmax_tradeoff(scored, lambda, pick_for_draw(gamma, uniform_draw))));
}

ModelId next_model(const EstimateTable& table, std::size_t q,
                   ModelSet computed, ModelSet selected, bool chain_only) {
  const ModelSet pending = selected.minus(computed);
  if (pending.empty()) throw std::logic_error("nothing left to run");
  const std::vector<ModelId> members = pending.members();
  if (chain_only) return members.front();
  ModelId best = members.front();
  double best_cost = before_cost(table, q, best);
  for (ModelId m : members) {
    const double c = before_cost(table, q, m);
    if (c < best_cost) {
      best = m;
      best_cost = c;
    }
  }
  return best;
}

namespace {

void choose_answer(const EstimateTable& table, std::size_t q, AnswerRule rule,
                   DecisionTrace& trace) {
  trace.answer_model = trace.executed.back();
  if (rule == AnswerRule::kBestEstimate) {
    double best = -std::numeric_limits<double>::infinity();
    for (ModelId m : trace.executed) {
      const double v = table.quality(q, m, Regime::kAfter).mean;
      if (v > best) {
        best = v;
        trace.answer_model = m;
      }
    }
  }
}

void check_params(const StrategyParams& params, std::size_t k) {
  if (params.lambdas.size() != k) {
    throw std::invalid_argument("cascade routing needs one lambda per model");
  }
}

}  // namespace

DecisionTrace run_cascade_route(const EstimateTable& table, std::size_t q,
                                const StrategyParams& params,
                                const SigmaTable& sigma,
                                const CascadeRouteOptions& options) {
  const std::size_t k = table.num_models();
  check_params(params, k);
  const std::string& id = table.query_ids()[q];
  const NormalDraws draws = NormalDraws::for_query(options.mc(), k, id);
  const ModelSet everything = ModelSet::all(k);
  const bool prune = options.variant != Variant::kSlow && !options.chain_only;

  DecisionTrace trace;
  ModelSet computed;
  for (std::size_t step = 1; step <= k; ++step) {
    const double lambda = params.lambdas[step - 1];
    const QueryView view{table, q, computed, sigma, draws, options.variant};
    CandidateSet cands =
        enumerate_candidates(computed, everything.minus(computed),
                             options.variant, options.chain_only);
    if (prune) cands = prune_candidates(cands, view, lambda);
    const ModelSet selected =
        select_supermodel(cands, view, lambda, params.gamma,
                          mixing_draw(options.seed, id, step));
    if (selected == computed) break;
    const ModelId m = next_model(table, q, computed, selected,
                                 options.chain_only);
    trace.executed.push_back(m);
    computed = computed.with(m);
  }
  choose_answer(table, q, options.answer, trace);
  realize(table, q, trace);
  return trace;
}

CascadeRouteEvaluator::CascadeRouteEvaluator(
    const EstimateTable& table, const SigmaTable& sigma,
    const CascadeRouteOptions& options)
    : table_(table),
      sigma_(sigma),
      options_(options),
      k_(table.num_models()) {
  if (k_ > kMaxLatticeModels) {
    throw std::invalid_argument("too many models for lattice enumeration");
  }
  const std::size_t n = table.num_queries();
  mixing_.assign(n, std::vector<double>(k_ + 1, 0.0));
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t step = 1; step <= k_; ++step) {
      mixing_[q][step] = mixing_draw(options.seed, table.query_ids()[q], step);
    }
  }
  draws_.resize(n);
  cache_.resize(n);
}

const std::vector<Candidate>& CascadeRouteEvaluator::candidates(
    std::size_t q, ModelSet computed) const {
  auto& slots = cache_[q];
  if (slots.empty()) slots.resize(std::size_t{1} << k_);
  auto& slot = slots[computed.mask()];
  if (!slot) {
    if (!draws_[q]) {
      draws_[q] =
          NormalDraws::for_query(options_.mc(), k_, table_.query_ids()[q]);
    }
    const QueryView view{table_, q, computed, sigma_, *draws_[q],
                         options_.variant};
    const CandidateSet set =
        enumerate_candidates(computed, ModelSet::all(k_).minus(computed),
                             options_.variant, options_.chain_only);
    std::vector<Candidate> scored;
    scored.reserve(set.extensions.size());
    for (ModelSet s : set.extensions) {
      scored.push_back(supermodel_estimate(view, s));
    }
    slot = std::move(scored);
  }
  return *slot;
}

DecisionTrace CascadeRouteEvaluator::trace(std::size_t q,
                                           const StrategyParams& params) const {
  DecisionTrace trace;
  ModelSet computed;
  for (std::size_t step = 1; step <= k_; ++step) {
    const auto& cands = candidates(q, computed);
    const std::size_t idx = argmax_tradeoff_index(
        cands, params.lambdas[step - 1],
        pick_for_draw(params.gamma, mixing_[q][step]));
    const ModelSet selected(static_cast<std::uint32_t>(cands[idx].id));
    if (selected == computed) break;
    const ModelId m =
        next_model(table_, q, computed, selected, options_.chain_only);
    trace.executed.push_back(m);
    computed = computed.with(m);
  }
  choose_answer(table_, q, options_.answer, trace);
  realize(table_, q, trace);
  return trace;
}

Evaluation CascadeRouteEvaluator::evaluate(const StrategyParams& params) const {
  check_params(params, k_);
  const std::size_t n = table_.num_queries();
  Evaluation sum;
  for (std::size_t q = 0; q < n; ++q) {
    const DecisionTrace t = trace(q, params);
    sum.quality += t.realized_quality;
    sum.cost += t.realized_cost;
  }
  return {sum.quality / static_cast<double>(n),
          sum.cost / static_cast<double>(n)};
}

FittedCascadeRouter fit_cascade_router(const EstimateTable& table,
                                       double budget,
                                       const CascadeRouteOptions& options) {
  if (table.num_queries() == 0) {
    throw std::invalid_argument("cascade routing fit needs a nonempty table");
  }
  FittedCascadeRouter out;
  out.sigma = estimate_sigma(table);
  const CascadeRouteEvaluator evaluator(table, out.sigma, options);
  TwoStageResult r = fit_two_stage(
      [&](const StrategyParams& p) { return evaluator.evaluate(p); },
      table.num_models(), budget, options.search, options.run_search,
      lambda_reference(table));
  out.params = std::move(r.params);
  out.validation = r.validation;
  out.stage_one = r.stage_one;
  return out;
}

}  // namespace modelsel
