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

#include "modelsel/cascading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "modelsel/budget.hpp"
#include "modelsel/random.hpp"

namespace modelsel {

SigmaTable::SigmaTable(std::size_t num_models)
    : k_(num_models), sigma_(num_models * (num_models + 1), 0.0) {}

double SigmaTable::at(ModelId m, std::size_t step) const {
  if (m.index >= k_ || step < 1 || step > k_ + 1) {
    throw std::out_of_range("sigma index out of range");
  }
  return sigma_[m.index * (k_ + 1) + (step - 1)];
}

void SigmaTable::set(ModelId m, std::size_t step, double sigma) {
  if (m.index >= k_ || step < 1 || step > k_ + 1) {
    throw std::out_of_range("sigma index out of range");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  sigma_[m.index * (k_ + 1) + (step - 1)] = sigma;
}

SigmaTable estimate_sigma(const EstimateTable& table,
                          std::span<const std::size_t> rows) {
  if (rows.size() < 2) {
    throw std::invalid_argument("insufficient data for variance");
  }
  const std::size_t k = table.num_models();
  SigmaTable out(k);
  const double n = static_cast<double>(rows.size());
  for (std::size_t mi = 0; mi < k; ++mi) {
    const ModelId m{mi};
    for (std::size_t step = 1; step <= k + 1; ++step) {
      const Regime r = EstimateTable::regime_at_step(m, step);
      double sum = 0.0;
      double sum_sq = 0.0;
      for (std::size_t q : rows) {
        const double d = table.quality(q, m, r).mean -
                         table.quality(q, m, Regime::kAfter).mean;
        sum += d;
        sum_sq += d * d;
      }
      const double mean = sum / n;
      out.set(m, step, std::sqrt(std::max(0.0, sum_sq / n - mean * mean)));
    }
  }
  return out;
}

SigmaTable estimate_sigma(const EstimateTable& table) {
  std::vector<std::size_t> rows(table.num_queries());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return estimate_sigma(table, rows);
}

std::vector<Candidate> cascade_candidates(const EstimateTable& table,
                                          std::size_t q, std::size_t step,
                                          const SigmaTable& sigma,
                                          QualityAggregation aggregation,
                                          const NormalDraws& draws) {
  const std::size_t k = table.num_models();
  if (step < 1 || step > k) throw std::out_of_range("cascade step out of range");
  std::vector<Candidate> out;
  out.reserve(k + 1);
  std::vector<GaussianTerm> terms;
  terms.reserve(k);
  double cost = 0.0;
  double max_mean = -std::numeric_limits<double>::infinity();
  const std::size_t first = step == 1 ? 1 : step - 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const ModelId m{i - 1};
    const Regime r = EstimateTable::regime_at_step(m, step);
    const double mean = table.quality(q, m, r).mean;
    terms.push_back({m.index, mean, sigma.at(m, step)});
    max_mean = std::max(max_mean, mean);
    cost += table.cost(q, m, r).mean;
    if (i < first) continue;
    double quality = 0.0;
    switch (aggregation) {
      case QualityAggregation::kExpectedMax:
        quality = expected_max(terms, draws).value;
        break;
      case QualityAggregation::kMaxMean:
        quality = max_mean;
        break;
      case QualityAggregation::kLastModel:
        quality = mean;
        break;
    }
    out.push_back({i, quality, cost});
  }
  return out;
}

StepDecision cascade_step(const EstimateTable& table, std::size_t q,
                          std::size_t step, const StrategyParams& params,
                          const SigmaTable& sigma,
                          QualityAggregation aggregation,
                          const NormalDraws& draws, double uniform_draw) {
  if (step == 1) return StepDecision::kContinue;
  const auto cands =
      cascade_candidates(table, q, step, sigma, aggregation, draws);
  const std::uint64_t chosen =
      argmax_tradeoff(cands, params.lambdas.at(step - 1),
                      pick_for_draw(params.gamma, uniform_draw));
  return chosen == step - 1 ? StepDecision::kStop : StepDecision::kContinue;
}

DecisionTrace run_cascade(const EstimateTable& table, std::size_t q,
                          const StrategyParams& params, const SigmaTable& sigma,
                          const CascadeOptions& options) {
  const std::size_t k = table.num_models();
  if (params.lambdas.size() != k) {
    throw std::invalid_argument("cascade needs one lambda per model");
  }
  const std::string& id = table.query_ids()[q];
  const NormalDraws draws = NormalDraws::for_query(options.mc(), k, id);
  DecisionTrace trace;
  for (std::size_t step = 1; step <= k; ++step) {
    const double u = mixing_draw(options.seed, id, step);
    if (cascade_step(table, q, step, params, sigma, options.aggregation, draws,
                     u) == StepDecision::kStop) {
      break;
    }
    trace.executed.push_back(ModelId{step - 1});
  }
  trace.answer_model = trace.executed.back();
  realize(table, q, trace);
  return trace;
}

CascadeEvaluator::CascadeEvaluator(const EstimateTable& table,
                                   const SigmaTable& sigma,
                                   const CascadeOptions& options)
    : table_(table), k_(table.num_models()), seed_(options.seed) {
  const std::size_t n = table.num_queries();
  candidates_.resize(n * (k_ + 1));
  draws_.assign(n, std::vector<double>(k_ + 1, 0.0));
  prefix_cost_.assign(n * (k_ + 1), 0.0);
  realized_quality_.assign(n * k_, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    const std::string& id = table.query_ids()[q];
    const NormalDraws draws = NormalDraws::for_query(options.mc(), k_, id);
    for (std::size_t step = 2; step <= k_; ++step) {
      candidates_[q * (k_ + 1) + step] = cascade_candidates(
          table, q, step, sigma, options.aggregation, draws);
      draws_[q][step] = mixing_draw(seed_, id, step);
    }
    for (std::size_t m = 0; m < k_; ++m) {
      DecisionTrace t;
      t.executed = {ModelId{m}};
      t.answer_model = ModelId{m};
      realize(table, q, t);
      prefix_cost_[q * (k_ + 1) + m + 1] =
          prefix_cost_[q * (k_ + 1) + m] + t.realized_cost;
      realized_quality_[q * k_ + m] = t.realized_quality;
    }
  }
}

std::size_t CascadeEvaluator::depth(std::size_t q,
                                    const StrategyParams& params) const {
  std::size_t depth = 1;
  for (std::size_t step = 2; step <= k_; ++step) {
    const auto& cands = candidates_[q * (k_ + 1) + step];
    const std::size_t idx = argmax_tradeoff_index(
        cands, params.lambdas[step - 1],
        pick_for_draw(params.gamma, draws_[q][step]));
    if (cands[idx].id == step - 1) break;
    depth = step;
  }
  return depth;
}

Evaluation CascadeEvaluator::evaluate(const StrategyParams& params) const {
  if (params.lambdas.size() != k_) {
    throw std::invalid_argument("cascade needs one lambda per model");
  }
  const std::size_t n = table_.num_queries();
  Evaluation sum;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t d = depth(q, params);
    sum.cost += prefix_cost_[q * (k_ + 1) + d];
    sum.quality += realized_quality_[q * k_ + d - 1];
  }
  return {sum.quality / static_cast<double>(n), sum.cost / static_cast<double>(n)};
}

namespace {

double mix_gamma(double cost_min, double cost_max, double budget) {
  if (cost_max <= cost_min) return 1.0;
  return std::clamp((cost_max - budget) / (cost_max - cost_min), 0.0, 1.0);
}

StrategyParams equal_params(std::size_t k, double lambda, double gamma) {
  StrategyParams p;
  p.lambdas.assign(k, lambda);
  p.gamma = gamma;
  return p;
}

}  // namespace

StageOneResult equal_lambda_search(const Objective& objective,
                                   std::size_t num_models, double budget) {
  const auto feasible = [&](const Evaluation& e) {
    return within_budget(e.cost, budget);
  };
  {
    StrategyParams p = equal_params(num_models, 0.0, 0.0);
    const Evaluation e = objective(p);
    if (feasible(e)) return {std::move(p), e};
  }

  double lo = 0.0;
  double hi = 0.0;
  if (!feasible(objective(equal_params(num_models, 0.0, 1.0)))) {
    hi = 1.0;
    while (!feasible(objective(equal_params(num_models, hi, 1.0)))) {
      lo = hi;
      hi *= 2.0;
      if (hi > kLambdaCap) {
        throw std::invalid_argument("budget below cheapest strategy");
      }
    }
    while (hi - lo > 1e-9 * (1.0 + hi)) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(objective(equal_params(num_models, mid, 1.0)))) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }

  const Evaluation at_min = objective(equal_params(num_models, hi, 1.0));
  const Evaluation at_max = objective(equal_params(num_models, hi, 0.0));
  double gamma = mix_gamma(at_min.cost, at_max.cost, budget);
  StrategyParams best = equal_params(num_models, hi, gamma);
  Evaluation value = objective(best);
  if (!feasible(value)) {
    // Per-step mixing makes cost nonlinear in gamma; walk toward s_min.
    double g_lo = gamma;
    double g_hi = 1.0;
    Evaluation v_hi = at_min;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (g_lo + g_hi);
      const Evaluation v = objective(equal_params(num_models, hi, mid));
      if (feasible(v)) {
        g_hi = mid;
        v_hi = v;
      } else {
        g_lo = mid;
      }
    }
    best.gamma = g_hi;
    value = v_hi;
  }
  return {std::move(best), value};
}

double lambda_reference(const EstimateTable& table) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    for (std::size_t m = 0; m < table.num_models(); ++m) {
      sum += table.cost(q, ModelId{m}, Regime::kBefore).mean;
      ++count;
    }
  }
  const double mean = count ? sum / static_cast<double>(count) : 0.0;
  return mean > 0.0 ? 0.1 / mean : 1.0;
}

TwoStageResult fit_two_stage(const Objective& objective, std::size_t num_models,
                             double budget, const SearchConfig& search,
                             bool run_search, double lambda_floor) {
  StageOneResult stage_one = equal_lambda_search(objective, num_models, budget);
  TwoStageResult out{std::move(stage_one.params), stage_one.value,
                     stage_one.value};
  if (run_search) {
    SearchConfig config = search;
    if (config.lambda_floor == 0.0) config.lambda_floor = lambda_floor;
    SearchResult r = optimize(objective, budget, out.params, config);
    out.params = std::move(r.params);
    out.validation = r.value;
  }
  return out;
}

FittedCascade fit_cascade(const EstimateTable& table, double budget,
                          const CascadeOptions& options) {
  if (table.num_queries() == 0) {
    throw std::invalid_argument("cascade fit needs a nonempty table");
  }
  FittedCascade out;
  out.sigma = estimate_sigma(table);
  const CascadeEvaluator evaluator(table, out.sigma, options);
  TwoStageResult r = fit_two_stage(
      [&](const StrategyParams& p) { return evaluator.evaluate(p); },
      table.num_models(), budget, options.search, options.run_search,
      lambda_reference(table));
  out.params = std::move(r.params);
  out.validation = r.validation;
  out.stage_one = r.stage_one;
  return out;
}

DecisionTrace threshold_cascade(const EstimateTable& table, std::size_t q,
                                std::span<const double> thresholds) {
  const std::size_t k = table.num_models();
  if (thresholds.size() != k) {
    throw std::invalid_argument("threshold cascade needs one threshold per model");
  }
  DecisionTrace trace;
  trace.executed.push_back(ModelId{0});
  for (std::size_t m = 0; m + 1 < k; ++m) {
    if (table.quality(q, ModelId{m}, Regime::kAfter).mean >= thresholds[m]) {
      break;
    }
    trace.executed.push_back(ModelId{m + 1});
  }
  trace.answer_model = trace.executed.back();
  realize(table, q, trace);
  return trace;
}

namespace {

class ThresholdEvaluator {
 public:
  explicit ThresholdEvaluator(const EstimateTable& table)
      : n_(table.num_queries()), k_(table.num_models()) {
    after_.resize(n_ * k_);
    prefix_cost_.assign(n_ * (k_ + 1), 0.0);
    quality_.resize(n_ * k_);
    for (std::size_t q = 0; q < n_; ++q) {
      for (std::size_t m = 0; m < k_; ++m) {
        after_[q * k_ + m] = table.quality(q, ModelId{m}, Regime::kAfter).mean;
        DecisionTrace t;
        t.executed = {ModelId{m}};
        t.answer_model = ModelId{m};
        realize(table, q, t);
        prefix_cost_[q * (k_ + 1) + m + 1] =
            prefix_cost_[q * (k_ + 1) + m] + t.realized_cost;
        quality_[q * k_ + m] = t.realized_quality;
      }
    }
  }

  Evaluation evaluate(std::span<const double> thresholds) const {
    Evaluation sum;
    for (std::size_t q = 0; q < n_; ++q) {
      std::size_t d = 1;
      while (d < k_ && after_[q * k_ + d - 1] < thresholds[d - 1]) ++d;
      sum.cost += prefix_cost_[q * (k_ + 1) + d];
      sum.quality += quality_[q * k_ + d - 1];
    }
    const double n = static_cast<double>(n_);
    return {sum.quality / n, sum.cost / n};
  }

  const std::vector<double>& after() const { return after_; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> after_;
  std::vector<double> prefix_cost_;
  std::vector<double> quality_;
};

}  // namespace

FittedThresholds fit_threshold_cascade(const EstimateTable& table,
                                       double budget,
                                       const CascadeOptions& options) {
  const std::size_t n = table.num_queries();
  const std::size_t k = table.num_models();
  if (n == 0) throw std::invalid_argument("threshold fit needs a nonempty table");
  const ThresholdEvaluator evaluator(table);

  // Candidate common thresholds: every observed decision statistic plus a
  // sentinel on either side. Cost is nondecreasing in the threshold.
  std::vector<double> values;
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t m = 0; m + 1 < k; ++m) {
      values.push_back(evaluator.after()[q * k + m]);
    }
  }
  double spread = 0.0;
  if (values.empty()) {
    values = {0.0};
  } else {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    for (double v : values) spread += (v - mean) * (v - mean);
    spread = std::sqrt(spread / static_cast<double>(values.size()));
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  values.insert(values.begin(), values.front() - 1.0);
  values.push_back(values.back() + 1.0);

  const auto common = [k](double t) { return std::vector<double>(k, t); };
  if (!within_budget(evaluator.evaluate(common(values.front())).cost, budget)) {
    throw std::invalid_argument("budget below cheapest strategy");
  }
  std::size_t lo = 0;  // feasible
  std::size_t hi = values.size();
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (within_budget(evaluator.evaluate(common(values[mid])).cost, budget)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  FittedThresholds out;
  out.thresholds = common(values[lo]);
  out.validation = evaluator.evaluate(out.thresholds);
  if (options.run_search && k > 1) {
    SearchConfig config = options.search;
    config.search_lambdas = false;
    config.search_gamma = false;
    config.search_thresholds = true;
    // Relative to the spread of the decision statistic.
    config.threshold_scale *= spread > 0.0 ? spread : 1.0;
    StrategyParams init;
    init.thresholds = out.thresholds;
    const Objective objective = [&](const StrategyParams& p) {
      return evaluator.evaluate(*p.thresholds);
    };
    SearchResult r = optimize(objective, budget, init, config);
    out.thresholds = *r.params.thresholds;
    out.validation = r.value;
  }
  return out;
}

}  // namespace modelsel
