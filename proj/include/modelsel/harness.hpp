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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modelsel/cascade_routing.hpp"
#include "modelsel/core.hpp"
#include "modelsel/estimators.hpp"
#include "modelsel/hyperopt.hpp"

namespace modelsel {

// Malformed or unusable input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- CSV -------------------------------------------------------------------

// Truth columns `quality.<name>`, `cost.<name>` per model in column order, an
// optional `split` column (train | validation | test) and optional estimate
// columns `quality_before.<name>`, `quality_after.<name>`, `cost_before.<name>`,
// `cost_after.<name>`, each with a `_std` twin (`quality_before_std.<name>`),
// that must be present for every model or for none.
struct CsvData {
  EstimateTable table;
  std::vector<std::string> splits;  // empty without a split column
};

CsvData parse_csv(std::istream& in, std::string_view source = "<csv>");
CsvData load_csv(const std::string& path);

void write_csv(std::ostream& out, const EstimateTable& table,
               std::span<const std::string> splits = {});

// ---- splits, budgets, metrics ------------------------------------------------

struct DataSplit {
  std::vector<std::size_t> train;       // estimator fitting
  std::vector<std::size_t> validation;  // hyperparameter fitting
  std::vector<std::size_t> test;        // reporting
};

// Seeded shuffle, then contiguous slices of floor(f * n) rows. When the
// fractions sum to one the test slice takes the remainder. Throws
// std::invalid_argument on invalid fractions or an empty slice.
DataSplit split_dataset(std::size_t n, const std::array<double, 3>& fractions,
                        std::uint64_t seed);

// Rows labelled train / validation / test. Throws DataError on other labels.
DataSplit split_from_labels(std::span<const std::string> labels);

// Mean realized cost per model (truth when present).
std::vector<double> mean_model_costs(const EstimateTable& table);
std::vector<double> mean_model_qualities(const EstimateTable& table);

// `points` budgets evenly spaced from the cheapest to the dearest model's mean
// cost, both inclusive; a single point when they coincide or k = 1.
std::vector<double> budget_grid(const EstimateTable& table, std::size_t points);

struct CostQuality {
  double cost = 0.0;
  double quality = 0.0;
};

// Trapezoidal area under quality over cost, divided by the cost range.
// Points are sorted by cost; equal costs are merged by averaging quality.
// Throws std::invalid_argument below two distinct costs.
double auc(std::vector<CostQuality> points);

// Upper-left Pareto frontier of per-model (mean cost, mean quality) points,
// ascending in cost and quality.
struct FrontierPoint {
  ModelId model;
  double cost = 0.0;
  double quality = 0.0;
};
std::vector<FrontierPoint> pareto_frontier(const EstimateTable& table);

// Mixture of two adjacent frontier models that spends the budget; clamped to
// the frontier ends.
struct InterpMix {
  ModelId low;
  ModelId high;
  double weight_high = 0.0;
};
InterpMix linear_interp_mix(std::span<const FrontierPoint> frontier,
                            double budget);
// Interpolated frontier quality of `table` at the budget.
double linear_interp_baseline(const EstimateTable& table, double budget);

// ---- configuration ---------------------------------------------------------

enum class Strategy { kRouting, kCascade, kCascadeRouting, kThreshold, kLinearInterp };

std::string_view to_string(Strategy s);
// "routing", "cascade", "cascade-routing", "threshold", "linear-interp".
Strategy parse_strategy(std::string_view name);

struct BenchmarkConfig {
  std::optional<std::string> csv_path;  // otherwise the workload is generated
  WorkloadSpec workload;
  bool provided_estimates = false;       // take estimates from the CSV
  std::string noise_label = "low";
  NoiseSpec noise = NoiseSpec::low();
  std::array<double, 3> splits{0.25, 0.25, 0.5};
  std::size_t budget_points = 20;
  std::vector<Strategy> strategies{Strategy::kLinearInterp, Strategy::kRouting,
                                   Strategy::kThreshold, Strategy::kCascade,
                                   Strategy::kCascadeRouting};
  Variant variant = Variant::kDefault;
  std::uint64_t seed = 0;
  SearchConfig search;
  std::size_t mc_samples = 512;

  void validate() const;
  // Unknown keys are rejected. Throws std::invalid_argument.
  static BenchmarkConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

BenchmarkConfig load_config(const std::string& path);

// Data after loading, splitting and estimate simulation; models sorted by
// mean validation cost to form the cascade chain.
struct PreparedData {
  EstimateTable table;
  DataSplit split;
  EstimateTable validation;
  EstimateTable test;
};

PreparedData prepare_data(const BenchmarkConfig& config);

// ---- fitting and evaluation ------------------------------------------------

// Fitted hyperparameters of one strategy at one budget.
struct FittedStrategy {
  Strategy strategy = Strategy::kRouting;
  Variant variant = Variant::kDefault;
  double budget = 0.0;       // budget the fit used, after clamping
  bool clamped = false;      // requested budget was below the strategy floor
  StrategyParams params;
  Evaluation validation;     // realized on the validation split

  nlohmann::json to_json() const;
  static FittedStrategy from_json(const nlohmann::json& j);
};

struct TestOutcome {
  Evaluation test;
  double mean_decision_seconds = 0.0;
};

// Fits every strategy for many budgets on one validation table, reusing
// per-table precomputation.
class StrategyRunner {
 public:
  StrategyRunner(const EstimateTable& validation, const BenchmarkConfig& config);

  FittedStrategy fit(Strategy strategy, double budget, Variant variant,
                     std::uint64_t search_seed);
  TestOutcome evaluate(const FittedStrategy& fitted,
                       const EstimateTable& test) const;

 private:
  const EstimateTable& validation_;
  const BenchmarkConfig& config_;
  SigmaTable sigma_;
  std::vector<std::optional<CascadeRouteEvaluator>> route_evaluators_;
  std::optional<CascadeEvaluator> cascade_evaluator_;
};

// ---- sweep report ----------------------------------------------------------

struct CurvePoint {
  double budget = 0.0;
  double cost = 0.0;     // realized on test
  double quality = 0.0;  // realized on test
  double validation_cost = 0.0;
  double validation_quality = 0.0;
  bool clamped = false;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct StrategyCurve {
  std::string name;
  std::string variant;
  std::vector<CurvePoint> points;
  std::optional<double> auc;
  std::optional<std::string> error;
  double mean_decision_seconds = 0.0;  // timing, excluded from comparisons

  friend bool operator==(const StrategyCurve&, const StrategyCurve&) = default;
};

struct SweepReport {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> models;
  std::vector<double> budgets;
  std::vector<StrategyCurve> strategies;

  const StrategyCurve* find(std::string_view name) const;
  // Timing lives under a separate "timing" key, dropped when include_timing
  // is false.
  nlohmann::json to_json(bool include_timing = true) const;
  static SweepReport from_json(const nlohmann::json& j);
  void write_curves_csv(std::ostream& out) const;

  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

SweepReport run_sweep(const BenchmarkConfig& config);

// Cascade routing under each variant on the same data.
struct AblationRow {
  std::string variant;
  std::optional<double> auc;
  double mean_decision_seconds = 0.0;
  std::optional<std::string> error;
};
std::vector<AblationRow> run_ablation(const BenchmarkConfig& config);
nlohmann::json ablation_to_json(std::span<const AblationRow> rows,
                                bool include_timing = true);

// Writes the report JSON to `path` and curves next to it as
// `<stem>.curves.csv`.
void write_report(const SweepReport& report, const std::string& path);
std::string curves_path_for(const std::string& report_path);

}  // namespace modelsel
