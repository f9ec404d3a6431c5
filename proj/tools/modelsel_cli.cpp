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

// Command-line front end: generate, sweep, fit, evaluate, ablate.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "modelsel/harness.hpp"

namespace {

using modelsel::BenchmarkConfig;
using nlohmann::json;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::vector<std::string> strategies;
  std::string variant;
  std::optional<std::size_t> budget_points;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON benchmark config");
  cmd->add_option("--seed", f.seed, "Override the config seed");
  cmd->add_option("--output", f.output, "Output path (stdout when omitted)");
  cmd->add_option("--strategy", f.strategies,
                  "routing | cascade | cascade-routing | threshold | "
                  "linear-interp");
  cmd->add_option("--variant", f.variant,
                  "default | slow | greedy | no_expect");
  cmd->add_option("--budget-points", f.budget_points, "Budget grid size");
}

BenchmarkConfig build_config(const CommonFlags& f) {
  BenchmarkConfig c = f.config_path.empty() ? BenchmarkConfig{}
                                            : modelsel::load_config(f.config_path);
  if (f.seed) {
    // A seed override also reseeds a generated workload that followed the
    // config seed.
    if (!c.csv_path && c.workload.seed == c.seed) c.workload.seed = *f.seed;
    c.seed = *f.seed;
  }
  if (!f.strategies.empty()) {
    c.strategies.clear();
    for (const std::string& s : f.strategies) {
      c.strategies.push_back(modelsel::parse_strategy(s));
    }
  }
  if (!f.variant.empty()) c.variant = modelsel::parse_variant(f.variant);
  if (f.budget_points) c.budget_points = *f.budget_points;
  c.validate();
  if (!c.provided_estimates && !c.noise.after_sharper()) {
    std::cerr << "warning: noise '" << c.noise_label
              << "' is not sharper after a model runs; cascades gain little\n";
  }
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int run_generate(const CommonFlags& f, bool with_estimates) {
  const BenchmarkConfig c = build_config(f);
  if (c.csv_path) throw std::invalid_argument("generate needs a workload config");
  std::ostringstream out;
  if (with_estimates) {
    const modelsel::PreparedData data = modelsel::prepare_data(c);
    std::vector<std::string> labels(data.table.num_queries());
    for (std::size_t r : data.split.train) labels[r] = "train";
    for (std::size_t r : data.split.validation) labels[r] = "validation";
    for (std::size_t r : data.split.test) labels[r] = "test";
    modelsel::write_csv(out, data.table, labels);
  } else {
    modelsel::write_csv(out, modelsel::generate_workload(c.workload));
  }
  emit(f.output, out.str());
  return 0;
}

int run_sweep_cmd(const CommonFlags& f) {
  const BenchmarkConfig c = build_config(f);
  const modelsel::SweepReport report = modelsel::run_sweep(c);
  if (f.output.empty()) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    modelsel::write_report(report, f.output);
  }
  for (const auto& s : report.strategies) {
    std::cerr << s.name << (s.variant.empty() ? "" : "/" + s.variant) << ": ";
    if (s.auc) {
      std::cerr << "AUC " << *s.auc;
    } else {
      std::cerr << "failed: " << s.error.value_or("unknown error");
    }
    std::cerr << '\n';
  }
  return 0;
}

int run_fit(const CommonFlags& f, double budget) {
  const BenchmarkConfig c = build_config(f);
  if (c.strategies.size() != 1) {
    throw std::invalid_argument("fit needs exactly one --strategy");
  }
  const modelsel::PreparedData data = modelsel::prepare_data(c);
  modelsel::StrategyRunner runner(data.validation, c);
  const modelsel::FittedStrategy fitted =
      runner.fit(c.strategies[0], budget, c.variant, c.search.seed);
  emit(f.output, fitted.to_json().dump(2) + "\n");
  return 0;
}

int run_evaluate(const CommonFlags& f, const std::string& params_path) {
  const BenchmarkConfig c = build_config(f);
  std::ifstream in(params_path);
  if (!in) throw std::invalid_argument("cannot open params " + params_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("params " + params_path + ": " + e.what());
  }
  const modelsel::FittedStrategy fitted = modelsel::FittedStrategy::from_json(j);
  const modelsel::PreparedData data = modelsel::prepare_data(c);
  const modelsel::StrategyRunner runner(data.validation, c);
  const modelsel::TestOutcome outcome = runner.evaluate(fitted, data.test);
  const json result{{"strategy", std::string(modelsel::to_string(fitted.strategy))},
                    {"budget", fitted.budget},
                    {"test", {{"cost", outcome.test.cost},
                              {"quality", outcome.test.quality}}},
                    {"timing", {{"mean_decision_seconds",
                                 outcome.mean_decision_seconds}}}};
  emit(f.output, result.dump(2) + "\n");
  return 0;
}

int run_ablate(const CommonFlags& f) {
  const BenchmarkConfig c = build_config(f);
  const auto rows = modelsel::run_ablation(c);
  emit(f.output, json{{"config", c.to_json()},
                      {"variants", modelsel::ablation_to_json(rows)}}
                         .dump(2) +
                     "\n");
  std::cerr << "variant      AUC        ms/query\n";
  for (const auto& r : rows) {
    std::cerr << r.variant << std::string(13 - std::min<std::size_t>(12, r.variant.size()), ' ')
              << (r.auc ? std::to_string(*r.auc) : std::string("failed"))
              << "   " << r.mean_decision_seconds * 1e3 << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model selection benchmark: routing, cascading, cascade routing"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool with_estimates = false;
  double budget = 0.0;
  std::string params_path;

  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic workload as CSV");
  add_common(generate, flags);
  generate->add_flag("--with-estimates", with_estimates,
                     "Add simulated estimates and a split column");
  CLI::App* sweep = app.add_subcommand("sweep", "Run the full budget sweep");
  add_common(sweep, flags);
  CLI::App* fit = app.add_subcommand("fit", "Fit one strategy at one budget");
  add_common(fit, flags);
  fit->add_option("--budget", budget, "Average cost budget")->required();
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Evaluate fitted params on the test split");
  add_common(evaluate, flags);
  evaluate->add_option("--params", params_path, "Params JSON from fit")->required();
  CLI::App* ablate =
      app.add_subcommand("ablate", "Cascade routing variants: AUC and timing");
  add_common(ablate, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (generate->parsed()) return run_generate(flags, with_estimates);
    if (sweep->parsed()) return run_sweep_cmd(flags);
    if (fit->parsed()) return run_fit(flags, budget);
    if (evaluate->parsed()) return run_evaluate(flags, params_path);
    if (ablate->parsed()) return run_ablate(flags);
  } catch (const modelsel::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
