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

#include "modelsel/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "modelsel/budget.hpp"
#include "modelsel/cascading.hpp"
#include "modelsel/random.hpp"
#include "modelsel/routing.hpp"

namespace modelsel {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Seed salts for the harness's derived streams.
enum class HarnessSalt : std::uint64_t {
  kSplit = 101,
  kNoise = 102,
  kStrategy = 103,
  kSearch = 104,
};

std::uint64_t harness_seed(std::uint64_t seed, HarnessSalt salt,
                           std::initializer_list<std::uint64_t> extra = {}) {
  std::uint64_t s = derive_seed({seed, static_cast<std::uint64_t>(salt)});
  for (std::uint64_t e : extra) s = derive_seed({s, e});
  return s;
}

// Estimate column kinds in CSV order.
struct EstimateColumn {
  const char* prefix;
  bool quality;
  Regime regime;
  bool is_std;
};
constexpr EstimateColumn kEstimateColumns[] = {
    {"quality_before.", true, Regime::kBefore, false},
    {"quality_after.", true, Regime::kAfter, false},
    {"cost_before.", false, Regime::kBefore, false},
    {"cost_after.", false, Regime::kAfter, false},
    {"quality_before_std.", true, Regime::kBefore, true},
    {"quality_after_std.", true, Regime::kAfter, true},
    {"cost_before_std.", false, Regime::kBefore, true},
    {"cost_after_std.", false, Regime::kAfter, true},
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

// ---- CSV -------------------------------------------------------------------

CsvData parse_csv(std::istream& in, std::string_view source) {
  const std::string where(source);
  const auto fail = [&](std::size_t line, const std::string& msg) -> DataError {
    return DataError(where + ":" + std::to_string(line) + ": " + msg);
  };

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(where + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_fields(line);
  if (header.empty() || header[0] != "query_id") {
    throw fail(line_no, "first column must be query_id");
  }

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second) {
      throw fail(line_no, "duplicate column " + header[i]);
    }
  }
  std::vector<std::string> models;
  for (const std::string& h : header) {
    if (starts_with(h, "quality.")) models.push_back(h.substr(8));
  }
  if (models.empty()) throw fail(line_no, "no quality.<model> columns");
  std::vector<std::size_t> quality_col(models.size());
  std::vector<std::size_t> cost_col(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    quality_col[m] = column.at("quality." + models[m]);
    const auto it = column.find("cost." + models[m]);
    if (it == column.end()) {
      throw fail(line_no, "missing column cost." + models[m]);
    }
    cost_col[m] = it->second;
  }
  for (const std::string& h : header) {
    if (starts_with(h, "cost.") &&
        !column.count("quality." + h.substr(5))) {
      throw fail(line_no, "missing column quality." + h.substr(5));
    }
  }
  const auto split_it = column.find("split");

  // Estimate columns: each kind all-or-nothing; means all-or-nothing.
  std::vector<std::vector<std::optional<std::size_t>>> est_col(
      std::size(kEstimateColumns),
      std::vector<std::optional<std::size_t>>(models.size()));
  bool any_mean = false;
  bool all_means = true;
  for (std::size_t kind = 0; kind < std::size(kEstimateColumns); ++kind) {
    std::size_t found = 0;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto it =
          column.find(std::string(kEstimateColumns[kind].prefix) + models[m]);
      if (it != column.end()) {
        est_col[kind][m] = it->second;
        ++found;
      }
    }
    if (found != 0 && found != models.size()) {
      for (std::size_t m = 0; m < models.size(); ++m) {
        if (!est_col[kind][m]) {
          throw fail(line_no, std::string("missing column ") +
                                  kEstimateColumns[kind].prefix + models[m]);
        }
      }
    }
    if (!kEstimateColumns[kind].is_std) {
      any_mean = any_mean || found > 0;
      all_means = all_means && found == models.size();
    }
  }
  if (any_mean && !all_means) {
    for (std::size_t kind = 0; kind < 4; ++kind) {
      if (!est_col[kind][0]) {
        throw fail(line_no, std::string("missing column ") +
                                kEstimateColumns[kind].prefix + models[0]);
      }
    }
  }

  struct Row {
    std::vector<std::string> fields;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw fail(line_no, "expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw fail(line_no, "empty query_id");
    if (!seen.insert(fields[0]).second) {
      throw fail(line_no, "duplicate query_id " + fields[0]);
    }
    rows.push_back({std::move(fields), line_no});
  }

  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const Row& r : rows) ids.push_back(r.fields[0]);
  CsvData out{EstimateTable(std::move(ids), models), {}};

  const auto number = [&](const Row& r, std::size_t col) {
    const std::string& s = r.fields[col];
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != end ||
        !std::isfinite(v)) {
      throw fail(r.line, "non-numeric value '" + s + "' in column " +
                             header[col]);
    }
    return v;
  };

  for (std::size_t q = 0; q < rows.size(); ++q) {
    const Row& r = rows[q];
    for (std::size_t m = 0; m < models.size(); ++m) {
      const double quality = number(r, quality_col[m]);
      const double cost = number(r, cost_col[m]);
      if (cost < 0.0) throw fail(r.line, "negative cost for " + models[m]);
      out.table.set_truth(q, ModelId{m}, quality, cost);
      if (!all_means) continue;
      for (Regime regime : {Regime::kBefore, Regime::kAfter}) {
        const std::size_t off = regime == Regime::kBefore ? 0 : 1;
        Estimate qe{number(r, *est_col[off][m]), 0.0};
        Estimate ce{number(r, *est_col[2 + off][m]), 0.0};
        if (est_col[4 + off][m]) qe.std = number(r, *est_col[4 + off][m]);
        if (est_col[6 + off][m]) ce.std = number(r, *est_col[6 + off][m]);
        if (qe.std < 0.0 || ce.std < 0.0) {
          throw fail(r.line, "negative estimate std for " + models[m]);
        }
        out.table.set_estimates(q, ModelId{m}, regime, qe, ce);
      }
    }
    if (split_it != column.end()) {
      out.splits.push_back(r.fields[split_it->second]);
    }
  }
  return out;
}

CsvData load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_csv(in, path);
}

void write_csv(std::ostream& out, const EstimateTable& table,
               std::span<const std::string> splits) {
  const std::size_t k = table.num_models();
  const auto& names = table.model_names();
  const bool with_split = !splits.empty();
  if (with_split && splits.size() != table.num_queries()) {
    throw std::invalid_argument("one split label per query required");
  }
  out << "query_id";
  if (with_split) out << ",split";
  for (std::size_t m = 0; m < k; ++m) {
    out << ",quality." << csv_field(names[m]) << ",cost." << csv_field(names[m]);
  }
  if (table.has_estimates()) {
    for (const EstimateColumn& c : kEstimateColumns) {
      for (std::size_t m = 0; m < k; ++m) out << ',' << c.prefix << names[m];
    }
  }
  out << '\n';
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    out << csv_field(table.query_ids()[q]);
    if (with_split) out << ',' << csv_field(splits[q]);
    for (std::size_t m = 0; m < k; ++m) {
      out << ',' << format_double(table.true_quality(q, ModelId{m})) << ','
          << format_double(table.true_cost(q, ModelId{m}));
    }
    if (table.has_estimates()) {
      for (const EstimateColumn& c : kEstimateColumns) {
        for (std::size_t m = 0; m < k; ++m) {
          const Estimate& e = c.quality ? table.quality(q, ModelId{m}, c.regime)
                                        : table.cost(q, ModelId{m}, c.regime);
          out << ',' << format_double(c.is_std ? e.std : e.mean);
        }
      }
    }
    out << '\n';
  }
}

// ---- splits, budgets, metrics ------------------------------------------------

DataSplit split_dataset(std::size_t n, const std::array<double, 3>& fractions,
                        std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("split fractions must be > 0");
    total += f;
  }
  if (total > 1.0 + 1e-9) {
    throw std::invalid_argument("split fractions must sum to <= 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates on counter-based draws, portable across standard libraries.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t r = mix64(derive_seed({seed, i}));
    std::swap(order[i - 1], order[r % i]);
  }
  std::array<std::size_t, 3> sizes{};
  for (std::size_t i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(
        std::floor(fractions[i] * static_cast<double>(n) + 1e-9));
  }
  if (total >= 1.0 - 1e-9 && sizes[0] + sizes[1] <= n) {
    sizes[2] = n - sizes[0] - sizes[1];
  }
  if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
    throw std::invalid_argument("split produced an empty slice");
  }
  DataSplit out;
  auto it = order.begin();
  out.train.assign(it, it + sizes[0]);
  it += sizes[0];
  out.validation.assign(it, it + sizes[1]);
  it += sizes[1];
  out.test.assign(it, it + sizes[2]);
  return out;
}

DataSplit split_from_labels(std::span<const std::string> labels) {
  DataSplit out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& l = labels[i];
    if (l == "train") {
      out.train.push_back(i);
    } else if (l == "validation") {
      out.validation.push_back(i);
    } else if (l == "test") {
      out.test.push_back(i);
    } else {
      throw DataError("unknown split label '" + l + "' for row " +
                      std::to_string(i + 1));
    }
  }
  if (out.train.empty() || out.validation.empty() || out.test.empty()) {
    throw DataError("split column leaves an empty slice");
  }
  return out;
}

namespace {

Evaluation single_model(const EstimateTable& table, std::size_t q, ModelId m) {
  DecisionTrace t;
  t.executed = {m};
  t.answer_model = m;
  realize(table, q, t);
  return {t.realized_quality, t.realized_cost};
}

}  // namespace

std::vector<double> mean_model_costs(const EstimateTable& table) {
  std::vector<double> out(table.num_models(), 0.0);
  const std::size_t n = table.num_queries();
  if (n == 0) throw std::invalid_argument("table has no queries");
  for (std::size_t m = 0; m < out.size(); ++m) {
    for (std::size_t q = 0; q < n; ++q) {
      out[m] += single_model(table, q, ModelId{m}).cost;
    }
    out[m] /= static_cast<double>(n);
  }
  return out;
}

std::vector<double> mean_model_qualities(const EstimateTable& table) {
  std::vector<double> out(table.num_models(), 0.0);
  const std::size_t n = table.num_queries();
  if (n == 0) throw std::invalid_argument("table has no queries");
  for (std::size_t m = 0; m < out.size(); ++m) {
    for (std::size_t q = 0; q < n; ++q) {
      out[m] += single_model(table, q, ModelId{m}).quality;
    }
    out[m] /= static_cast<double>(n);
  }
  return out;
}

std::vector<double> budget_grid(const EstimateTable& table,
                                std::size_t points) {
  if (points < 1) throw std::invalid_argument("budget grid needs points >= 1");
  const std::vector<double> costs = mean_model_costs(table);
  const double lo = *std::min_element(costs.begin(), costs.end());
  const double hi = *std::max_element(costs.begin(), costs.end());
  if (points == 1 || costs.size() == 1 || !(hi > lo)) return {lo};
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                       static_cast<double>(points - 1);
  }
  grid.back() = hi;
  return grid;
}

double auc(std::vector<CostQuality> points) {
  std::sort(points.begin(), points.end(),
            [](const CostQuality& a, const CostQuality& b) {
              return a.cost < b.cost;
            });
  std::vector<CostQuality> merged;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < points.size() && points[j].cost == points[i].cost) {
      sum += points[j].quality;
      ++j;
    }
    merged.push_back({points[i].cost, sum / static_cast<double>(j - i)});
    i = j;
  }
  if (merged.size() < 2) {
    throw std::invalid_argument("AUC needs at least two distinct costs");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    area += 0.5 * (merged[i].quality + merged[i - 1].quality) *
            (merged[i].cost - merged[i - 1].cost);
  }
  return area / (merged.back().cost - merged.front().cost);
}

std::vector<FrontierPoint> pareto_frontier(const EstimateTable& table) {
  const std::vector<double> costs = mean_model_costs(table);
  const std::vector<double> qualities = mean_model_qualities(table);
  std::vector<FrontierPoint> all;
  for (std::size_t m = 0; m < costs.size(); ++m) {
    all.push_back({ModelId{m}, costs[m], qualities[m]});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const FrontierPoint& a, const FrontierPoint& b) {
                     if (a.cost != b.cost) return a.cost < b.cost;
                     return a.quality > b.quality;
                   });
  std::vector<FrontierPoint> frontier;
  for (const FrontierPoint& p : all) {
    if (frontier.empty() || p.quality > frontier.back().quality) {
      if (!frontier.empty() && frontier.back().cost == p.cost) continue;
      frontier.push_back(p);
    }
  }
  return frontier;
}

InterpMix linear_interp_mix(std::span<const FrontierPoint> frontier,
                            double budget) {
  if (frontier.empty()) throw std::invalid_argument("empty frontier");
  if (budget <= frontier.front().cost) {
    return {frontier.front().model, frontier.front().model, 0.0};
  }
  if (budget >= frontier.back().cost) {
    return {frontier.back().model, frontier.back().model, 0.0};
  }
  for (std::size_t i = 0; i + 1 < frontier.size(); ++i) {
    const FrontierPoint& a = frontier[i];
    const FrontierPoint& b = frontier[i + 1];
    if (budget <= b.cost) {
      return {a.model, b.model, (budget - a.cost) / (b.cost - a.cost)};
    }
  }
  return {frontier.back().model, frontier.back().model, 0.0};
}

double linear_interp_baseline(const EstimateTable& table, double budget) {
  const std::vector<FrontierPoint> frontier = pareto_frontier(table);
  const std::vector<double> q = mean_model_qualities(table);
  const InterpMix mix = linear_interp_mix(frontier, budget);
  return (1.0 - mix.weight_high) * q[mix.low.index] +
         mix.weight_high * q[mix.high.index];
}

// ---- configuration ---------------------------------------------------------

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRouting:
      return "routing";
    case Strategy::kCascade:
      return "cascade";
    case Strategy::kCascadeRouting:
      return "cascade-routing";
    case Strategy::kThreshold:
      return "threshold";
    case Strategy::kLinearInterp:
      return "linear-interp";
  }
  return "routing";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kRouting, Strategy::kCascade,
                     Strategy::kCascadeRouting, Strategy::kThreshold,
                     Strategy::kLinearInterp}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

void BenchmarkConfig::validate() const {
  double total = 0.0;
  for (double f : splits) {
    if (!(f > 0.0)) throw std::invalid_argument("split fractions must be > 0");
    total += f;
  }
  if (total > 1.0 + 1e-9) {
    throw std::invalid_argument("split fractions must sum to <= 1");
  }
  if (budget_points < 2) {
    throw std::invalid_argument("budget_points must be >= 2");
  }
  if (strategies.empty()) throw std::invalid_argument("no strategies");
  if (mc_samples < 2 || mc_samples % 2 != 0) {
    throw std::invalid_argument("mc_samples must be even and >= 2");
  }
  noise.validate();
  search.validate();
  if (!csv_path) workload.validate();
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

WorkloadSpec workload_from_json(const json& j, std::uint64_t default_seed) {
  check_keys(j,
             {"n_queries", "k", "topics", "min_cost", "max_cost", "base_costs",
              "skills", "skill_low", "skill_high", "expertise",
              "difficulty_spread", "quality_noise", "length_spread",
              "binary_quality", "seed"},
             "data.workload");
  WorkloadSpec w;
  w.seed = default_seed;
  read(j, "n_queries", w.n_queries);
  read(j, "k", w.k);
  read(j, "topics", w.topics);
  read(j, "min_cost", w.min_cost);
  read(j, "max_cost", w.max_cost);
  read(j, "base_costs", w.base_costs);
  read(j, "skills", w.skills);
  read(j, "skill_low", w.skill_low);
  read(j, "skill_high", w.skill_high);
  read(j, "expertise", w.expertise);
  read(j, "difficulty_spread", w.difficulty_spread);
  read(j, "quality_noise", w.quality_noise);
  read(j, "length_spread", w.length_spread);
  read(j, "binary_quality", w.binary_quality);
  read(j, "seed", w.seed);
  return w;
}

json workload_to_json(const WorkloadSpec& w) {
  return json{{"n_queries", w.n_queries},
              {"k", w.k},
              {"topics", w.topics},
              {"min_cost", w.min_cost},
              {"max_cost", w.max_cost},
              {"base_costs", w.base_costs},
              {"skills", w.skills},
              {"skill_low", w.skill_low},
              {"skill_high", w.skill_high},
              {"expertise", w.expertise},
              {"difficulty_spread", w.difficulty_spread},
              {"quality_noise", w.quality_noise},
              {"length_spread", w.length_spread},
              {"binary_quality", w.binary_quality},
              {"seed", w.seed}};
}

}  // namespace

BenchmarkConfig BenchmarkConfig::from_json(const json& j) {
  try {
    check_keys(j,
               {"data", "noise", "splits", "budget_points", "strategies",
                "variant", "seed", "search", "mc_samples"},
               "config");
    BenchmarkConfig c;
    read(j, "seed", c.seed);
    if (j.contains("data")) {
      const json& d = j.at("data");
      check_keys(d, {"csv", "workload"}, "data");
      if (d.contains("csv") == d.contains("workload")) {
        throw std::invalid_argument("data needs exactly one of csv, workload");
      }
      if (d.contains("csv")) {
        c.csv_path = d.at("csv").get<std::string>();
      } else {
        c.workload = workload_from_json(d.at("workload"), c.seed);
      }
    } else {
      c.workload.seed = c.seed;
    }
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      if (n.is_string()) {
        const std::string label = n.get<std::string>();
        if (label == "provided") {
          c.provided_estimates = true;
        } else {
          c.noise = NoiseSpec::preset(label);
        }
        c.noise_label = label;
      } else {
        check_keys(n,
                   {"quality_before", "quality_after", "cost_before",
                    "cost_after"},
                   "noise");
        c.noise = {};
        read(n, "quality_before", c.noise.quality_before);
        read(n, "quality_after", c.noise.quality_after);
        read(n, "cost_before", c.noise.cost_before);
        read(n, "cost_after", c.noise.cost_after);
        c.noise_label = "custom";
      }
    }
    if (j.contains("splits")) {
      const auto v = j.at("splits").get<std::vector<double>>();
      if (v.size() != 3) throw std::invalid_argument("splits needs 3 fractions");
      c.splits = {v[0], v[1], v[2]};
    }
    read(j, "budget_points", c.budget_points);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) {
        c.strategies.push_back(parse_strategy(s.get<std::string>()));
      }
    }
    if (j.contains("variant")) {
      c.variant = parse_variant(j.at("variant").get<std::string>());
    }
    if (j.contains("search")) {
      const json& s = j.at("search");
      check_keys(s,
                 {"max_evals", "lambda_log_scale", "gamma_scale",
                  "threshold_scale"},
                 "search");
      read(s, "max_evals", c.search.max_evals);
      read(s, "lambda_log_scale", c.search.lambda_log_scale);
      read(s, "gamma_scale", c.search.gamma_scale);
      read(s, "threshold_scale", c.search.threshold_scale);
    }
    read(j, "mc_samples", c.mc_samples);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

json BenchmarkConfig::to_json() const {
  json j;
  if (csv_path) {
    j["data"] = {{"csv", *csv_path}};
  } else {
    j["data"] = {{"workload", workload_to_json(workload)}};
  }
  if (provided_estimates) {
    j["noise"] = "provided";
  } else {
    j["noise"] = {{"quality_before", noise.quality_before},
                  {"quality_after", noise.quality_after},
                  {"cost_before", noise.cost_before},
                  {"cost_after", noise.cost_after}};
  }
  j["splits"] = splits;
  j["budget_points"] = budget_points;
  json names = json::array();
  for (Strategy s : strategies) names.push_back(std::string(to_string(s)));
  j["strategies"] = names;
  j["variant"] = std::string(to_string(variant));
  j["seed"] = seed;
  j["search"] = {{"max_evals", search.max_evals},
                 {"lambda_log_scale", search.lambda_log_scale},
                 {"gamma_scale", search.gamma_scale},
                 {"threshold_scale", search.threshold_scale}};
  j["mc_samples"] = mc_samples;
  return j;
}

BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return BenchmarkConfig::from_json(j);
}

PreparedData prepare_data(const BenchmarkConfig& config) {
  config.validate();
  CsvData data;
  if (config.csv_path) {
    data = load_csv(*config.csv_path);
  } else {
    data.table = generate_workload(config.workload);
  }
  EstimateTable& table = data.table;
  if (table.num_queries() < 3) throw DataError("need at least three queries");

  DataSplit split;
  if (!data.splits.empty()) {
    split = split_from_labels(data.splits);
  } else {
    try {
      split = split_dataset(table.num_queries(), config.splits,
                            harness_seed(config.seed, HarnessSalt::kSplit));
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
  }
  if (split.validation.size() < 2) {
    throw DataError("validation split needs at least two queries");
  }

  if (config.provided_estimates) {
    if (!table.has_estimates()) {
      throw DataError("noise \"provided\" but the data has no estimate columns");
    }
  } else {
    table = simulate_estimates(table, config.noise,
                               harness_seed(config.seed, HarnessSalt::kNoise),
                               split.train);
  }

  // Chain order: ascending mean validation cost, ties by column order.
  const std::vector<double> costs =
      mean_model_costs(table.select_queries(split.validation));
  std::vector<std::size_t> order(table.num_models());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return costs[a] < costs[b];
  });
  table = table.reorder_models(order);

  PreparedData out{table, split, table.select_queries(split.validation),
                   table.select_queries(split.test)};
  return out;
}

// ---- fitting and evaluation ------------------------------------------------

json FittedStrategy::to_json() const {
  json j{{"strategy", std::string(to_string(strategy))},
         {"variant", std::string(to_string(variant))},
         {"budget", budget},
         {"clamped", clamped},
         {"lambdas", params.lambdas},
         {"gamma", params.gamma},
         {"validation", {{"cost", validation.cost},
                         {"quality", validation.quality}}}};
  j["thresholds"] = params.thresholds ? json(*params.thresholds) : json(nullptr);
  return j;
}

FittedStrategy FittedStrategy::from_json(const json& j) {
  try {
    check_keys(j,
               {"strategy", "variant", "budget", "clamped", "lambdas", "gamma",
                "thresholds", "validation"},
               "params");
    FittedStrategy f;
    f.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("variant")) {
      f.variant = parse_variant(j.at("variant").get<std::string>());
    }
    read(j, "budget", f.budget);
    read(j, "clamped", f.clamped);
    read(j, "lambdas", f.params.lambdas);
    read(j, "gamma", f.params.gamma);
    if (j.contains("thresholds") && !j.at("thresholds").is_null()) {
      f.params.thresholds = j.at("thresholds").get<std::vector<double>>();
    }
    if (j.contains("validation")) {
      const json& v = j.at("validation");
      read(v, "cost", f.validation.cost);
      read(v, "quality", f.validation.quality);
    }
    return f;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("params: ") + e.what());
  }
}

StrategyRunner::StrategyRunner(const EstimateTable& validation,
                               const BenchmarkConfig& config)
    : validation_(validation),
      config_(config),
      sigma_(estimate_sigma(validation)),
      route_evaluators_(4) {}

namespace {

std::uint64_t strategy_seed(const BenchmarkConfig& config) {
  return harness_seed(config.seed, HarnessSalt::kStrategy);
}

CascadeOptions cascade_options(const BenchmarkConfig& config) {
  CascadeOptions o;
  o.mc_samples = config.mc_samples;
  o.seed = strategy_seed(config);
  o.search = config.search;
  return o;
}

CascadeRouteOptions route_options(const BenchmarkConfig& config,
                                  Variant variant) {
  CascadeRouteOptions o;
  o.variant = variant;
  o.mc_samples = config.mc_samples;
  o.seed = strategy_seed(config);
  o.search = config.search;
  return o;
}

bool is_budget_error(const std::invalid_argument& e) {
  return std::string_view(e.what()) == "budget below cheapest strategy";
}

// Expected realized outcome of the fitted routing mixture.
Evaluation router_realized(const EstimateTable& table, const FittedRouter& r) {
  Evaluation sum;
  const std::size_t n = table.num_queries();
  for (std::size_t q = 0; q < n; ++q) {
    const auto cands = routing_candidates(table, q);
    const auto lo = single_model(
        table, q, ModelId{argmax_tradeoff(cands, r.lambda_star, Pick::kMinCost)});
    const auto hi = single_model(
        table, q, ModelId{argmax_tradeoff(cands, r.lambda_star, Pick::kMaxCost)});
    sum.quality += r.gamma * lo.quality + (1.0 - r.gamma) * hi.quality;
    sum.cost += r.gamma * lo.cost + (1.0 - r.gamma) * hi.cost;
  }
  return {sum.quality / static_cast<double>(n), sum.cost / static_cast<double>(n)};
}

}  // namespace

FittedStrategy StrategyRunner::fit(Strategy strategy, double budget,
                                   Variant variant, std::uint64_t search_seed) {
  FittedStrategy out;
  out.strategy = strategy;
  out.variant = variant;
  out.budget = budget;
  const std::size_t k = validation_.num_models();
  SearchConfig search = config_.search;
  search.seed = search_seed;

  switch (strategy) {
    case Strategy::kLinearInterp: {
      const auto frontier = pareto_frontier(validation_);
      out.clamped = budget < frontier.front().cost;
      const InterpMix mix = linear_interp_mix(frontier, budget);
      const auto costs = mean_model_costs(validation_);
      const auto quals = mean_model_qualities(validation_);
      // lambdas record the two frontier models, gamma the weight of the low one.
      out.params.lambdas = {static_cast<double>(mix.low.index),
                            static_cast<double>(mix.high.index)};
      out.params.gamma = 1.0 - mix.weight_high;
      out.validation = {
          out.params.gamma * quals[mix.low.index] +
              mix.weight_high * quals[mix.high.index],
          out.params.gamma * costs[mix.low.index] +
              mix.weight_high * costs[mix.high.index]};
      return out;
    }
    case Strategy::kRouting: {
      const double floor = min_routing_cost(validation_);
      if (budget < floor) {
        out.budget = floor;
        out.clamped = true;
      }
      FittedRouter r = fit_router(validation_, out.budget);
      Evaluation realized = router_realized(validation_, r);
      if (!within_budget(realized.cost, out.budget)) {
        // Estimated costs undershoot the truth here. Tighten the budget the
        // router is fitted to until its realized validation cost fits.
        double lo = floor;
        double hi = out.budget;
        FittedRouter best = fit_router(validation_, lo);
        Evaluation best_realized = router_realized(validation_, best);
        for (int i = 0; i < 40 && hi - lo > 1e-12 * hi; ++i) {
          const double mid = 0.5 * (lo + hi);
          const FittedRouter trial = fit_router(validation_, mid);
          const Evaluation e = router_realized(validation_, trial);
          if (within_budget(e.cost, out.budget)) {
            lo = mid;
            best = trial;
            best_realized = e;
          } else {
            hi = mid;
          }
        }
        r = best;
        realized = best_realized;
      }
      out.params.lambdas = {r.lambda_star};
      out.params.gamma = r.gamma;
      out.validation = realized;
      return out;
    }
    case Strategy::kThreshold: {
      const double floor = mean_model_costs(validation_)[0];
      if (budget < floor) {
        out.budget = floor;
        out.clamped = true;
      }
      CascadeOptions o = cascade_options(config_);
      o.search = search;
      const FittedThresholds t = fit_threshold_cascade(validation_, out.budget, o);
      out.params.lambdas.assign(k, 0.0);
      out.params.thresholds = t.thresholds;
      out.validation = t.validation;
      return out;
    }
    case Strategy::kCascade:
    case Strategy::kCascadeRouting: {
      Objective objective;
      if (strategy == Strategy::kCascade) {
        if (!cascade_evaluator_) {
          cascade_evaluator_.emplace(validation_, sigma_,
                                     cascade_options(config_));
        }
        const CascadeEvaluator* e = &*cascade_evaluator_;
        objective = [e](const StrategyParams& p) { return e->evaluate(p); };
      } else {
        auto& slot = route_evaluators_[static_cast<std::size_t>(variant)];
        if (!slot) slot.emplace(validation_, sigma_, route_options(config_, variant));
        const CascadeRouteEvaluator* e = &*slot;
        objective = [e](const StrategyParams& p) { return e->evaluate(p); };
      }
      StrategyParams cheapest;
      cheapest.lambdas.assign(k, kLambdaCap);
      cheapest.gamma = 1.0;
      const double floor = objective(cheapest).cost;
      if (!within_budget(floor, budget)) {
        out.budget = floor;
        out.clamped = true;
      }
      try {
        TwoStageResult r = fit_two_stage(objective, k, out.budget, search, true,
                                         lambda_reference(validation_));
        out.params = std::move(r.params);
        out.validation = r.validation;
      } catch (const std::invalid_argument& e) {
        if (!is_budget_error(e)) throw;
        out.budget = floor;
        out.clamped = true;
        TwoStageResult r = fit_two_stage(objective, k, out.budget, search, true,
                                         lambda_reference(validation_));
        out.params = std::move(r.params);
        out.validation = r.validation;
      }
      return out;
    }
  }
  throw std::logic_error("unhandled strategy");
}

TestOutcome StrategyRunner::evaluate(const FittedStrategy& fitted,
                                     const EstimateTable& test) const {
  using Clock = std::chrono::steady_clock;
  const std::size_t n = test.num_queries();
  if (n == 0) throw std::invalid_argument("empty test table");
  TestOutcome out;
  Evaluation sum;
  Clock::duration spent{};

  if (fitted.strategy == Strategy::kLinearInterp) {
    const auto costs = mean_model_costs(test);
    const auto quals = mean_model_qualities(test);
    const auto low = static_cast<std::size_t>(fitted.params.lambdas.at(0));
    const auto high = static_cast<std::size_t>(fitted.params.lambdas.at(1));
    const double g = fitted.params.gamma;
    out.test = {g * quals.at(low) + (1.0 - g) * quals.at(high),
                g * costs.at(low) + (1.0 - g) * costs.at(high)};
    return out;
  }

  const CascadeOptions copts = cascade_options(config_);
  const CascadeRouteOptions ropts = route_options(config_, fitted.variant);
  FittedRouter router;
  if (fitted.strategy == Strategy::kRouting) {
    router.lambda_star = fitted.params.lambdas.at(0);
    router.gamma = fitted.params.gamma;
  }
  for (std::size_t q = 0; q < n; ++q) {
    const auto start = Clock::now();
    DecisionTrace t;
    switch (fitted.strategy) {
      case Strategy::kRouting:
        t = run_router(test, q, router, copts.seed);
        break;
      case Strategy::kThreshold:
        t = threshold_cascade(test, q, *fitted.params.thresholds);
        break;
      case Strategy::kCascade:
        t = run_cascade(test, q, fitted.params, sigma_, copts);
        break;
      case Strategy::kCascadeRouting:
        t = run_cascade_route(test, q, fitted.params, sigma_, ropts);
        break;
      case Strategy::kLinearInterp:
        break;
    }
    spent += Clock::now() - start;
    sum.quality += t.realized_quality;
    sum.cost += t.realized_cost;
  }
  out.test = {sum.quality / static_cast<double>(n),
              sum.cost / static_cast<double>(n)};
  out.mean_decision_seconds =
      std::chrono::duration<double>(spent).count() / static_cast<double>(n);
  return out;
}

// ---- sweep report ----------------------------------------------------------

const StrategyCurve* SweepReport::find(std::string_view name) const {
  for (const StrategyCurve& c : strategies) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json SweepReport::to_json(bool include_timing) const {
  json curves = json::array();
  json timing = json::object();
  for (const StrategyCurve& c : strategies) {
    json points = json::array();
    for (const CurvePoint& p : c.points) {
      points.push_back({{"budget", p.budget},
                        {"cost", p.cost},
                        {"quality", p.quality},
                        {"validation_cost", p.validation_cost},
                        {"validation_quality", p.validation_quality},
                        {"clamped", p.clamped}});
    }
    curves.push_back({{"name", c.name},
                      {"variant", c.variant},
                      {"auc", c.auc ? json(*c.auc) : json(nullptr)},
                      {"error", c.error ? json(*c.error) : json(nullptr)},
                      {"points", points}});
    timing[c.name] = {{"mean_decision_seconds", c.mean_decision_seconds}};
  }
  json j{{"config", config},
         {"seed", seed},
         {"models", models},
         {"budgets", budgets},
         {"strategies", curves}};
  if (include_timing) j["timing"] = timing;
  return j;
}

SweepReport SweepReport::from_json(const json& j) {
  try {
    SweepReport r;
    r.config = j.at("config");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.models = j.at("models").get<std::vector<std::string>>();
    r.budgets = j.at("budgets").get<std::vector<double>>();
    for (const json& c : j.at("strategies")) {
      StrategyCurve curve;
      curve.name = c.at("name").get<std::string>();
      curve.variant = c.at("variant").get<std::string>();
      if (!c.at("auc").is_null()) curve.auc = c.at("auc").get<double>();
      if (!c.at("error").is_null()) curve.error = c.at("error").get<std::string>();
      for (const json& p : c.at("points")) {
        curve.points.push_back({p.at("budget").get<double>(),
                                p.at("cost").get<double>(),
                                p.at("quality").get<double>(),
                                p.at("validation_cost").get<double>(),
                                p.at("validation_quality").get<double>(),
                                p.at("clamped").get<bool>()});
      }
      if (j.contains("timing") && j.at("timing").contains(curve.name)) {
        curve.mean_decision_seconds = j.at("timing")
                                          .at(curve.name)
                                          .at("mean_decision_seconds")
                                          .get<double>();
      }
      r.strategies.push_back(std::move(curve));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
}

void SweepReport::write_curves_csv(std::ostream& out) const {
  out << "strategy,budget,cost,quality\n";
  for (const StrategyCurve& c : strategies) {
    for (const CurvePoint& p : c.points) {
      out << csv_field(c.name) << ',' << format_double(p.budget) << ','
          << format_double(p.cost) << ',' << format_double(p.quality) << '\n';
    }
  }
}

namespace {

StrategyCurve sweep_curve(StrategyRunner& runner, const PreparedData& data,
                          const BenchmarkConfig& config, Strategy strategy,
                          Variant variant, std::span<const double> budgets) {
  StrategyCurve curve;
  curve.name = std::string(to_string(strategy));
  curve.variant = strategy == Strategy::kCascadeRouting
                      ? std::string(to_string(variant))
                      : std::string();
  double seconds = 0.0;
  std::size_t timed = 0;
  try {
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      const std::uint64_t search_seed = harness_seed(
          config.seed, HarnessSalt::kSearch,
          {static_cast<std::uint64_t>(strategy), i});
      const FittedStrategy fitted =
          runner.fit(strategy, budgets[i], variant, search_seed);
      const TestOutcome outcome = runner.evaluate(fitted, data.test);
      curve.points.push_back({budgets[i], outcome.test.cost,
                              outcome.test.quality, fitted.validation.cost,
                              fitted.validation.quality, fitted.clamped});
      seconds += outcome.mean_decision_seconds;
      ++timed;
    }
    std::vector<CostQuality> xy;
    for (const CurvePoint& p : curve.points) xy.push_back({p.budget, p.quality});
    curve.auc = xy.size() >= 2 ? auc(xy) : xy.front().quality;
  } catch (const std::exception& e) {
    curve.error = e.what();
  }
  curve.mean_decision_seconds = timed ? seconds / static_cast<double>(timed) : 0.0;
  return curve;
}

}  // namespace

SweepReport run_sweep(const BenchmarkConfig& config) {
  const PreparedData data = prepare_data(config);
  SweepReport report;
  report.config = config.to_json();
  report.seed = config.seed;
  report.models = data.table.model_names();
  report.budgets = budget_grid(data.validation, config.budget_points);
  StrategyRunner runner(data.validation, config);
  for (Strategy s : config.strategies) {
    report.strategies.push_back(
        sweep_curve(runner, data, config, s, config.variant, report.budgets));
  }
  return report;
}

std::vector<AblationRow> run_ablation(const BenchmarkConfig& config) {
  const PreparedData data = prepare_data(config);
  const std::vector<double> budgets =
      budget_grid(data.validation, config.budget_points);
  StrategyRunner runner(data.validation, config);
  std::vector<AblationRow> rows;
  for (Variant v : {Variant::kDefault, Variant::kSlow, Variant::kGreedy,
                    Variant::kNoExpect}) {
    const StrategyCurve c = sweep_curve(runner, data, config,
                                        Strategy::kCascadeRouting, v, budgets);
    rows.push_back({std::string(to_string(v)), c.auc, c.mean_decision_seconds,
                    c.error});
  }
  return rows;
}

json ablation_to_json(std::span<const AblationRow> rows, bool include_timing) {
  json out = json::array();
  for (const AblationRow& r : rows) {
    json j{{"variant", r.variant},
           {"auc", r.auc ? json(*r.auc) : json(nullptr)},
           {"error", r.error ? json(*r.error) : json(nullptr)}};
    if (include_timing) j["mean_decision_seconds"] = r.mean_decision_seconds;
    out.push_back(j);
  }
  return out;
}

std::string curves_path_for(const std::string& report_path) {
  std::string stem = report_path;
  const std::string ext = ".json";
  if (stem.size() > ext.size() &&
      stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0) {
    stem.resize(stem.size() - ext.size());
  }
  return stem + ".curves.csv";
}

void write_report(const SweepReport& report, const std::string& path) {
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << report.to_json().dump(2) << '\n';
  }
  const std::string curves = curves_path_for(path);
  std::ofstream out(curves);
  if (!out) throw std::runtime_error("cannot write " + curves);
  report.write_curves_csv(out);
}

}  // namespace modelsel
