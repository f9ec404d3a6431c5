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

#include "modelsel/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "modelsel/random.hpp"

namespace modelsel {

NoiseSpec NoiseSpec::preset(std::string_view name) {
  if (name == "low") return low();
  if (name == "medium") return medium();
  if (name == "high") return high();
  throw std::invalid_argument("unknown noise preset: " + std::string(name));
}

void NoiseSpec::validate() const {
  for (double s : {quality_before, quality_after, cost_before, cost_after}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("noise standard deviations must be >= 0");
    }
  }
}

void WorkloadSpec::validate() const {
  if (n_queries < 1) throw std::invalid_argument("n_queries must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > ModelSet::kMaxModels) throw std::invalid_argument("too many models");
  if (!base_costs.empty() && base_costs.size() != k) {
    throw std::invalid_argument("base_costs must have k entries");
  }
  if (!skills.empty() && skills.size() != k) {
    throw std::invalid_argument("skills must have k entries");
  }
  if (!(min_cost > 0.0) || !(max_cost >= min_cost)) {
    throw std::invalid_argument("cost range must satisfy 0 < min <= max");
  }
  for (double c : base_costs) {
    if (!(c >= 0.0)) throw std::invalid_argument("base costs must be >= 0");
  }
  if (difficulty_spread < 0.0 || quality_noise < 0.0 || length_spread < 0.0) {
    throw std::invalid_argument("workload spreads must be >= 0");
  }
}

namespace {

// Salts for the independent generator streams.
enum class Salt : std::uint64_t {
  kQueries = 11,
  kQualityNoise = 12,
  kBinary = 13,
  kSignal = 14,
};

std::mt19937_64 stream(std::uint64_t seed, Salt salt,
                       std::initializer_list<std::uint64_t> extra = {}) {
  std::uint64_t s = derive_seed({seed, static_cast<std::uint64_t>(salt)});
  for (std::uint64_t e : extra) s = derive_seed({s, e});
  return std::mt19937_64(s);
}

std::string padded_id(std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "q" + digits;
}

}  // namespace

EstimateTable generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  const std::size_t k = spec.k;
  const std::size_t topics = spec.topics == 0 ? k : spec.topics;

  std::vector<double> base = spec.base_costs;
  if (base.empty()) {
    base.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double t = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
      base[i] = spec.min_cost * std::pow(spec.max_cost / spec.min_cost, t);
    }
  }
  std::vector<double> skill = spec.skills;
  if (skill.empty()) {
    skill.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double t = k == 1 ? 1.0 : static_cast<double>(i) / (k - 1);
      skill[i] = spec.skill_low + t * (spec.skill_high - spec.skill_low);
    }
  }

  std::vector<std::string> ids(spec.n_queries);
  for (std::size_t q = 0; q < spec.n_queries; ++q) {
    ids[q] = padded_id(q, spec.n_queries);
  }
  std::vector<std::string> names(k);
  for (std::size_t i = 0; i < k; ++i) names[i] = "model_" + std::to_string(i);
  EstimateTable table(std::move(ids), std::move(names));

  std::mt19937_64 query_gen = stream(spec.seed, Salt::kQueries);
  std::mt19937_64 noise_gen = stream(spec.seed, Salt::kQualityNoise);
  std::mt19937_64 coin_gen = stream(spec.seed, Salt::kBinary);
  std::uniform_int_distribution<std::size_t> topic_dist(0, topics - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t q = 0; q < spec.n_queries; ++q) {
    const std::size_t topic = topic_dist(query_gen);
    const double difficulty = spec.difficulty_spread * normal(query_gen);
    const double length = std::exp(spec.length_spread * normal(query_gen));
    for (std::size_t i = 0; i < k; ++i) {
      const double bonus = i % topics == topic ? spec.expertise : 0.0;
      const double logit =
          skill[i] + bonus - difficulty + spec.quality_noise * normal(noise_gen);
      double quality = 1.0 / (1.0 + std::exp(-logit));
      if (spec.binary_quality) quality = unit(coin_gen) < quality ? 1.0 : 0.0;
      table.set_truth(q, ModelId{i}, std::clamp(quality, 0.0, 1.0),
                      base[i] * length);
    }
  }
  return table;
}

double LinearEstimator::predict(std::span<const double> features) const {
  if (features.size() != coefficients.size()) {
    throw std::invalid_argument("feature count mismatch");
  }
  double y = intercept;
  for (std::size_t i = 0; i < features.size(); ++i) {
    y += coefficients[i] * features[i];
  }
  return y;
}

LinearEstimator fit_linear_estimator(
    const std::vector<std::vector<double>>& features,
    std::span<const double> targets) {
  const std::size_t n = features.size();
  if (n < 2) throw std::invalid_argument("need at least two samples");
  if (targets.size() != n) {
    throw std::invalid_argument("features and targets differ in length");
  }
  const std::size_t p = features[0].size();
  if (p < 1) throw std::invalid_argument("need at least one feature");

  Eigen::MatrixXd x(n, p + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != p) throw std::invalid_argument("ragged features");
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) x(i, j + 1) = features[i][j];
    y(i) = targets[i];
  }

  LinearEstimator out;
  Eigen::VectorXd beta;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == static_cast<Eigen::Index>(p + 1)) {
    beta = qr.solve(y);
  } else {
    const Eigen::MatrixXd gram =
        x.transpose() * x +
        1e-8 * Eigen::MatrixXd::Identity(p + 1, p + 1);
    beta = gram.ldlt().solve(x.transpose() * y);
    out.ridge_fallback = true;
  }
  out.intercept = beta(0);
  out.coefficients.assign(beta.data() + 1, beta.data() + p + 1);
  const Eigen::VectorXd residual = y - x * beta;
  out.residual_std = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return out;
}

namespace {

struct UnivariateFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual_std = 0.0;
};

// Least squares of target on signal over rows; constant signal gives the
// mean predictor.
UnivariateFit fit_signal(const std::vector<double>& signal,
                         const std::vector<double>& target,
                         std::span<const std::size_t> rows) {
  const double n = static_cast<double>(rows.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t r : rows) {
    sx += signal[r];
    sy += target[r];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t r : rows) {
    sxx += (signal[r] - mx) * (signal[r] - mx);
    sxy += (signal[r] - mx) * (target[r] - my);
  }
  UnivariateFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t r : rows) {
    const double e = target[r] - (fit.intercept + fit.slope * signal[r]);
    ss += e * e;
  }
  fit.residual_std = std::sqrt(ss / n);
  return fit;
}

}  // namespace

EstimateTable simulate_estimates(const EstimateTable& truth,
                                 const NoiseSpec& noise, std::uint64_t seed,
                                 std::span<const std::size_t> fit_rows) {
  noise.validate();
  if (!truth.has_truth()) {
    throw std::invalid_argument("simulation needs true quality and cost");
  }
  const std::size_t n = truth.num_queries();
  const std::size_t k = truth.num_models();
  std::vector<std::size_t> all_rows;
  if (fit_rows.empty()) {
    all_rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;
    fit_rows = all_rows;
  }
  if (fit_rows.empty()) throw std::invalid_argument("no rows to fit on");
  for (std::size_t r : fit_rows) {
    if (r >= n) throw std::out_of_range("fit row out of range");
  }

  EstimateTable out = truth;
  std::vector<double> q_true(n);
  std::vector<double> c_true(n);
  std::vector<double> signal(n);
  for (std::size_t m = 0; m < k; ++m) {
    const ModelId id{m};
    for (std::size_t q = 0; q < n; ++q) {
      q_true[q] = truth.true_quality(q, id);
      c_true[q] = truth.true_cost(q, id);
    }
    for (const Regime regime : {Regime::kBefore, Regime::kAfter}) {
      const bool before = regime == Regime::kBefore;
      const double q_sigma = before ? noise.quality_before : noise.quality_after;
      const double c_sigma = before ? noise.cost_before : noise.cost_after;
      const auto r = static_cast<std::uint64_t>(regime);

      std::normal_distribution<double> normal(0.0, 1.0);
      std::mt19937_64 q_gen = stream(seed, Salt::kSignal, {m, r, 0});
      for (std::size_t q = 0; q < n; ++q) {
        signal[q] = q_true[q] + q_sigma * normal(q_gen);
      }
      const UnivariateFit q_fit = fit_signal(signal, q_true, fit_rows);
      std::vector<double> q_mean(n);
      for (std::size_t q = 0; q < n; ++q) {
        q_mean[q] = q_fit.intercept + q_fit.slope * signal[q];
      }

      std::mt19937_64 c_gen = stream(seed, Salt::kSignal, {m, r, 1});
      normal.reset();
      for (std::size_t q = 0; q < n; ++q) {
        signal[q] = c_true[q] + c_sigma * normal(c_gen);
      }
      const UnivariateFit c_fit = fit_signal(signal, c_true, fit_rows);
      for (std::size_t q = 0; q < n; ++q) {
        out.set_estimates(
            q, id, regime, {q_mean[q], q_fit.residual_std},
            {c_fit.intercept + c_fit.slope * signal[q], c_fit.residual_std});
      }
    }
  }
  return out;
}

}  // namespace modelsel
