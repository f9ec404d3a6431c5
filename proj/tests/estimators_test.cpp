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

#include <cmath>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "modelsel/cascading.hpp"

namespace modelsel {
namespace {

double stddev(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / v.size());
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / a.size(), mb += b[i] / b.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(NoiseSpecTest, PresetsMatchRouterBenchLevels) {
  EXPECT_EQ(NoiseSpec::preset("low"), (NoiseSpec{0.6, 0.3, 0.0002, 0.00005}));
  EXPECT_EQ(NoiseSpec::preset("medium"), (NoiseSpec{1.6, 0.8, 0.0004, 0.0001}));
  EXPECT_EQ(NoiseSpec::preset("high"), (NoiseSpec{2.4, 1.2, 100.0, 100.0}));
  EXPECT_THROW(NoiseSpec::preset("extreme"), std::invalid_argument);
  EXPECT_TRUE(NoiseSpec::low().after_sharper());
  // High cost noise is 100 before and after; allowed, just not sharper.
  EXPECT_FALSE(NoiseSpec::high().after_sharper());
  EXPECT_NO_THROW(NoiseSpec::high().validate());
  EXPECT_THROW((NoiseSpec{-1.0, 0.0, 0.0, 0.0}).validate(), std::invalid_argument);
}

TEST(GenerateWorkloadTest, SingleModel) {
  WorkloadSpec spec;
  spec.k = 1;
  spec.n_queries = 20;
  const EstimateTable t = generate_workload(spec);
  EXPECT_EQ(t.num_models(), 1u);
  EXPECT_EQ(t.num_queries(), 20u);
  EXPECT_TRUE(t.has_truth());
}

TEST(GenerateWorkloadTest, ExpertiseVariesTheBestModel) {
  WorkloadSpec spec;
  spec.binary_quality = false;
  spec.seed = 4;
  const EstimateTable t = generate_workload(spec);
  std::set<std::size_t> best;
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    std::size_t arg = 0;
    for (std::size_t m = 1; m < t.num_models(); ++m) {
      if (t.true_quality(q, ModelId{m}) > t.true_quality(q, ModelId{arg})) arg = m;
    }
    best.insert(arg);
  }
  EXPECT_GE(best.size(), 2u);
}

TEST(GenerateWorkloadTest, DeterministicAndInRange) {
  WorkloadSpec spec;
  spec.n_queries = 200;
  spec.seed = 9;
  const EstimateTable a = generate_workload(spec);
  EXPECT_EQ(a, generate_workload(spec));
  spec.seed = 10;
  EXPECT_NE(a, generate_workload(spec));
  for (std::size_t q = 0; q < a.num_queries(); ++q) {
    for (std::size_t m = 0; m < a.num_models(); ++m) {
      const double quality = a.true_quality(q, ModelId{m});
      EXPECT_TRUE(quality == 0.0 || quality == 1.0);
      EXPECT_GT(a.true_cost(q, ModelId{m}), 0.0);
    }
  }
  spec.k = 0;
  EXPECT_THROW(generate_workload(spec), std::invalid_argument);
}

TEST(LinearEstimatorTest, ExactLine) {
  const std::vector<std::vector<double>> x{{0.0}, {1.0}, {2.0}, {5.0}};
  const std::vector<double> y{1.0, 3.0, 5.0, 11.0};
  const LinearEstimator e = fit_linear_estimator(x, y);
  EXPECT_NEAR(e.coefficients[0], 2.0, 1e-12);
  EXPECT_NEAR(e.intercept, 1.0, 1e-12);
  EXPECT_NEAR(e.residual_std, 0.0, 1e-12);
  EXPECT_FALSE(e.ridge_fallback);
  const std::vector<double> at{3.0};
  EXPECT_NEAR(e.predict(at), 7.0, 1e-12);
}

TEST(LinearEstimatorTest, ConstantTargets) {
  const std::vector<std::vector<double>> x{{0.0}, {1.0}, {4.0}};
  const std::vector<double> y{2.5, 2.5, 2.5};
  const LinearEstimator e = fit_linear_estimator(x, y);
  EXPECT_NEAR(e.coefficients[0], 0.0, 1e-12);
  EXPECT_NEAR(e.residual_std, 0.0, 1e-12);
}

TEST(LinearEstimatorTest, NoisyLineMatchesNormalEquations) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> x(100);
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    x[i] = {normal(gen), normal(gen)};
    y[i] = 0.3 + 1.7 * x[i][0] - 0.4 * x[i][1] + 0.5 * normal(gen);
  }
  // Normal equations (A^T A) b = A^T y with A = [1 x0 x1], by Cramer's rule.
  double m[3][3] = {}, r[3] = {};
  for (std::size_t i = 0; i < 100; ++i) {
    const double row[3] = {1.0, x[i][0], x[i][1]};
    for (int a = 0; a < 3; ++a) {
      r[a] += row[a] * y[i];
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
    }
  }
  const auto det = [](const double c[3][3]) {
    return c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) -
           c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0]) +
           c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
  };
  const double d = det(m);
  double beta[3];
  for (int col = 0; col < 3; ++col) {
    double c[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) c[a][b] = b == col ? r[a] : m[a][b];
    beta[col] = det(c) / d;
  }
  const LinearEstimator e = fit_linear_estimator(x, y);
  EXPECT_NEAR(e.intercept, beta[0], 1e-9);
  EXPECT_NEAR(e.coefficients[0], beta[1], 1e-9);
  EXPECT_NEAR(e.coefficients[1], beta[2], 1e-9);
  double ss = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double res = y[i] - e.predict(x[i]);
    ss += res * res;
  }
  EXPECT_NEAR(e.residual_std, std::sqrt(ss / 100), 1e-12);
}

TEST(LinearEstimatorTest, RankDeficientFallsBackToRidge) {
  const std::vector<std::vector<double>> x{{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}};
  const std::vector<double> y{1.0, 2.0, 3.0};
  const LinearEstimator e = fit_linear_estimator(x, y);
  EXPECT_TRUE(e.ridge_fallback);
  const std::vector<double> at{4.0, 8.0};
  EXPECT_NEAR(e.predict(at), 4.0, 1e-6);
}

TEST(LinearEstimatorTest, Errors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(fit_linear_estimator({{1.0}}, one), std::invalid_argument);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(fit_linear_estimator({{1.0}, {1.0, 2.0}}, two), std::invalid_argument);
  EXPECT_THROW(fit_linear_estimator({{}, {}}, two), std::invalid_argument);
}

EstimateTable workload(std::size_t n, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.n_queries = n;
  spec.seed = seed;
  return generate_workload(spec);
}

TEST(SimulateEstimatesTest, NoiselessRecoversTruth) {
  const EstimateTable truth = workload(300, 2);
  const EstimateTable t = simulate_estimates(truth, NoiseSpec{}, 3);
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    for (std::size_t m = 0; m < t.num_models(); ++m) {
      for (Regime r : {Regime::kBefore, Regime::kAfter}) {
        EXPECT_NEAR(t.quality(q, ModelId{m}, r).mean, truth.true_quality(q, ModelId{m}), 1e-9);
        EXPECT_NEAR(t.cost(q, ModelId{m}, r).mean, truth.true_cost(q, ModelId{m}), 1e-12);
        EXPECT_NEAR(t.quality(q, ModelId{m}, r).std, 0.0, 1e-9);
      }
    }
  }
}

TEST(SimulateEstimatesTest, ExactAfterRunWithoutAfterNoise) {
  const EstimateTable truth = workload(300, 5);
  const EstimateTable t = simulate_estimates(truth, {0.6, 0.0, 0.0002, 0.0}, 6);
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    for (std::size_t m = 0; m < t.num_models(); ++m) {
      EXPECT_NEAR(t.quality(q, ModelId{m}, Regime::kAfter).mean,
                  truth.true_quality(q, ModelId{m}), 1e-9);
    }
  }
}

TEST(SimulateEstimatesTest, LowNoiseAfterSharperThanBefore) {
  const EstimateTable t = simulate_estimates(workload(1000, 7), NoiseSpec::low(), 8);
  for (std::size_t m = 0; m < t.num_models(); ++m) {
    EXPECT_LT(t.quality(0, ModelId{m}, Regime::kAfter).std,
              t.quality(0, ModelId{m}, Regime::kBefore).std);
    EXPECT_LT(t.cost(0, ModelId{m}, Regime::kAfter).std,
              t.cost(0, ModelId{m}, Regime::kBefore).std);
  }
}

TEST(SimulateEstimatesTest, HighCostNoiseDestroysTheSignal) {
  const EstimateTable truth = workload(1000, 9);
  const EstimateTable t = simulate_estimates(truth, NoiseSpec::high(), 10);
  for (std::size_t m = 0; m < t.num_models(); ++m) {
    std::vector<double> est, actual;
    double mean = 0.0;
    for (std::size_t q = 0; q < t.num_queries(); ++q) {
      est.push_back(t.cost(q, ModelId{m}, Regime::kBefore).mean);
      actual.push_back(truth.true_cost(q, ModelId{m}));
      mean += actual.back() / t.num_queries();
    }
    EXPECT_LT(std::abs(correlation(est, actual)), 0.1);
    // Estimates hug the global mean cost.
    EXPECT_LT(stddev(est), 0.1 * mean);
  }
}

TEST(SimulateEstimatesTest, DeterministicUnderSeed) {
  const EstimateTable truth = workload(100, 11);
  EXPECT_EQ(simulate_estimates(truth, NoiseSpec::medium(), 1),
            simulate_estimates(truth, NoiseSpec::medium(), 1));
  EXPECT_NE(simulate_estimates(truth, NoiseSpec::medium(), 1),
            simulate_estimates(truth, NoiseSpec::medium(), 2));
}

TEST(SimulateEstimatesTest, FitsOnlyOnFitRows) {
  const EstimateTable truth = workload(100, 12);
  std::vector<std::size_t> rows(50);
  for (std::size_t i = 0; i < 50; ++i) rows[i] = i;
  const EstimateTable partial = simulate_estimates(truth, NoiseSpec::low(), 1, rows);
  const EstimateTable full = simulate_estimates(truth, NoiseSpec::low(), 1);
  EXPECT_NE(partial.quality(0, ModelId{0}, Regime::kBefore),
            full.quality(0, ModelId{0}, Regime::kBefore));
  const std::vector<std::size_t> bad{100};
  EXPECT_THROW(simulate_estimates(truth, NoiseSpec::low(), 1, bad), std::out_of_range);
}

TEST(SimulateEstimatesProperty, SigmaGrowsWithBeforeNoise) {
  WorkloadSpec spec;
  spec.n_queries = 500;
  spec.binary_quality = false;
  spec.seed = 13;
  const EstimateTable truth = generate_workload(spec);
  std::vector<double> previous(truth.num_models(), -1.0);
  for (double before : {0.05, 0.1, 0.2, 0.4}) {
    const EstimateTable t = simulate_estimates(truth, {before, 0.01, 0.0, 0.0}, 14);
    const SigmaTable sigma = estimate_sigma(t);
    for (std::size_t m = 0; m < truth.num_models(); ++m) {
      EXPECT_GT(sigma.at(ModelId{m}, 1), previous[m]);
      previous[m] = sigma.at(ModelId{m}, 1);
    }
  }
}

}  // namespace
}  // namespace modelsel
