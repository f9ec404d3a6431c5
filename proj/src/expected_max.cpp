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

#include "modelsel/expected_max.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "modelsel/random.hpp"

namespace modelsel {

NormalDraws::NormalDraws(std::size_t samples, std::size_t dims,
                         std::uint64_t seed)
    : samples_(samples), dims_(dims), z_(samples * dims) {
  if (samples < 2 || samples % 2 != 0) {
    throw std::invalid_argument("Monte Carlo sample count must be even and >= 2");
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t half = samples / 2;
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double z = normal(gen);
      z_[r * dims + d] = z;
      z_[(r + half) * dims + d] = -z;
    }
  }
}

NormalDraws NormalDraws::for_query(const MonteCarloConfig& mc,
                                   std::size_t dims,
                                   std::string_view query_id) {
  return NormalDraws(
      mc.samples, dims,
      derive_seed({mc.seed, static_cast<std::uint64_t>(Stream::kMonteCarlo),
                   hash_id(query_id)}));
}

ExpectedMax expected_max(std::span<const GaussianTerm> terms,
                         const NormalDraws& draws) {
  if (terms.empty()) {
    throw std::invalid_argument("expected_max needs at least one term");
  }
  bool deterministic = true;
  double max_mean = -std::numeric_limits<double>::infinity();
  for (const GaussianTerm& t : terms) {
    if (t.std < 0.0) throw std::invalid_argument("std must be >= 0");
    if (t.dim >= draws.dims()) throw std::out_of_range("term dim out of range");
    deterministic = deterministic && t.std == 0.0;
    max_mean = std::max(max_mean, t.mean);
  }
  if (deterministic) return {max_mean, 0.0};
  if (terms.size() == 1) {
    // Antithetic pairs average to the mean exactly.
    return {terms[0].mean, 0.0};
  }

  const std::size_t half = draws.samples() / 2;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = 0; r < half; ++r) {
    const double* za = draws.row(r);
    const double* zb = draws.row(r + half);
    double ma = -std::numeric_limits<double>::infinity();
    double mb = ma;
    for (const GaussianTerm& t : terms) {
      ma = std::max(ma, t.mean + t.std * za[t.dim]);
      mb = std::max(mb, t.mean + t.std * zb[t.dim]);
    }
    const double pair = 0.5 * (ma + mb);
    sum += pair;
    sum_sq += pair * pair;
  }
  const double n = static_cast<double>(half);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / std::max(1.0, n - 1.0))};
}

ExpectedMax expected_max(std::span<const double> means,
                         std::span<const double> stds,
                         const MonteCarloConfig& mc) {
  if (means.size() != stds.size()) {
    throw std::invalid_argument("means and stds differ in length");
  }
  if (means.empty()) {
    throw std::invalid_argument("expected_max needs at least one term");
  }
  std::vector<GaussianTerm> terms(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    terms[i] = {i, means[i], stds[i]};
  }
  return expected_max(terms, NormalDraws(mc.samples, means.size(), mc.seed));
}

}  // namespace modelsel
