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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace modelsel {

struct MonteCarloConfig {
  std::size_t samples = 512;  // even; drawn as antithetic pairs
  std::uint64_t seed = 0;
};

// A samples x dims block of standard normals, rows n and n + samples/2 are
// negations of each other. Sharing one block across all supermodels of a
// query keeps their expected-max estimates mutually consistent.
class NormalDraws {
 public:
  NormalDraws() = default;
  NormalDraws(std::size_t samples, std::size_t dims, std::uint64_t seed);

  // Block for one query: stream derived from (global seed, query id).
  static NormalDraws for_query(const MonteCarloConfig& mc, std::size_t dims,
                               std::string_view query_id);

  std::size_t samples() const { return samples_; }
  std::size_t dims() const { return dims_; }
  double at(std::size_t row, std::size_t dim) const {
    return z_[row * dims_ + dim];
  }
  const double* row(std::size_t r) const { return z_.data() + r * dims_; }

 private:
  std::size_t samples_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> z_;
};

struct ExpectedMax {
  double value = 0.0;
  double std_error = 0.0;  // over antithetic pair averages
};

// One member of a max: a Gaussian N(mean, std^2) fed by column `dim` of the
// shared draws.
struct GaussianTerm {
  std::size_t dim = 0;
  double mean = 0.0;
  double std = 0.0;
};

// E[max_i N(mean_i, std_i^2)] with independent components, estimated on the
// shared draws. Exact max of the means when every std is zero.
ExpectedMax expected_max(std::span<const GaussianTerm> terms,
                         const NormalDraws& draws);

// Standalone form: draws a fresh block from mc.seed.
// Throws std::invalid_argument on length mismatch or negative std.
ExpectedMax expected_max(std::span<const double> means,
                         std::span<const double> stds,
                         const MonteCarloConfig& mc = {});

}  // namespace modelsel
