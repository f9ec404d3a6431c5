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

#include <algorithm>
#include <cmath>

namespace modelsel {

// Feasibility test for an expected cost against budget B. The slack absorbs
// summation round-off only.
inline bool within_budget(double cost, double budget) {
  return cost <= budget + 1e-12 * std::max(1.0, std::abs(budget));
}

// Upper bracket for lambda searches.
inline constexpr double kLambdaCap = 18446744073709551616.0;  // 2^64

}  // namespace modelsel
