// Copyright 2026 The saefh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAE_PARALLEL_HPP_
#define SAE_PARALLEL_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sae {

// Worker cap: SAE_FH_THREADS when set to a positive integer, otherwise
// std::thread::hardware_concurrency() (at least 1).
int worker_threads();

// Runs fn(0) .. fn(n - 1) on up to worker_threads() threads. Calls made from
// inside a running parallel_for execute serially on the calling thread.
// If any call throws, the exception of the lowest failing index is rethrown
// after all workers finish. Callers write results by index, so the output is
// independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace sae

#endif  // SAE_PARALLEL_HPP_
