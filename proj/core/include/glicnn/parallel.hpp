// Copyright 2026 The glicnn Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace glicnn {

// Number of worker threads used by parallel_for (GLICNN_THREADS env var,
// else hardware concurrency).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
// processed exactly once; callers write results into per-index slots and
// reduce afterwards in index order, so output does not depend on the
// thread count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// SplitMix64-based stream derivation for per-task seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace glicnn
