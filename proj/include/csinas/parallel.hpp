// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

namespace csinas {

// Global worker count for data-parallel loops. 0 means "hardware concurrency".
void set_engine_threads(int n);
int engine_threads();

// Runs body(begin, end) over disjoint chunks of [0, n). Chunk boundaries are a
// pure function of (n, grain, worker count is NOT involved): workers pull whole
// chunks, and every chunk writes disjoint output, so results are identical for
// any thread count.
void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& body);

}  // namespace csinas
