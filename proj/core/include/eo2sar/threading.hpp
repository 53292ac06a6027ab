#pragma once

#include <cstdint>
#include <functional>

namespace eo2sar {

// Worker cap for internal batch parallelism. Resolution order:
// set_max_threads() > EO2SAR_THREADS env var > hardware concurrency.
int max_threads();
void set_max_threads(int n);

// Runs body(i) for i in [0, n). Iterations must be independent; the
// helper only partitions the index range, so results cannot depend on
// the thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& body);

}  // namespace eo2sar
