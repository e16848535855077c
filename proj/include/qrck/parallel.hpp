#pragma once

#include <cstddef>
#include <functional>

namespace qrck {

/// Worker count used when a call does not pass one explicitly. Initialized
/// from the QRCK_THREADS environment variable, else hardware concurrency.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
/// write results into per-index slots so the outcome does not depend on the
/// thread count. The first exception thrown by any worker is rethrown. Calls
/// made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace qrck
