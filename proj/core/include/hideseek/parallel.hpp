#pragma once

#include <cstddef>
#include <functional>

namespace hideseek {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is handed out
/// by index and every call writes only its own result slot, so the outcome
/// does not depend on the worker count. The first exception thrown by any
/// call is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace hideseek
