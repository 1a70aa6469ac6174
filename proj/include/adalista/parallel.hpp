#pragma once

#include <cstddef>
#include <functional>

namespace adalista {

/// Worker count: ADALISTA_THREADS when set (>= 1), otherwise the runtime
/// default. Always 1 when built without OpenMP.
int worker_threads();

/// Runs body(i) for i in [0, count). Iterations must not share mutable
/// state; callers that reduce results do so afterwards in index order so the
/// outcome does not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace adalista
