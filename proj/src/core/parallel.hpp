#pragma once

#include <cstddef>
#include <functional>

namespace patchflow {

/// Process-wide worker count used by the quadrature loops. Results never
/// depend on it: work is split over targets and each target is reduced in a
/// fixed order.
void set_thread_count(int threads);
int thread_count();

/// Calls body(begin, end) over a static partition of [0, count).
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace patchflow
