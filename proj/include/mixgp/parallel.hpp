#pragma once

#include <cstddef>
#include <functional>

namespace mixgp {

/// Runs job(0..n-1) on up to `workers` threads. The first exception stops
/// further dispatch and is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job);

}  // namespace mixgp
