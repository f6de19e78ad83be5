#pragma once

#include <cstddef>
#include <functional>

namespace shortscribe::util {

/// Runs fn(i) for i in [0, count) on at most `limit` threads (limit 0 or 1
/// means inline). The first exception thrown by any task is rethrown after
/// all workers have stopped; remaining tasks are skipped once one fails.
void parallel_for(std::size_t count, std::size_t limit, const std::function<void(std::size_t)>& fn);

}  // namespace shortscribe::util
