#pragma once

#include <cstddef>
#include <functional>

namespace dbal {

// Worker count: DBAL_THREADS env var caps it, 0 or unset means all cores.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Work is handed out in dynamic chunks, so the
// body must only write to per-index state; under that contract results do not
// depend on the worker count. Exceptions from the body are rethrown (first
// one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dbal
