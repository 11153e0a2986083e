#pragma once

#include <cstddef>
#include <functional>

namespace nestplan {

/// Worker count used by the data-parallel loops. 0 means hardware concurrency.
void set_thread_count(std::size_t count);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// expected to be written to per-index slots so the outcome does not depend on
/// scheduling. Falls back to a plain loop below `grain` iterations.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t grain = 256);

}  // namespace nestplan
