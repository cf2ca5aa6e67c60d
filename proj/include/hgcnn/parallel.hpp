#pragma once

#include <cstddef>
#include <functional>

namespace hgcnn {

/// Process-wide worker count. 0 means "not set yet": the first query resolves
/// it from HGCNN_THREADS, defaulting to 1.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker. Each index is processed exactly once and writes only to its own
/// slot, so results are identical for any thread count; callers that reduce
/// must do so in index order after the loop returns.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hgcnn
