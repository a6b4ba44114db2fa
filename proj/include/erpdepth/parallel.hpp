#pragma once

namespace erpdepth {

// Number of worker threads used for per-pixel loops. Defaults to the
// ERPDEPTH_NUM_THREADS environment variable when set, otherwise the OpenMP
// runtime default (1 without OpenMP).
int thread_count();
void set_thread_count(int threads);

// Calls fn(row) for row in [0, rows). Rows may run concurrently; fn must
// only write to row-private output.
template <typename Fn>
void for_each_row(int rows, Fn&& fn) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
  for (int row = 0; row < rows; ++row) fn(row);
}

}  // namespace erpdepth
