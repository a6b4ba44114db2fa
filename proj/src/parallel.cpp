#include "erpdepth/parallel.hpp"

#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace erpdepth {
namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("ERPDEPTH_NUM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int& thread_count_storage() {
  static int count = initial_thread_count();
  return count;
}

}  // namespace

int thread_count() { return thread_count_storage(); }

void set_thread_count(int threads) { thread_count_storage() = threads > 0 ? threads : 1; }

}  // namespace erpdepth
