#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#include <omp.h>

namespace flowph::detail {

/// Thread count from FLOWPH_THREADS, falling back to the OpenMP default.
inline int thread_count() {
  if (const char* env = std::getenv("FLOWPH_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) return requested;
  }
  return omp_get_max_threads();
}

/// Runs body(i) for i in [0, n) on an OpenMP team. Each index writes only its
/// own output slot, so results are independent of scheduling. The first
/// exception thrown by any iteration is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count())
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
    try {
      body(static_cast<std::size_t>(s));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace flowph::detail
