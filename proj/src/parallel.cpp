#include "adalista/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adalista {

int worker_threads() {
#ifdef _OPENMP
  static const int threads = [] {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("ADALISTA_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) n = cap;
    }
    return n;
  }();
  return threads;
#else
  return 1;
#endif
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const int threads = worker_threads();
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr failure;
  std::mutex guard;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
#endif
}

} // namespace adalista
