#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace piplus {

enum class ExecMode { kSerial, kParallel };

// Worker cap: PIPLUS_THREADS when set, otherwise the OpenMP default.
int worker_count();

// Runs body(i) for i in [0, n).  The parallel path requires that body only
// writes state addressed by its own index; under that contract both modes
// produce bit-identical results.
template <typename Body>
void parallel_for(std::size_t n, ExecMode mode, Body&& body) {
#ifdef _OPENMP
  if (mode == ExecMode::kParallel && n > 1) {
    const int workers = worker_count();
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace piplus
