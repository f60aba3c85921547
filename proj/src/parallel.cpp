#include "piplus/parallel.hpp"

#include <cstdlib>
#include <string>

namespace piplus {

int worker_count() {
  static const int cached = [] {
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("PIPLUS_THREADS")) {
      try {
        const int cap = std::stoi(env);
        if (cap >= 1 && cap < n) n = cap;
        if (cap >= 1 && n < 1) n = cap;
      } catch (...) {
        // ignore malformed values, keep the OpenMP default
      }
    }
    return n < 1 ? 1 : n;
  }();
  return cached;
}

}  // namespace piplus
