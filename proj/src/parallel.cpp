#include "skofbsde/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace skofbsde {

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int configure_workers_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("SKOFBSDE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) omp_set_num_threads(std::min(cap, omp_get_max_threads()));
    } catch (const std::exception&) {
      // Ignore malformed values; the OpenMP default stays in effect.
    }
  }
#endif
  return worker_count();
}

}  // namespace skofbsde
