#include "feec/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace feec {

int worker_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("FEECPROJ_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return std::max(n, 1);
}

}  // namespace feec
