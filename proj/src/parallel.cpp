#include "cohadm/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef COHADM_HAVE_OPENMP
#include <omp.h>
#endif

namespace cohadm {

int worker_threads() {
#ifdef COHADM_HAVE_OPENMP
  static const int n = [] {
    const char* env = std::getenv("COHADM_THREADS");
    int requested = 0;
    if (env != nullptr) {
      try {
        requested = std::stoi(env);
      } catch (...) {
        requested = 0;
      }
    }
    return requested > 0 ? requested : omp_get_max_threads();
  }();
  return n;
#else
  return 1;
#endif
}

} // namespace cohadm
