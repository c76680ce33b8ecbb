#include "dcnn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcnn::kernels {

namespace {
Backend g_backend =
#ifdef _OPENMP
    Backend::Parallel;
#else
    Backend::Serial;
#endif
}  // namespace

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::Parallel && !parallel_available()) b = Backend::Serial;
  g_backend = b;
}

bool parallel_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return g_backend == Backend::Parallel ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

}  // namespace dcnn::kernels
