#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace curvewave {

/// Worker count for OpenMP regions: jobs <= 0 means the runtime default.
inline int resolve_jobs(int jobs) {
#ifdef _OPENMP
  return jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
  return 1;
#endif
}

/// Serial reference kernels and their OpenMP twins take this switch.
enum class Exec { Serial, Parallel };

}  // namespace curvewave
