#include "twg/exec.hpp"

#include <omp.h>

namespace twg {

int resolve_workers(int worker_cap) {
  if (worker_cap > 0) return worker_cap;
  return omp_get_max_threads();
}

}  // namespace twg
