#include "chronocal/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace chronocal {

int configure_threads() {
  if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // ignore unparsable values, keep the OpenMP default
    }
  }
  return omp_get_max_threads();
}

}  // namespace chronocal
