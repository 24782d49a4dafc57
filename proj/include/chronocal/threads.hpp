#pragma once

namespace chronocal {

inline constexpr const char* kThreadsEnv = "CHRONOCAL_THREADS";

/// Applies CHRONOCAL_THREADS (a positive integer) as the OpenMP worker
/// count. Returns the count in effect.
int configure_threads();

}  // namespace chronocal
