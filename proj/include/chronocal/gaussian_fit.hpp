#pragma once

#include <cstdint>

#include "chronocal/histogram.hpp"

namespace chronocal {

inline constexpr std::uint64_t kDefaultMinCounts = 100;

/// Peak model A * exp(-(t - mean)^2 / (2 sigma^2)) + baseline, evaluated at
/// section centers.
struct GaussianFit {
  double amplitude = 0.0;
  double mean_ps = 0.0;
  double sigma_ps = 0.0;
  double baseline = 0.0;
  std::uint64_t total_counts = 0;
  bool converged = false;
  /// Unweighted residual sum of squares at the solution.
  double rss = 0.0;
  int iterations = 0;
};

struct GaussianFitOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) with Poisson weights 1/model,
/// re-evaluated every iteration, so the fixed point is the Poisson maximum
/// likelihood estimate. Start: baseline = median count, mean and amplitude
/// from the highest section, sigma from the second moment above baseline.
/// Never throws for data problems: a histogram under min_counts, fewer than
/// five sections or a diverging iteration yields converged == false.
GaussianFit fit_gaussian(const CoincidenceHistogram& hist, std::uint64_t min_counts,
                         const GaussianFitOptions& options = {});

}  // namespace chronocal
