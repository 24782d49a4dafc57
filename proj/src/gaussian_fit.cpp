#include "chronocal/gaussian_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace chronocal {
namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Weight floor for sections where the model is essentially zero.
constexpr double kWeightFloor = 1e-3;
constexpr double kLambdaMax = 1e16;

enum Param { kA = 0, kMu = 1, kSigma = 2, kB = 3 };

double model(const Vec4& p, double t) {
  const double z = (t - p[kMu]) / p[kSigma];
  return p[kA] * std::exp(-0.5 * z * z) + p[kB];
}

double poisson_nll(const Vec4& p, const std::vector<double>& t, const std::vector<double>& y) {
  double nll = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = std::max(model(p, t[i]), 1e-300);
    nll += f - (y[i] > 0.0 ? y[i] * std::log(f) : 0.0);
  }
  return nll;
}

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

}  // namespace

GaussianFit fit_gaussian(const CoincidenceHistogram& hist, std::uint64_t min_counts,
                         const GaussianFitOptions& options) {
  GaussianFit fit;
  const std::size_t n = hist.counts.size();
  for (auto c : hist.counts) fit.total_counts += c;
  if (n < 5 || fit.total_counts == 0 || fit.total_counts < min_counts || hist.section_ps <= 0) {
    return fit;
  }

  std::vector<double> t(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = hist.section_center(i);
    y[i] = static_cast<double>(hist.counts[i]);
  }
  const double h = static_cast<double>(hist.section_ps);
  const double lo_edge = static_cast<double>(hist.origin_ps);
  const double hi_edge = lo_edge + h * static_cast<double>(n);

  const double b0 = median_of(y);
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double a0 = y[peak] - b0;
  if (a0 <= 0.0) return fit;

  // second moment of the contiguous excess around the peak
  std::size_t left = peak;
  std::size_t right = peak;
  while (left > 0 && y[left - 1] > b0) --left;
  while (right + 1 < n && y[right + 1] > b0) ++right;
  double sw = 0.0;
  double sm = 0.0;
  for (std::size_t i = left; i <= right; ++i) {
    sw += y[i] - b0;
    sm += (y[i] - b0) * (t[i] - t[peak]) * (t[i] - t[peak]);
  }
  double s0 = sw > 0.0 ? std::sqrt(sm / sw) : h / 2.0;
  s0 = std::clamp(s0, h / 2.0, (hi_edge - lo_edge) / 4.0);

  Vec4 p(a0, t[peak], s0, b0);
  double nll = poisson_nll(p, t, y);
  double lambda = 1e-3;

  std::vector<double> f(n);
  Eigen::Matrix<double, Eigen::Dynamic, 4> jac(n, 4);
  bool stop = false;
  int it = 0;
  for (; it < options.max_iterations && !stop; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (t[i] - p[kMu]) / p[kSigma];
      const double e = std::exp(-0.5 * z * z);
      f[i] = p[kA] * e + p[kB];
      jac(static_cast<Eigen::Index>(i), kA) = e;
      jac(static_cast<Eigen::Index>(i), kMu) = p[kA] * e * z / p[kSigma];
      jac(static_cast<Eigen::Index>(i), kSigma) = p[kA] * e * z * z / p[kSigma];
      jac(static_cast<Eigen::Index>(i), kB) = 1.0;
    }
    Mat4 hess = Mat4::Zero();
    Vec4 grad = Vec4::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = jac.row(static_cast<Eigen::Index>(i));
      const double w = 1.0 / std::max(f[i], kWeightFloor);
      hess.noalias() += w * row.transpose() * row;
      grad.noalias() += (w * (y[i] - f[i])) * row.transpose();
    }

    // Marquardt loop: raise damping until a step lowers the likelihood cost.
    for (;;) {
      Mat4 damped = hess;
      for (int k = 0; k < 4; ++k) damped(k, k) += lambda * (hess(k, k) + 1e-12);
      const Vec4 step = damped.ldlt().solve(grad);
      Vec4 trial = p + step;
      trial[kB] = std::max(trial[kB], 0.0);
      const bool valid = step.allFinite() && trial[kSigma] > 0.0 && trial[kA] > 0.0;
      const double trial_nll = valid ? poisson_nll(trial, t, y) : std::numeric_limits<double>::infinity();
      if (valid && trial_nll <= nll) {
        const Vec4 delta = trial - p;
        const Vec4 scale(std::abs(p[kA]), std::abs(p[kSigma]) + h, std::abs(p[kSigma]),
                         std::abs(p[kB]) + 1.0);
        p = trial;
        nll = trial_nll;
        lambda = std::max(lambda / 10.0, 1e-12);
        if ((delta.array().abs() / scale.array()).maxCoeff() < options.tolerance) stop = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > kLambdaMax) {
        // no descent direction left at this resolution: at the minimum
        stop = true;
        break;
      }
    }
  }

  fit.amplitude = p[kA];
  fit.mean_ps = p[kMu];
  fit.sigma_ps = p[kSigma];
  fit.baseline = p[kB];
  fit.iterations = it;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - model(p, t[i]);
    rss += r * r;
  }
  fit.rss = rss;
  fit.converged = p.allFinite() && p[kSigma] > 0.0 && p[kA] > 0.0 && p[kMu] >= lo_edge &&
                  p[kMu] <= hi_edge;
  return fit;
}

}  // namespace chronocal
