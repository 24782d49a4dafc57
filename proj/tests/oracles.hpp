#pragma once

// Slow, obviously-correct reference implementations used only by tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <vector>

#include "chronocal/coincidence.hpp"
#include "chronocal/drift_profile.hpp"
#include "chronocal/events.hpp"
#include "chronocal/histogram.hpp"

namespace oracle {

using namespace chronocal;

inline std::vector<CoincidencePair> brute_force_coincidences(std::span<const ImagerEvent> imager,
                                                             std::span<const ReferenceEvent> ref,
                                                             std::int64_t window) {
  std::vector<CoincidencePair> out;
  for (const auto& e : imager) {
    for (const auto& r : ref) {
      const auto dt = static_cast<std::int64_t>(e.time_ps) - static_cast<std::int64_t>(r.time_ps);
      if (dt >= -window && dt <= window) out.push_back({e.pixel, e.tdc_code, dt});
    }
  }
  return out;
}

// Normal equations (X^T W X) a = X^T W y solved in quad precision by Gaussian
// elimination with partial pivoting.
inline std::array<double, 3> normal_equations_fit(std::span<const double> x,
                                                  std::span<const double> y,
                                                  std::span<const double> w, int degree) {
  using Q = __float128;
  const int n = degree + 1;
  Q m[3][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    Q pw[3] = {1, static_cast<Q>(x[i]), static_cast<Q>(x[i]) * static_cast<Q>(x[i])};
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) m[r][c] += static_cast<Q>(w[i]) * pw[r] * pw[c];
      m[r][n] += static_cast<Q>(w[i]) * pw[r] * static_cast<Q>(y[i]);
    }
  }
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r) {
      if ((m[r][k] < 0 ? -m[r][k] : m[r][k]) > (m[piv][k] < 0 ? -m[piv][k] : m[piv][k])) piv = r;
    }
    for (int c = 0; c <= n; ++c) std::swap(m[k][c], m[piv][c]);
    for (int r = k + 1; r < n; ++r) {
      const Q f = m[r][k] / m[k][k];
      for (int c = k; c <= n; ++c) m[r][c] -= f * m[k][c];
    }
  }
  std::array<double, 3> a{};
  Q sol[3] = {};
  for (int r = n - 1; r >= 0; --r) {
    Q s = m[r][n];
    for (int c = r + 1; c < n; ++c) s -= m[r][c] * sol[c];
    sol[r] = s / m[r][r];
    a[r] = static_cast<double>(sol[r]);
  }
  return a;
}

// Cumulative timing error by summing the per-code period errors.
inline double cumulative_drift(double bin_ps, double alpha, double beta, double skew,
                               std::uint32_t code) {
  long double d = skew;
  for (std::uint32_t k = 0; k < code; ++k) d += bin_ps * (alpha + beta * k);
  return static_cast<double>(d);
}

// Every pair lands in section floor((dt + W) / s), the last one closed.
inline HistogramSet direct_histograms(std::span<const CoincidencePair> pairs,
                                      const DetectorGeometry& g, std::uint32_t group_size,
                                      std::int64_t section, std::int64_t window) {
  HistogramSet set;
  set.geometry = g;
  set.layout = HistogramLayout::make(window, section, group_size);
  for (const auto& p : pairs) {
    if (p.dt_ps < -window || p.dt_ps > window) continue;
    auto idx = (p.dt_ps + window) / section;
    if (idx >= set.layout.n_sections) idx = set.layout.n_sections - 1;
    const HistogramKey key{g.linear(p.pixel), p.tdc_code / group_size};
    auto [it, fresh] = set.histograms.try_emplace(key);
    auto& h = it->second;
    if (fresh) {
      h.pixel = p.pixel;
      h.group = key.group;
      h.section_ps = section;
      h.origin_ps = -window;
      h.counts.assign(set.layout.n_sections, 0);
    }
    ++h.counts[static_cast<std::size_t>(idx)];
    ++h.total;
  }
  return set;
}

// Sorted random imager stream.
inline std::vector<ImagerEvent> random_imager(std::mt19937_64& rng, std::size_t n,
                                              const DetectorGeometry& g, std::uint64_t span_ps) {
  std::uniform_int_distribution<std::uint64_t> t(0, span_ps);
  std::uniform_int_distribution<std::uint32_t> r(0, g.rows - 1), c(0, g.cols - 1),
      code(0, g.n_codes - 1);
  std::vector<ImagerEvent> v(n);
  for (auto& e : v) {
    e.time_ps = t(rng);
    e.pixel = {r(rng), c(rng)};
    e.tdc_code = static_cast<std::uint16_t>(code(rng));
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return event_less(a, b); });
  return v;
}

inline std::vector<ReferenceEvent> random_reference(std::mt19937_64& rng, std::size_t n,
                                                    std::uint64_t span_ps) {
  std::uniform_int_distribution<std::uint64_t> t(0, span_ps);
  std::vector<ReferenceEvent> v(n);
  for (auto& e : v) e.time_ps = t(rng);
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.time_ps < b.time_ps; });
  return v;
}

// Histogram of A exp(-(t-mu)^2/2s^2) + B sampled at section centers.
inline CoincidenceHistogram gaussian_histogram(double a, double mu, double sigma, double b,
                                               std::int64_t section, std::int64_t origin,
                                               std::size_t n) {
  CoincidenceHistogram h;
  h.section_ps = section;
  h.origin_ps = origin;
  h.counts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = h.section_center(i);
    const double f = a * std::exp(-(t - mu) * (t - mu) / (2 * sigma * sigma)) + b;
    h.counts[i] = static_cast<std::uint64_t>(std::llround(f));
    h.total += h.counts[i];
  }
  return h;
}

// FWHM of uniform(width_a) * uniform(width_b) * N(0, sigma), by numerical
// convolution on a 0.5 ps grid.
inline double ideal_fwhm(double width_a, double width_b, double sigma) {
  const double step = 0.5;
  const double half = width_a + width_b + 10 * sigma;
  const auto n = static_cast<std::size_t>(2 * half / step) + 1;
  std::vector<double> dens(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -half + i * step;
    // uniform(a) * uniform(b) is a trapezoid; integrate it against the Gaussian
    double acc = 0;
    for (double u = -(width_a + width_b) / 2; u <= (width_a + width_b) / 2; u += step) {
      const double trap = std::max(0.0, std::min({1.0, ((width_a + width_b) / 2 - std::abs(u)) /
                                                           std::max(std::min(width_a, width_b), 1e-9)}));
      const double z = (x - u) / sigma;
      acc += trap * std::exp(-0.5 * z * z);
    }
    dens[i] = acc;
  }
  const auto peak = static_cast<std::size_t>(std::max_element(dens.begin(), dens.end()) - dens.begin());
  const double halfmax = dens[peak] / 2;
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && dens[lo] > halfmax) --lo;
  while (hi + 1 < n && dens[hi] > halfmax) ++hi;
  return (hi - lo) * step;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("chronocal_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
