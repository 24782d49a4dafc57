#include "chronocal/drift_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "chronocal/errors.hpp"

namespace chronocal {

double group_center(std::uint32_t group, std::uint32_t group_size) {
  return static_cast<double>(group) * group_size + (group_size - 1.0) / 2.0;
}

std::array<double, 3> weighted_polyfit(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> w, int degree) {
  if (degree < 0 || degree > 2) throw ConfigError("polynomial degree must be 0, 1 or 2");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (y.size() != x.size() || w.size() != x.size()) {
    throw ConfigError("weighted_polyfit: x, y and w sizes differ");
  }
  if (n < degree + 1) {
    throw InsufficientGroups("weighted_polyfit: need at least degree + 1 points",
                             static_cast<int>(n));
  }
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[static_cast<std::size_t>(i)]);
    double xp = 1.0;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = sw * xp;
      xp *= x[static_cast<std::size_t>(i)];
    }
    b(i) = sw * y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd sol = a.householderQr().solve(b);
  std::array<double, 3> coeffs{};
  for (int k = 0; k <= degree; ++k) coeffs[static_cast<std::size_t>(k)] = sol(k);
  return coeffs;
}

DriftModel estimate_drift(PixelId pixel, std::span<const GaussianFit> fits,
                          const DriftFitOptions& options, std::uint32_t n_codes) {
  if (options.degree < 0 || options.degree > 2) {
    throw ConfigError("polynomial degree must be 0, 1 or 2");
  }
  if (options.group_size < 1) throw ConfigError("group_size must be >= 1");

  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
  DriftModel model;
  model.pixel = pixel;
  model.degree = options.degree;
  std::uint32_t top_group = 0;
  for (std::size_t g = 0; g < fits.size(); ++g) {
    const auto& f = fits[g];
    if (!f.converged || f.total_counts < options.min_counts || f.total_counts == 0) continue;
    x.push_back(group_center(static_cast<std::uint32_t>(g), options.group_size));
    y.push_back(f.mean_ps);
    w.push_back(static_cast<double>(f.total_counts));
    model.total_counts += f.total_counts;
    top_group = static_cast<std::uint32_t>(g);
  }
  model.n_groups_used = static_cast<int>(x.size());
  if (model.n_groups_used < options.degree + 1) {
    throw InsufficientGroups("pixel (" + std::to_string(pixel.row) + "," +
                                 std::to_string(pixel.col) + "): " +
                                 std::to_string(model.n_groups_used) +
                                 " accepted groups, need " + std::to_string(options.degree + 1),
                             model.n_groups_used);
  }
  model.coeffs = weighted_polyfit(x, y, w, options.degree);
  const std::uint64_t top_code =
      (static_cast<std::uint64_t>(top_group) + 1) * options.group_size - 1;
  model.valid_code_max = static_cast<std::uint32_t>(std::min<std::uint64_t>(top_code, n_codes - 1));
  return model;
}

ReferencePolicy ReferencePolicy::parse(std::string_view text) {
  ReferencePolicy p;
  if (text == "weighted-mean") {
    p.kind = Kind::weighted_mean;
  } else if (text == "median") {
    p.kind = Kind::median;
  } else if (text.rfind("fixed:", 0) == 0) {
    p.kind = Kind::fixed;
    const std::string value(text.substr(6));
    std::size_t used = 0;
    try {
      p.fixed_ps = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw ConfigError("reference policy: bad fixed value '" + value + "'");
    }
  } else {
    throw ConfigError("unknown reference policy '" + std::string(text) +
                      "' (expected weighted-mean, median or fixed:PS)");
  }
  return p;
}

std::string ReferencePolicy::to_string() const {
  switch (kind) {
    case Kind::weighted_mean: return "weighted-mean";
    case Kind::median: return "median";
    case Kind::fixed: {
      std::ostringstream s;
      s.precision(17);
      s << "fixed:" << fixed_ps;
      return s.str();
    }
  }
  return "weighted-mean";
}

double choose_reference(std::span<const DriftModel> models, const ReferencePolicy& policy) {
  if (policy.kind == ReferencePolicy::Kind::fixed) return policy.fixed_ps;
  if (models.empty()) throw CalibrationError("no calibrated pixels to derive a reference from");
  const double anchor = policy.anchor_code;
  if (policy.kind == ReferencePolicy::Kind::median) {
    std::vector<double> v;
    v.reserve(models.size());
    for (const auto& m : models) v.push_back(m(anchor));
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  }
  double sw = 0.0;
  double s = 0.0;
  for (const auto& m : models) {
    sw += static_cast<double>(m.total_counts);
    s += static_cast<double>(m.total_counts) * m(anchor);
  }
  if (sw <= 0.0) {
    for (const auto& m : models) s += m(anchor);
    return s / static_cast<double>(models.size());
  }
  return s / sw;
}

}  // namespace chronocal
