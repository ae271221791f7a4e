#pragma once

// Oriented contours through the origin (the Sigma_+ / Sigma_- pair of rays
// and the imaginary axis) discretized by composite Gauss-Legendre panels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pearcey/error.hpp"

namespace pearcey {

using cplx = std::complex<double>;

enum class ContourTag { SigmaPlus, SigmaMinus, ImagAxis };

inline std::string_view to_string(ContourTag tag) {
  switch (tag) {
    case ContourTag::SigmaPlus: return "SigmaPlus";
    case ContourTag::SigmaMinus: return "SigmaMinus";
    case ContourTag::ImagAxis: return "ImagAxis";
  }
  return "?";
}

inline ContourTag contour_tag_from_string(std::string_view name) {
  if (name == "SigmaPlus") return ContourTag::SigmaPlus;
  if (name == "SigmaMinus") return ContourTag::SigmaMinus;
  if (name == "ImagAxis") return ContourTag::ImagAxis;
  fail(ErrorKind::invalid_argument, "unknown contour tag '" + std::string(name) + "'");
}

inline bool on_sigma(ContourTag tag) { return tag != ContourTag::ImagAxis; }

/// A half-line starting at the real point `vertex`. orientation = +1 means
/// traversed away from the vertex; truncation is the length kept.
struct Ray {
  double angle = 0.0;
  int orientation = 1;
  double truncation = 6.0;
  ContourTag tag = ContourTag::ImagAxis;
  double vertex = 0.0;

  cplx direction() const { return std::polar(1.0, angle); }
  bool operator==(const Ray&) const = default;
};

/// Direction of travel of each Sigma curve, +1 = increasing imaginary part.
/// The imaginary axis always runs from -i inf to +i inf. The default makes
/// K_P(x, x) the (positive) Pearcey intensity; see the calibration test in
/// tests/test_operators.cpp.
struct SigmaOrientation {
  int plus = -1;
  int minus = +1;

  static constexpr SigmaOrientation pearcey() { return {-1, +1}; }
  bool operator==(const SigmaOrientation&) const = default;
};

struct ContourSpec {
  std::vector<Ray> rays;
  int panels_per_ray = 8;
  int nodes_per_panel = 16;
  /// Ratio between consecutive panel lengths toward the vertex (1 = uniform).
  double grading = 1.0;
  /// Cap on the length of panels far from the origin.
  double max_panel_length = 1.0;

  bool operator==(const ContourSpec&) const = default;

  double truncation() const {
    double r = 0.0;
    for (const auto& ray : rays) r = std::max(r, ray.truncation);
    return r;
  }
};

struct Grid {
  std::vector<cplx> nodes;
  std::vector<cplx> weights;
  std::vector<ContourTag> tags;
  ContourSpec spec;

  std::size_t size() const { return nodes.size(); }

  std::vector<std::size_t> indices(bool sigma) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tags.size(); ++i)
      if (on_sigma(tags[i]) == sigma) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> sigma_indices() const { return indices(true); }
  std::vector<std::size_t> imag_indices() const { return indices(false); }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre rule on [-1, 1]

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Newton iteration on the three-term recurrence; nodes ascending.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) fail(ErrorKind::invalid_argument, "gauss_legendre needs n >= 1");
  GaussRule rule;
  rule.x.assign(n, 0.0);
  rule.w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    rule.x[i] = -z;
    rule.x[n - 1 - i] = z;
    rule.w[i] = rule.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  return rule;
}

// ---------------------------------------------------------------------------
// Contour construction

/// Smallest r >= 0 with r^4/8 - |s_max| r - |tau| r^2/2 >= -ln(eps).
inline double required_radius(double tau, double s_max, double target_eps) {
  if (!std::isfinite(tau) || !std::isfinite(s_max) || !std::isfinite(target_eps))
    fail(ErrorKind::invalid_argument, "build_contours: non-finite input");
  if (!(target_eps > 0.0 && target_eps < 1.0))
    fail(ErrorKind::invalid_argument, "build_contours: target_eps must lie in (0,1)");
  const double level = -std::log(target_eps);
  const double as = std::abs(s_max), at = std::abs(tau);
  auto f = [&](double r) { return r * r * r * r / 8.0 - as * r - at * r * r / 2.0; };
  double hi = 1.0;
  while (f(hi) < level) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < level ? lo : hi) = mid;
  }
  return hi;
}

inline constexpr double kMinTruncation = 6.0;

/// Default separation of the Sigma vertices from the imaginary axis.
inline constexpr double kSigmaVertexOffset = 0.5;

/// Sigma_+ has its vertex at +offset and Sigma_- at -offset. All integrands
/// are entire away from the imaginary axis, so moving the vertices off the
/// origin leaves every contour integral unchanged while removing the corner
/// where Sigma and iR would meet. offset = 0 gives the contours through the
/// origin (use a grading < 1 then).
inline ContourSpec make_contour_spec(double radius, SigmaOrientation orient = SigmaOrientation::pearcey(),
                                     int panels_per_ray = 8, int nodes_per_panel = 16,
                                     double grading = 1.0, double offset = kSigmaVertexOffset) {
  using std::numbers::pi;
  const int p = orient.plus, m = orient.minus;
  ContourSpec spec;
  // a ray in the upper half plane is traversed outward when its curve runs upward
  spec.rays = {
      {-pi / 2, -1, radius, ContourTag::ImagAxis, 0.0},
      {pi / 2, +1, radius, ContourTag::ImagAxis, 0.0},
      {-pi / 4, -p, radius, ContourTag::SigmaPlus, offset},
      {pi / 4, p, radius, ContourTag::SigmaPlus, offset},
      {-3 * pi / 4, -m, radius, ContourTag::SigmaMinus, -offset},
      {3 * pi / 4, m, radius, ContourTag::SigmaMinus, -offset},
  };
  spec.panels_per_ray = panels_per_ray;
  spec.nodes_per_panel = nodes_per_panel;
  spec.grading = grading;
  return spec;
}

/// Contours truncated so that the dressing exponentials have decayed below
/// target_eps for every shift |x| <= s_max.
inline ContourSpec build_contours(double tau, double s_max, double target_eps,
                                  SigmaOrientation orient = SigmaOrientation::pearcey()) {
  const double r = std::max(kMinTruncation, required_radius(tau, s_max, target_eps));
  // uniform panels no longer than 0.75
  const int panels = std::max(8, static_cast<int>(std::ceil(r / 0.75)));
  return make_contour_spec(r, orient, panels);
}

inline void validate(const ContourSpec& spec) {
  using std::numbers::pi;
  if (spec.rays.empty()) fail(ErrorKind::invalid_argument, "contour spec has no rays");
  if (spec.panels_per_ray < 1 || spec.nodes_per_panel < 1)
    fail(ErrorKind::invalid_argument, "panels_per_ray and nodes_per_panel must be positive");
  if (!(spec.grading > 0.0 && spec.grading <= 1.0))
    fail(ErrorKind::invalid_argument, "grading must lie in (0,1]");
  if (!(spec.max_panel_length > 0.0))
    fail(ErrorKind::invalid_argument, "max_panel_length must be positive");
  for (const auto& ray : spec.rays) {
    if (!(ray.angle > -pi - 1e-12 && ray.angle <= pi + 1e-12))
      fail(ErrorKind::invalid_argument, "ray angle outside (-pi, pi]");
    if (!(ray.truncation > 0.0) || !std::isfinite(ray.truncation))
      fail(ErrorKind::invalid_argument, "ray truncation must be positive");
    if (!std::isfinite(ray.vertex) ||
        (ray.tag == ContourTag::ImagAxis && ray.vertex != 0.0) ||
        (ray.tag == ContourTag::SigmaPlus && ray.vertex < 0.0) ||
        (ray.tag == ContourTag::SigmaMinus && ray.vertex > 0.0))
      fail(ErrorKind::invalid_argument, "ray vertex would make Sigma cross the imaginary axis");
    if (ray.orientation != 1 && ray.orientation != -1)
      fail(ErrorKind::invalid_argument, "ray orientation must be +1 or -1");
    const double a = std::abs(ray.angle);
    const bool ok = ray.tag == ContourTag::ImagAxis     ? std::abs(a - pi / 2) < 1e-12
                    : ray.tag == ContourTag::SigmaPlus ? std::abs(a - pi / 4) < 1e-12
                                                       : std::abs(a - 3 * pi / 4) < 1e-12;
    if (!ok) fail(ErrorKind::invalid_argument, "ray angle does not match its contour tag");
  }
  // each contour must be a single curve through the origin: one inward and
  // one outward ray
  for (auto tag : {ContourTag::SigmaPlus, ContourTag::SigmaMinus, ContourTag::ImagAxis}) {
    int in = 0, out = 0;
    for (const auto& ray : spec.rays)
      if (ray.tag == tag) (ray.orientation > 0 ? out : in) += 1;
    if (in != out) fail(ErrorKind::invalid_argument, "inconsistent orientation on " + std::string(to_string(tag)));
  }
}

/// Panel breakpoints on [0, R]: lengths grow by 1/grading away from the
/// origin until they reach max_panel_length, then stay constant. The
/// innermost length is chosen so that exactly `panels` panels fill [0, R].
inline std::vector<double> panel_breakpoints(double radius, int panels, double grading,
                                             double max_len) {
  auto lengths_for = [&](double h0) {
    std::vector<double> len(panels);
    double h = h0;
    for (int k = 0; k < panels; ++k) {
      len[k] = std::min(h, max_len);
      h /= grading;
    }
    return len;
  };
  auto total = [&](double h0) {
    double t = 0.0;
    for (double l : lengths_for(h0)) t += l;
    return t;
  };
  std::vector<double> len;
  if (total(max_len) <= radius) {
    // not enough panels to honour the cap: uniform
    len.assign(panels, radius / panels);
  } else {
    double lo = 0.0, hi = max_len;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < radius ? lo : hi) = mid;
    }
    len = lengths_for(hi);
    const double scale = radius / total(hi);
    for (auto& l : len) l *= scale;
  }
  std::vector<double> bp(panels + 1, 0.0);
  for (int k = 0; k < panels; ++k) bp[k + 1] = bp[k] + len[k];
  bp[panels] = radius;
  return bp;
}

inline Grid discretize(const ContourSpec& spec) {
  validate(spec);
  const GaussRule rule = gauss_legendre(spec.nodes_per_panel);
  Grid grid;
  grid.spec = spec;
  // imaginary-axis nodes first, then Sigma; callers rely on this block order
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& ray : spec.rays) {
      if (on_sigma(ray.tag) != (pass == 1)) continue;
      const cplx dir = ray.direction();
      const auto bp =
          panel_breakpoints(ray.truncation, spec.panels_per_ray, spec.grading, spec.max_panel_length);
      for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
        const double mid = 0.5 * (bp[p] + bp[p + 1]);
        const double half = 0.5 * (bp[p + 1] - bp[p]);
        for (std::size_t q = 0; q < rule.x.size(); ++q) {
          grid.nodes.push_back(ray.vertex + (mid + half * rule.x[q]) * dir);
          grid.weights.push_back(rule.w[q] * half * static_cast<double>(ray.orientation) * dir);
          grid.tags.push_back(ray.tag);
        }
      }
    }
  }
  return grid;
}

/// Sum of values_i * weights_i over nodes whose tag is in `tags` (all when empty).
inline cplx integrate(const Grid& grid, std::span<const cplx> values,
                      std::span<const ContourTag> tags = {}) {
  if (values.size() != grid.size())
    fail(ErrorKind::invalid_argument, "integrate: values not aligned with grid");
  cplx sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!tags.empty() && std::find(tags.begin(), tags.end(), grid.tags[i]) == tags.end()) continue;
    sum += values[i] * grid.weights[i];
  }
  return sum;
}

inline cplx integrate(const Grid& grid, std::span<const cplx> values, ContourTag tag) {
  const ContourTag tags[] = {tag};
  return integrate(grid, values, std::span<const ContourTag>(tags));
}

}  // namespace pearcey
