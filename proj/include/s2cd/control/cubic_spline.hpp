#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

namespace s2cd::control {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// One piece y(x) = a + b(x - x0) + c(x - x0)^2 + d(x - x0)^3 on [x0, next knot].
struct SplineSegment {
  double x0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double value(double x) const {
    const double h = x - x0;
    return a + h * (b + h * (c + h * d));
  }
  double slope(double x) const {
    const double h = x - x0;
    return b + h * (2.0 * c + 3.0 * h * d);
  }
  double curvature(double x) const { return 2.0 * c + 6.0 * d * (x - x0); }
};

/// Natural cubic spline (zero second derivative at both ends) through the
/// knots, solved with the Thomas algorithm. Requires at least two knots with
/// strictly increasing x.
inline std::vector<SplineSegment> fit_cubic_spline(std::span<const Point2> knots) {
  const std::size_t n = knots.size();
  if (n < 2) throw std::invalid_argument("cubic spline needs at least two knots");
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = knots[i + 1].x - knots[i].x;
    if (!(h[i] > 0.0)) throw std::invalid_argument("spline knots must have strictly increasing x");
  }

  // Second-derivative moments m[i]; m[0] = m[n-1] = 0.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = j + 1;
      diag[j] = 2.0 * (h[i - 1] + h[i]);
      upper[j] = h[i];
      rhs[j] = 6.0 * ((knots[i + 1].y - knots[i].y) / h[i] - (knots[i].y - knots[i - 1].y) / h[i - 1]);
    }
    // Forward sweep; sub-diagonal entry of row j is h[j].
    for (std::size_t j = 1; j < k; ++j) {
      const double w = h[j] / diag[j - 1];
      diag[j] -= w * upper[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
  }

  std::vector<SplineSegment> segments(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    SplineSegment& s = segments[i];
    s.x0 = knots[i].x;
    s.a = knots[i].y;
    s.b = (knots[i + 1].y - knots[i].y) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    s.c = m[i] / 2.0;
    s.d = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return segments;
}

/// Piecewise evaluator over fitted segments. Outside the knot range the end
/// segments are extended with their boundary value (flat).
class CubicSpline {
 public:
  CubicSpline() = default;
  explicit CubicSpline(std::span<const Point2> knots)
      : segments_(fit_cubic_spline(knots)), x_end_(knots.back().x), y_end_(knots.back().y) {}

  const std::vector<SplineSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double x_begin() const { return segments_.front().x0; }
  double x_end() const { return x_end_; }

  double operator()(double x) const {
    if (x <= segments_.front().x0) return segments_.front().a;
    if (x >= x_end_) return y_end_;
    return locate(x).value(x);
  }
  double slope(double x) const {
    x = std::clamp(x, segments_.front().x0, x_end_);
    return locate(x).slope(x);
  }

 private:
  const SplineSegment& locate(double x) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                               [](double v, const SplineSegment& s) { return v < s.x0; });
    return it == segments_.begin() ? segments_.front() : *std::prev(it);
  }

  std::vector<SplineSegment> segments_;
  double x_end_ = 0.0;
  double y_end_ = 0.0;
};

}  // namespace s2cd::control
