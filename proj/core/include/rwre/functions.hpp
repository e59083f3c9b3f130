#pragma once

#include <functional>
#include <utility>
#include <variant>
#include <vector>

namespace rwre {

/// Initial macroscopic density profiles (bounded, compactly supported).
struct IndicatorProfile {
  double a = 0.0;
  double b = 1.0;
  double height = 1.0;
};

struct Knot {
  double x = 0.0;
  double y = 0.0;
};

/// Linear interpolation between knots, zero outside [first.x, last.x].
struct PiecewiseLinearProfile {
  std::vector<Knot> knots;
};

class Profile {
 public:
  using Shape = std::variant<IndicatorProfile, PiecewiseLinearProfile>;

  explicit Profile(Shape shape);

  static Profile indicator(double a, double b, double height) { return Profile(IndicatorProfile{a, b, height}); }

  double operator()(double y) const;
  double bound() const noexcept { return bound_; }
  std::pair<double, double> support() const;
  /// Points where the profile is not smooth.
  std::vector<double> breakpoints() const;
  const Shape& shape() const noexcept { return shape_; }

 private:
  Shape shape_;
  double bound_ = 0.0;
};

/// Continuous compactly supported test functions g for the pairing.
struct TriangleFunction {
  double lo = 0.0;
  double hi = 1.0;
  double height = 1.0;  // at the midpoint
};

/// Smooth bump height * exp(1 - 1/(1 - u^2)), u = (y - center)/radius.
struct BumpFunction {
  double center = 0.0;
  double radius = 1.0;
  double height = 1.0;
};

struct ZeroFunction {
  double lo = 0.0;
  double hi = 1.0;
};

class TestFunction {
 public:
  using Shape = std::variant<TriangleFunction, BumpFunction, ZeroFunction>;

  explicit TestFunction(Shape shape);

  static TestFunction triangle(double lo, double hi, double height = 1.0) {
    return TestFunction(TriangleFunction{lo, hi, height});
  }

  double operator()(double y) const;
  /// Closed support [lo, hi].
  std::pair<double, double> support() const;
  std::vector<double> breakpoints() const;
  const Shape& shape() const noexcept { return shape_; }

 private:
  Shape shape_;
};

/// Integral of h over [lo, hi], split at the given breakpoints, by adaptive
/// Gauss-Kronrod with absolute error target `tol`.
template <class F>
double integrate_piecewise(F&& h, double lo, double hi, std::vector<double> breakpoints, double tol);

double integrate_piecewise_fn(const std::function<double(double)>& h, double lo, double hi,
                              std::vector<double> breakpoints, double tol);

template <class F>
double integrate_piecewise(F&& h, double lo, double hi, std::vector<double> breakpoints, double tol) {
  return integrate_piecewise_fn(std::function<double(double)>(std::forward<F>(h)), lo, hi,
                                std::move(breakpoints), tol);
}

}  // namespace rwre
