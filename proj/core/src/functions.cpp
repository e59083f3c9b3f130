#include "rwre/functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rwre {

Profile::Profile(Shape shape) : shape_(std::move(shape)) {
  if (const auto* ind = std::get_if<IndicatorProfile>(&shape_)) {
    if (!(ind->a < ind->b)) throw std::invalid_argument("indicator profile: need a < b");
    if (!(ind->height >= 0.0)) throw std::invalid_argument("indicator profile: height must be >= 0");
    bound_ = ind->height;
  } else {
    const auto& pl = std::get<PiecewiseLinearProfile>(shape_);
    if (pl.knots.size() < 2) throw std::invalid_argument("piecewise-linear profile: need two knots");
    for (std::size_t i = 0; i < pl.knots.size(); ++i) {
      if (!(pl.knots[i].y >= 0.0)) throw std::invalid_argument("profile values must be >= 0");
      if (i > 0 && !(pl.knots[i].x > pl.knots[i - 1].x)) {
        throw std::invalid_argument("piecewise-linear profile: knots must increase");
      }
      bound_ = std::max(bound_, pl.knots[i].y);
    }
  }
}

double Profile::operator()(double y) const {
  if (const auto* ind = std::get_if<IndicatorProfile>(&shape_)) {
    return (y >= ind->a && y <= ind->b) ? ind->height : 0.0;
  }
  const auto& k = std::get<PiecewiseLinearProfile>(shape_).knots;
  if (y < k.front().x || y > k.back().x) return 0.0;
  const auto it = std::upper_bound(k.begin(), k.end(), y, [](double v, const Knot& kn) { return v < kn.x; });
  if (it == k.end()) return k.back().y;
  const auto& right = *it;
  const auto& left = *(it - 1);
  const double t = (y - left.x) / (right.x - left.x);
  return left.y + t * (right.y - left.y);
}

std::pair<double, double> Profile::support() const {
  if (const auto* ind = std::get_if<IndicatorProfile>(&shape_)) return {ind->a, ind->b};
  const auto& k = std::get<PiecewiseLinearProfile>(shape_).knots;
  return {k.front().x, k.back().x};
}

std::vector<double> Profile::breakpoints() const {
  if (const auto* ind = std::get_if<IndicatorProfile>(&shape_)) return {ind->a, ind->b};
  std::vector<double> out;
  for (const auto& kn : std::get<PiecewiseLinearProfile>(shape_).knots) out.push_back(kn.x);
  return out;
}

TestFunction::TestFunction(Shape shape) : shape_(std::move(shape)) {
  if (const auto* t = std::get_if<TriangleFunction>(&shape_)) {
    if (!(t->lo < t->hi)) throw std::invalid_argument("triangle: need lo < hi");
  } else if (const auto* b = std::get_if<BumpFunction>(&shape_)) {
    if (!(b->radius > 0.0)) throw std::invalid_argument("bump: radius must be positive");
  } else {
    const auto& z = std::get<ZeroFunction>(shape_);
    if (!(z.lo < z.hi)) throw std::invalid_argument("zero function: need lo < hi");
  }
}

double TestFunction::operator()(double y) const {
  if (const auto* t = std::get_if<TriangleFunction>(&shape_)) {
    if (y <= t->lo || y >= t->hi) return 0.0;
    const double mid = 0.5 * (t->lo + t->hi);
    const double half = 0.5 * (t->hi - t->lo);
    return t->height * (1.0 - std::fabs(y - mid) / half);
  }
  if (const auto* b = std::get_if<BumpFunction>(&shape_)) {
    const double u = (y - b->center) / b->radius;
    if (std::fabs(u) >= 1.0) return 0.0;
    return b->height * std::exp(1.0 - 1.0 / (1.0 - u * u));
  }
  return 0.0;
}

std::pair<double, double> TestFunction::support() const {
  if (const auto* t = std::get_if<TriangleFunction>(&shape_)) return {t->lo, t->hi};
  if (const auto* b = std::get_if<BumpFunction>(&shape_)) return {b->center - b->radius, b->center + b->radius};
  const auto& z = std::get<ZeroFunction>(shape_);
  return {z.lo, z.hi};
}

std::vector<double> TestFunction::breakpoints() const {
  if (const auto* t = std::get_if<TriangleFunction>(&shape_)) return {t->lo, 0.5 * (t->lo + t->hi), t->hi};
  const auto [lo, hi] = support();
  return {lo, hi};
}

double integrate_piecewise_fn(const std::function<double(double)>& h, double lo, double hi,
                              std::vector<double> breakpoints, double tol) {
  if (!(lo < hi)) return 0.0;
  breakpoints.push_back(lo);
  breakpoints.push_back(hi);
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  // Pieces are smooth, so a relative target far below tol is cheap to meet.
  const double rel = std::min(1e-12, tol);
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = std::max(lo, breakpoints[i]);
    const double b = std::min(hi, breakpoints[i + 1]);
    if (!(a < b)) continue;
    total += gauss_kronrod<double, 31>::integrate(h, a, b, 15, rel);
  }
  return total;
}

}  // namespace rwre
