#include "markerplan/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "markerplan/errors.hpp"

namespace markerplan {

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  const auto n = static_cast<double>(x.size());
  if (x.size() < 3) throw ValidationError("correlation needs at least three pairs");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw ValidationError("correlation of a constant series");
  Correlation out;
  out.n = static_cast<int>(x.size());
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = n - 2.0;
  if (std::abs(out.r) >= 1.0) {
    out.p = 0.0;
    return out;
  }
  const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
  const boost::math::students_t dist(dof);
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return out;
}

}  // namespace markerplan
