#pragma once

#include <span>

namespace markerplan {

struct Correlation {
  double r = 0.0;
  /// Two-sided p-value of the t test for zero correlation.
  double p = 1.0;
  int n = 0;
};

/// Pearson correlation. Needs at least three pairs and non-constant inputs.
Correlation pearson(std::span<const double> x, std::span<const double> y);

}  // namespace markerplan
