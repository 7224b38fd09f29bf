#pragma once

// Log-distance convergence diagnostics. With d_i the distance of iterate i
// from a reference point,
//   measure1_i = (ln d_i - ln d_0) / i   (average log rate so far)
//   measure2_i = ln d_i - ln d_{i-1}     (last-step log rate)
// Linear convergence shows as both settling at a constant; superlinear
// convergence as both drifting down without bound.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "projqp/errors.hpp"

namespace projqp {

struct MeasureRow {
  std::size_t iter = 0;
  double dist = 0.0;
  std::optional<double> measure1;
  std::optional<double> measure2;
};

/// A zero distance ends the table at that row (its logarithm is undefined).
inline std::vector<MeasureRow> compute_measures(const std::vector<double>& dists) {
  std::vector<MeasureRow> rows;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const double d = dists[i];
    if (std::isnan(d) || d < 0.0) throw NonPositiveDistance("compute_measures: negative or NaN distance");
    if (d == 0.0) break;
    MeasureRow row{i, d, std::nullopt, std::nullopt};
    if (i > 0) {
      row.measure1 = (std::log(d) - std::log(dists[0])) / static_cast<double>(i);
      row.measure2 = std::log(d) - std::log(dists[i - 1]);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace projqp
