#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace stormlevels {

// Planar site coordinates. Lon/lat inputs are projected to kilometres at
// ingestion, so everything downstream works with Euclidean distance.
struct Site {
  double x = 0.0;
  double y = 0.0;
};

using Sites = std::vector<Site>;

inline double distance(const Site& a, const Site& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline Eigen::MatrixXd distance_matrix(const Sites& a, const Sites& b) {
  Eigen::MatrixXd d(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) d(i, j) = distance(a[i], b[j]);
  return d;
}

inline Eigen::MatrixXd distance_matrix(const Sites& s) { return distance_matrix(s, s); }

}  // namespace stormlevels
