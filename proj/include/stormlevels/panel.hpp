#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stormlevels {

// Year-aligned annual maxima. Rows are years, columns are sites, NaN marks a
// missing year at a site. Ragged station records become one matrix with a
// shared year axis.
struct Panel {
  std::vector<int> years;   // row labels, strictly increasing
  Eigen::MatrixXd values;   // n_times x n_sites

  int n_times() const { return static_cast<int>(values.rows()); }
  int n_sites() const { return static_cast<int>(values.cols()); }
  bool present(int i, int j) const { return std::isfinite(values(i, j)); }

  int site_count(int j) const {
    int c = 0;
    for (int i = 0; i < n_times(); ++i)
      if (present(i, j)) ++c;
    return c;
  }

  std::vector<int> site_counts() const {
    std::vector<int> counts(n_sites());
    for (int j = 0; j < n_sites(); ++j) counts[j] = site_count(j);
    return counts;
  }

  void validate() const {
    if (!years.empty() && static_cast<int>(years.size()) != n_times())
      throw std::invalid_argument("panel: year labels do not match row count");
    for (std::size_t i = 1; i < years.size(); ++i)
      if (years[i] <= years[i - 1])
        throw std::invalid_argument("panel: years must be strictly increasing");
  }
};

// Data mapped to the unit Frechet scale; layout mirrors Panel. masked_out
// counts entries dropped by the GEV transform (support violations).
struct FrechetPanel {
  Eigen::MatrixXd z;       // n_times x n_sites, NaN = missing or masked
  long masked_out = 0;

  int n_times() const { return static_cast<int>(z.rows()); }
  int n_sites() const { return static_cast<int>(z.cols()); }
  bool present(int i, int j) const { return std::isfinite(z(i, j)); }
};

}  // namespace stormlevels
