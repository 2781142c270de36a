#include "stormlevels/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stormlevels::dependence {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_theta(double t) { return std::min(2.0, std::max(1.0, t)); }
}  // namespace

double ExtremalCurve::operator()(double d) const {
  double v;
  if (bin_centers.empty()) {
    v = 2.0;  // no information, independence
  } else if (d <= bin_centers.front()) {
    v = theta_hat.front();
  } else if (d >= bin_centers.back()) {
    v = theta_hat.back();
  } else {
    const auto it = std::upper_bound(bin_centers.begin(), bin_centers.end(), d);
    const std::size_t hi = static_cast<std::size_t>(it - bin_centers.begin());
    const std::size_t lo = hi - 1;
    const double t = (d - bin_centers[lo]) / (bin_centers[hi] - bin_centers[lo]);
    v = (1.0 - t) * theta_hat[lo] + t * theta_hat[hi];
  }
  return clamp ? clamp_theta(v) : v;
}

ExtremalCurve ExtremalCurve::constant(double theta) {
  ExtremalCurve c;
  c.bin_centers = {1.0};
  c.theta_hat = {clamp_theta(theta)};
  c.bandwidth = 0.0;
  return c;
}

void ExtremalCurve::validate() const {
  if (bin_centers.size() != theta_hat.size())
    throw std::invalid_argument("ExtremalCurve: centers and values differ in length");
  for (std::size_t k = 0; k < bin_centers.size(); ++k) {
    if (!(bin_centers[k] > 0.0))
      throw std::invalid_argument("ExtremalCurve: bin centers must be positive");
    if (k > 0 && !(bin_centers[k] > bin_centers[k - 1]))
      throw std::invalid_argument("ExtremalCurve: bin centers must be strictly increasing");
    if (!(theta_hat[k] >= 1.0 && theta_hat[k] <= 2.0))
      throw std::invalid_argument("ExtremalCurve: theta values must lie in [1,2]");
  }
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("WeightVector: empty");
  const double lo = 1.0 / static_cast<double>(w_.size());
  for (double& v : w_) {
    if (!std::isfinite(v) || v < lo - 1e-9 || v > 1.0 + 1e-9)
      throw std::invalid_argument("WeightVector: weight outside [1/N, 1]");
    v = std::min(1.0, std::max(lo, v));
  }
}

WeightVector WeightVector::ones(std::size_t n) {
  return WeightVector(std::vector<double>(n, 1.0));
}

FrechetPanel ecdf_transform(const Panel& panel) {
  const int T = panel.n_times();
  const int N = panel.n_sites();
  FrechetPanel out;
  out.z = Eigen::MatrixXd::Constant(T, N, kNaN);
  for (int j = 0; j < N; ++j) {
    std::vector<int> rows;
    for (int i = 0; i < T; ++i)
      if (panel.present(i, j)) rows.push_back(i);
    const int Tj = static_cast<int>(rows.size());
    if (Tj < 2)
      throw std::invalid_argument("ecdf_transform: site " + std::to_string(j) +
                                  " has fewer than 2 observations");
    // average ranks for ties
    std::vector<int> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return panel.values(rows[a], j) < panel.values(rows[b], j);
    });
    std::vector<double> rank(rows.size());
    std::size_t k = 0;
    while (k < order.size()) {
      std::size_t m = k;
      const double v = panel.values(rows[order[k]], j);
      while (m + 1 < order.size() && panel.values(rows[order[m + 1]], j) == v) ++m;
      const double avg = 0.5 * (static_cast<double>(k + 1) + static_cast<double>(m + 1));
      for (std::size_t q = k; q <= m; ++q) rank[order[q]] = avg;
      k = m + 1;
    }
    for (std::size_t q = 0; q < rows.size(); ++q) {
      const double p = rank[q] / static_cast<double>(Tj + 1);  // never 0 or 1
      out.z(rows[q], j) = gev::to_frechet(p);
    }
  }
  return out;
}

FrechetPanel gev_transform(const Panel& panel, const std::vector<gev::GevParams>& eta) {
  const int T = panel.n_times();
  const int N = panel.n_sites();
  if (static_cast<int>(eta.size()) != N)
    throw std::invalid_argument("gev_transform: one parameter triple per site required");
  FrechetPanel out;
  out.z = Eigen::MatrixXd::Constant(T, N, kNaN);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < T; ++i) {
      if (!panel.present(i, j)) continue;
      const double u = gev::cdf(panel.values(i, j), eta[j]);
      if (u > 0.0 && u < 1.0) {
        out.z(i, j) = gev::to_frechet(u);
      } else {
        ++out.masked_out;  // at or outside the support boundary
      }
    }
  }
  return out;
}

std::vector<ThetaPair> pairwise_theta(const FrechetPanel& z, const Sites& sites,
                                      int min_overlap, ThetaEstimator estimator) {
  const int N = z.n_sites();
  const int T = z.n_times();
  if (static_cast<int>(sites.size()) != N)
    throw std::invalid_argument("pairwise_theta: site count mismatch");
  std::vector<ThetaPair> pairs;
  pairs.reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      int overlap = 0;
      double acc = 0.0;
      for (int i = 0; i < T; ++i) {
        if (!z.present(i, a) || !z.present(i, b)) continue;
        ++overlap;
        const double za = z.z(i, a);
        const double zb = z.z(i, b);
        if (estimator == ThetaEstimator::naive_frechet) {
          acc += 1.0 / std::max(za, zb);
        } else {
          // F-madogram on the uniform scale, F(z) = exp(-1/z)
          acc += 0.5 * std::abs(std::exp(-1.0 / za) - std::exp(-1.0 / zb));
        }
      }
      if (overlap < min_overlap) continue;
      double theta;
      if (estimator == ThetaEstimator::naive_frechet) {
        theta = static_cast<double>(overlap) / acc;
      } else {
        const double nu = acc / static_cast<double>(overlap);
        theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu);
      }
      pairs.push_back({a, b, distance(sites[a], sites[b]), clamp_theta(theta), overlap});
    }
  }
  return pairs;
}

ExtremalCurve smooth_curve(const std::vector<ThetaPair>& pairs, double bandwidth, int n_bins) {
  if (pairs.empty()) throw std::invalid_argument("smooth_curve: no pairs");
  double dmin = pairs.front().distance;
  double dmax = dmin;
  for (const auto& p : pairs) {
    dmin = std::min(dmin, p.distance);
    dmax = std::max(dmax, p.distance);
  }
  ExtremalCurve curve;
  curve.bandwidth = bandwidth > 0.0 ? bandwidth : 0.2 * dmax;
  if (!(curve.bandwidth > 0.0)) curve.bandwidth = 1.0;  // all pairs at distance ~0

  if (pairs.size() == 1 || dmax <= dmin) {
    double mean = 0.0;
    for (const auto& p : pairs) mean += p.theta_hat;
    mean /= static_cast<double>(pairs.size());
    curve.bin_centers = {std::max(dmax, 1e-12)};
    curve.theta_hat = {clamp_theta(mean)};
    return curve;
  }

  n_bins = std::max(2, n_bins);
  curve.bin_centers.resize(n_bins);
  curve.theta_hat.resize(n_bins);
  const double step = (dmax - dmin) / static_cast<double>(n_bins - 1);
  const double h = curve.bandwidth;
  for (int k = 0; k < n_bins; ++k) {
    const double d0 = dmin + step * k;
    double num = 0.0, den = 0.0;
    for (const auto& p : pairs) {
      const double t = (p.distance - d0) / h;
      const double w = std::exp(-0.5 * t * t);
      num += w * p.theta_hat;
      den += w;
    }
    curve.bin_centers[k] = d0 <= 0.0 ? 1e-12 : d0;
    curve.theta_hat[k] = clamp_theta(num / den);
  }
  return curve;
}

namespace {

// Mean of the mapped values N^(theta - 2). Accumulated in long double so the
// two exact limits (theta constant at 1 or 2) come out bit-exact.
double mapped_mean(const std::vector<double>& terms) {
  bool all_equal = true;
  for (double t : terms)
    if (t != terms.front()) {
      all_equal = false;
      break;
    }
  if (all_equal) return terms.front();
  long double acc = 0.0L;
  for (double t : terms) acc += t;
  return static_cast<double>(acc / static_cast<long double>(terms.size()));
}

}  // namespace

WeightVector compute_weights(const ExtremalCurve& curve, const Sites& sites) {
  const std::size_t N = sites.size();
  if (N < 2) throw std::invalid_argument("compute_weights: at least two sites required");
  const double n = static_cast<double>(N);
  std::vector<double> w(N);
  std::vector<double> terms(N - 1);
  for (std::size_t j = 0; j < N; ++j) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (i == j) continue;
      terms[k++] = std::pow(n, curve(distance(sites[i], sites[j])) - 2.0);
    }
    w[j] = mapped_mean(terms);
  }
  return WeightVector(std::move(w));
}

WeightVector compute_weights_raw(const std::vector<ThetaPair>& pairs, const Sites& sites) {
  const std::size_t N = sites.size();
  if (N < 2) throw std::invalid_argument("compute_weights_raw: at least two sites required");
  const double n = static_cast<double>(N);
  std::vector<std::vector<double>> terms(N);
  for (const auto& p : pairs) {
    const double t = std::pow(n, p.theta_hat - 2.0);
    terms[p.site_a].push_back(t);
    terms[p.site_b].push_back(t);
  }
  std::vector<double> w(N);
  for (std::size_t j = 0; j < N; ++j)
    w[j] = terms[j].empty() ? 1.0 : mapped_mean(terms[j]);
  return WeightVector(std::move(w));
}

WeightPipelineResult weights_from_frechet(const FrechetPanel& z, const Sites& sites,
                                          const WeightPipelineOptions& opts) {
  WeightPipelineResult r{
      pairwise_theta(z, sites, opts.min_overlap, opts.estimator),
      ExtremalCurve{},
      WeightVector::ones(sites.size()),
  };
  if (r.pairs.empty())
    throw std::runtime_error(
        "weights: no station pair has enough overlapping observations (min_overlap=" +
        std::to_string(opts.min_overlap) + ")");
  r.curve = smooth_curve(r.pairs, opts.bandwidth, opts.n_bins);
  r.weights = opts.use_smoothed_curve ? compute_weights(r.curve, sites)
                                      : compute_weights_raw(r.pairs, sites);
  return r;
}

}  // namespace stormlevels::dependence
