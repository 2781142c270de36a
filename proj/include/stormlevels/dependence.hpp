#pragma once

#include <cstddef>
#include <vector>

#include "stormlevels/geometry.hpp"
#include "stormlevels/gev.hpp"
#include "stormlevels/panel.hpp"

namespace stormlevels::dependence {

// One retained station pair with its plug-in extremal coefficient estimate.
struct ThetaPair {
  int site_a = 0;
  int site_b = 0;
  double distance = 0.0;
  double theta_hat = 1.0;  // clamped to [1,2]
  int n_overlap = 0;
};

enum class ThetaEstimator {
  naive_frechet,  // T / sum 1/max(z_a, z_b), the Frechet-scale plug-in
  f_madogram,     // (1 + 2 nu_F) / (1 - 2 nu_F)
};

/* Smoothed estimate of the extremal coefficient function theta(d), stored on
 * a distance grid. Evaluation interpolates linearly, returns the nearest-end
 * value outside the observed distance range, and clamps to [1,2]. */
struct ExtremalCurve {
  std::vector<double> bin_centers;  // strictly increasing, all > 0
  std::vector<double> theta_hat;    // same length, values in [1,2]
  double bandwidth = 0.0;
  bool clamp = true;

  double operator()(double d) const;
  static ExtremalCurve constant(double theta);
  void validate() const;
};

// Per-site likelihood weights, each inside [1/N, 1].
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> w);
  static WeightVector ones(std::size_t n);

  double operator[](std::size_t j) const { return w_[j]; }
  std::size_t size() const { return w_.size(); }
  const std::vector<double>& values() const { return w_; }
  bool operator==(const WeightVector& other) const { return w_ == other.w_; }

 private:
  std::vector<double> w_;
};

// Rank transform rank/(T+1) per site (average ranks on ties), then map to
// the unit Frechet scale. Sites need at least two observations.
FrechetPanel ecdf_transform(const Panel& panel);

// Probability integral transform through the fitted GEV margins. Entries at
// or outside the support boundary are masked and counted, not fatal.
FrechetPanel gev_transform(const Panel& panel, const std::vector<gev::GevParams>& eta);

// Pairwise plug-in estimates; pairs with fewer than min_overlap common
// timepoints are dropped. Returns an empty list when nothing qualifies.
std::vector<ThetaPair> pairwise_theta(const FrechetPanel& z, const Sites& sites,
                                      int min_overlap = 10,
                                      ThetaEstimator estimator = ThetaEstimator::naive_frechet);

// Gaussian-kernel local-constant regression of theta_hat on distance.
// bandwidth <= 0 selects the default 0.2 * max pairwise distance.
ExtremalCurve smooth_curve(const std::vector<ThetaPair>& pairs, double bandwidth = 0.0,
                           int n_bins = 64);

// w_j = mean over i != j of N^(theta(d_ij) - 2).
WeightVector compute_weights(const ExtremalCurve& curve, const Sites& sites);

// Same map evaluated on the raw pairwise estimates; pairs missing for a site
// contribute nothing and a site with no retained pair gets weight 1.
WeightVector compute_weights_raw(const std::vector<ThetaPair>& pairs, const Sites& sites);

struct WeightPipelineOptions {
  ThetaEstimator estimator = ThetaEstimator::naive_frechet;
  int min_overlap = 10;
  double bandwidth = 0.0;  // 0 = default rule
  int n_bins = 64;
  bool use_smoothed_curve = true;
};

struct WeightPipelineResult {
  std::vector<ThetaPair> pairs;
  ExtremalCurve curve;
  WeightVector weights;
};

// Full weights path from Frechet-scale data; throws when no pair qualifies.
WeightPipelineResult weights_from_frechet(const FrechetPanel& z, const Sites& sites,
                                          const WeightPipelineOptions& opts = {});

}  // namespace stormlevels::dependence
