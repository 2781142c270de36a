#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stormlevels/sampler.hpp"
#include "stormlevels/simulate.hpp"

namespace stormlevels::evaluate {

// One cell of the simulation study: a generating regime crossed with one
// estimating model, pooled over sites and replicates.
struct CellResult {
  simulate::Dependence dependence = simulate::Dependence::moderate;
  int n_sites = 0;
  int n_times = 0;
  model::Likelihood likelihood = model::Likelihood::unweighted;
  int replicates_used = 0;
  int failed_fits = 0;
  bool aborted = false;  // more than 10% of the replicates failed
  long n_pooled = 0;     // site x replicate pairs entering the pooled rates
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mse = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
};

struct StudySpec {
  std::vector<simulate::Dependence> dependences{simulate::Dependence::moderate};
  int n_sites = 30;
  int n_times = 50;
  int replicates = 50;
  std::vector<model::Likelihood> models{model::Likelihood::weighted,
                                        model::Likelihood::unweighted};
  model::WeightMode weight_mode = model::WeightMode::fixed;
  sampler::SamplerConfig chain;
  std::uint64_t seed = 1;
  int threads = 1;
  double prob = 0.99;      // return level quantile under study
  double hpd_mass = 0.95;
};

/* Simulate, fit every model on the same dataset, and record per site whether
 * the HPD interval for q(prob) covers the truth plus the squared error of
 * the posterior mean. Failed fits are counted and excluded; a cell aborts
 * when more than 10% of its replicates fail. */
std::vector<CellResult> coverage_study(const StudySpec& spec);

struct HoldoutScore {
  std::string site_id;
  Site location;
  double log_score = 0.0;
  long degenerate_draws = 0;  // draws floored at -1e9
};

// Floor applied to a single draw's log likelihood when the held-out data
// fall outside the drawn support.
inline constexpr double kLogScoreFloor = -1e9;

/* Posterior-mean log likelihood of held-out series. Per stored draw the
 * three parameter processes are kriged to the holdout sites and a parameter
 * vector is drawn from the conditional normal. */
std::vector<HoldoutScore> holdout_logscore(const sampler::FitData& fitted,
                                           const sampler::ChainOutput& chain,
                                           const Panel& holdout_panel, const Sites& holdout_sites,
                                           const Eigen::MatrixXd& holdout_design,
                                           const std::vector<std::string>& holdout_ids,
                                           std::uint64_t seed);

struct SurfacePoint {
  Site location;
  double q_mean = 0.0;
  double q_lo = 0.0;
  double q_hi = 0.0;
};

// Pointwise posterior summary of the p-quantile surface on a user grid.
std::vector<SurfacePoint> rl_surface(const sampler::FitData& fitted,
                                     const sampler::ChainOutput& chain, const Sites& grid,
                                     const Eigen::MatrixXd& grid_design, double p,
                                     std::uint64_t seed, double hpd_mass = 0.95);

// Split helper: indices not in holdout keep their order.
std::vector<int> complement_indices(int n, const std::vector<int>& holdout);

}  // namespace stormlevels::evaluate
