#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "stormlevels/dependence.hpp"
#include "stormlevels/gev.hpp"
#include "stormlevels/panel.hpp"
#include "stormlevels/spatial.hpp"

namespace stormlevels::model {

enum class Likelihood { weighted, unweighted, pc_prior };
enum class WeightMode { fixed, gibbs_updated };

struct GammaPrior {
  double shape = 2.0;
  double rate = 2.0;
  double logpdf(double x) const;
  double mean() const { return shape / rate; }
};

struct InvGammaPrior {
  double shape = 2.0;
  double scale = 1.0;
  double logpdf(double x) const;
  double mean() const { return scale / (shape - 1.0); }
};

// Priors attached to one latent parameter process.
struct ProcessPrior {
  double coef_variance = 1e6;  // N(0, v) on each regression coefficient
  InvGammaPrior sill{2.0, 1.0};
  GammaPrior range{2.0, 2.0};
  GammaPrior smoothness{2.0, 2.0};
};

inline constexpr const char* kProcessNames[3] = {"mu", "logsigma", "xi"};

struct ModelSpec {
  Likelihood likelihood = Likelihood::unweighted;
  WeightMode weight_mode = WeightMode::fixed;  // meaningful for weighted only
  spatial::CovKind covariance = spatial::CovKind::powered_exponential;
  double jitter = 1e-8;

  // When true the process priors are centred on variogram-based estimates
  // from the initial fields at fit time; resolve_hyperpriors() fills them.
  bool auto_hyperpriors = true;
  std::array<ProcessPrior, 3> process{};

  InvGammaPrior pc_lambda_prior{2.0, 1.0};
  dependence::WeightPipelineOptions weights;

  void validate() const;
};

// All latent quantities at one sampler iteration.
struct LatentState {
  std::vector<gev::GevParams> eta;
  std::array<Eigen::VectorXd, 3> beta;
  std::array<spatial::CovarianceSpec, 3> cov;
  dependence::WeightVector weights;
  double pc_lambda = 1.0;

  explicit LatentState(int n_sites)
      : weights(dependence::WeightVector::ones(static_cast<std::size_t>(n_sites))) {}

  int n_sites() const { return static_cast<int>(eta.size()); }
  Eigen::VectorXd field(int k) const;
};

// Sum over present observations at one site of the GEV log density.
double site_loglik(const Panel& panel, int site, const gev::GevParams& params);

// sum_j w_j sum_i log f(y_i(s_j); eta(s_j)); -infinity on support violation.
double weighted_loglik(const Panel& panel, const std::vector<gev::GevParams>& eta,
                       const dependence::WeightVector& weights);
double unweighted_loglik(const Panel& panel, const std::vector<gev::GevParams>& eta);

// Validity window for the shape-penalty machinery.
inline constexpr double kPcXiMin = -0.5;
inline constexpr double kPcXiMax = 1.0;

/* Complexity-penalty prior on the GEV shape. The distance of GEV(0,1,xi)
 * from the Gumbel base model is d(xi) = sqrt(2 KLD); an exponential with
 * rate lambda is placed on that distance, reflected to two sides carrying
 * mass 1/2 each (each side renormalised over the finite window). d(xi) is
 * precomputed on a 512-point grid and interpolated with cubic splines. */
class PcPrior {
 public:
  PcPrior();
  double distance(double xi) const;                 // d(xi), exactly 0 at xi = 0
  double logprior(double xi, double lambda) const;  // log pi(xi | lambda)

  // Direct numeric KLD(GEV(0,1,xi) || Gumbel(0,1)); the spline is built on it.
  static double kld_to_gumbel(double xi);

 private:
  struct Spline;
  double spline_distance(double xi) const;
  std::vector<double> left_x_, left_y_, left_m_;
  std::vector<double> right_x_, right_y_, right_m_;
};

const PcPrior& pc_prior_cache();
double pc_distance(double xi);
double pc_logprior(double xi, double lambda);

// Full log posterior for the given estimating model.
double log_posterior(const LatentState& state, const Panel& panel, const Sites& sites,
                     const Eigen::MatrixXd& design, const ModelSpec& spec);

// Effective number of independent observations per site, w_j * T_j.
Eigen::VectorXd effective_info(const dependence::WeightVector& weights,
                               const std::vector<int>& site_counts);

// Variogram-based default priors for one process given initial field values.
ProcessPrior default_process_prior(const Eigen::VectorXd& field, const Sites& sites,
                                   const Eigen::MatrixXd& design);

// Copy of spec with auto hyperpriors replaced by data-driven defaults.
ModelSpec resolve_hyperpriors(const ModelSpec& spec, const std::array<Eigen::VectorXd, 3>& fields,
                              const Sites& sites, const Eigen::MatrixXd& design);

}  // namespace stormlevels::model
