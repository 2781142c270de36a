#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stormlevels/gev.hpp"
#include "stormlevels/panel.hpp"
#include "stormlevels/rng.hpp"
#include "stormlevels/spatial.hpp"

namespace stormlevels::simulate {

enum class Dependence { independent, weak, moderate, strong };

Dependence dependence_from_string(const std::string& name);
std::string to_string(Dependence d);

// gamma(d) = (d / lambda)^alpha, the increment variance of the driving
// Gaussian field at lag d.
struct Semivariogram {
  double lambda = 0.5;
  double alpha = 0.5;
  double operator()(double d) const;
};

// Preset pairs for the three dependent regimes.
Semivariogram dependence_params(Dependence d);

// Pairwise extremal coefficient implied by gamma: 2 Phi(sqrt(gamma)/2).
double analytic_theta(double gamma_value);

enum class BrAlgorithm {
  exact_extremal,   // exact, via extremal functions
  approx_spectral,  // truncated spectral maximum, biased low in the tails
};

// Mean surface and covariance of one latent parameter field.
struct FieldConfig {
  double intercept = 0.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
  spatial::CovarianceSpec cov;
  double mean_at(const Site& s) const { return intercept + slope_x * s.x + slope_y * s.y; }
};

struct GeneratorConfig {
  int n_sites = 50;
  int n_times = 50;
  double domain_half = 10.0;  // sites uniform on [-h, h]^2
  Dependence dependence = Dependence::moderate;
  std::uint64_t seed = 1;
  BrAlgorithm br_algorithm = BrAlgorithm::exact_extremal;
  int n_spectral = 1000;       // approx mode only
  int max_xi_redraws = 1000;
  FieldConfig mu_field;        // defaults set in default_config()
  FieldConfig logsigma_field;
  FieldConfig xi_field;

  void validate() const;
};

// The standard generating configuration: mu with an east-west trend,
// log sigma with a north-south trend, a nearly flat positive shape field.
GeneratorConfig default_config();

struct SyntheticDataset {
  Sites sites;
  std::vector<std::string> site_ids;
  std::vector<gev::GevParams> true_eta;
  Panel panel;
  GeneratorConfig config;
};

Sites sample_sites(const GeneratorConfig& cfg, Rng& rng);

// Latent parameter fields; the shape field is redrawn until positive
// everywhere (bounded number of attempts).
std::vector<gev::GevParams> sample_parameter_fields(const GeneratorConfig& cfg, const Sites& sites,
                                                    Rng& rng);

// t independent max-stable field replicates with unit Frechet margins.
Eigen::MatrixXd sample_br_frechet(const Semivariogram& gamma, const Sites& sites, int t, Rng& rng,
                                  BrAlgorithm algorithm = BrAlgorithm::exact_extremal,
                                  int n_spectral = 1000);

// Full dataset: latent fields, dependence draws, margins transformed to the
// true GEV at each site.
SyntheticDataset assemble_dataset(const GeneratorConfig& cfg);

}  // namespace stormlevels::simulate
