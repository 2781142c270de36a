#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stormlevels/geometry.hpp"
#include "stormlevels/rng.hpp"

namespace stormlevels::spatial {

enum class CovKind { powered_exponential, matern };

/* Stationary isotropic covariance. For the powered exponential the value at
 * distance d is sill * exp(-(d/range)^smoothness) with smoothness in (0,2].
 * For the Matern it is sill * 2^(1-nu)/Gamma(nu) * (d/range)^nu * K_nu(d/range),
 * so sill plays the role of 1/tau in the inverse-scale parameterisation. */
struct CovarianceSpec {
  CovKind kind = CovKind::powered_exponential;
  double sill = 1.0;
  double range = 1.0;
  double smoothness = 1.0;
  double jitter = 1e-8;

  double operator()(double d) const;
  void validate() const;
};

// Latent field values at sites together with the regression layer that
// defines the process mean X beta.
struct GpField {
  Eigen::VectorXd values;  // N
  Eigen::VectorXd beta;    // p
  Eigen::MatrixXd design;  // N x p
};

// Square covariance among sites; spec.jitter is added on the diagonal.
Eigen::MatrixXd cov_matrix(const CovarianceSpec& spec, const Sites& sites);
// Cross covariance, no jitter.
Eigen::MatrixXd cov_matrix(const CovarianceSpec& spec, const Sites& a, const Sites& b);
// Same from a precomputed distance matrix.
Eigen::MatrixXd cov_matrix_from_dist(const CovarianceSpec& spec, const Eigen::MatrixXd& dist,
                                     bool add_jitter);

/* Cholesky with jitter escalation: if the factorization fails, multiplies
 * the added diagonal by 10 and retries until 1e-4, then throws. The matrix
 * is assumed to already include base_jitter on its diagonal. */
Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd cov, double base_jitter);

// Multivariate normal log density of field.values with mean X beta.
double gp_logdensity(const GpField& field, const CovarianceSpec& spec, const Sites& sites);

struct KrigeResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/* Exact Gaussian conditional distribution at new_sites given the observed
 * field. With an empty observed set this reduces to the prior mean and
 * covariance at new_sites. */
KrigeResult krige(const GpField& field, const CovarianceSpec& spec, const Sites& obs_sites,
                  const Sites& new_sites, const Eigen::MatrixXd& new_design);

// One exact draw via the Cholesky factor; deterministic given the stream.
Eigen::VectorXd gp_sample(const CovarianceSpec& spec, const Sites& sites,
                          const Eigen::VectorXd& mean, Rng& rng);

}  // namespace stormlevels::spatial
