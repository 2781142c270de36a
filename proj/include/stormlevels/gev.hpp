#pragma once

#include <optional>

namespace stormlevels::gev {

// Shape values inside this band are treated as the Gumbel limit; the direct
// formulas lose all precision there from the (t^-xi - 1)/xi cancellation.
inline constexpr double kXiGumbelEps = 1e-8;
// Shapes beyond this are meaningless for annual-maxima work and are rejected.
inline constexpr double kXiBound = 5.0;

/* Marginal parameter triple (mu, log sigma, xi) at one location. The scale
 * is stored on the log scale because the latent spatial process lives there;
 * sigma() is derived. */
class GevParams {
 public:
  GevParams(double mu, double log_sigma, double xi);

  static std::optional<GevParams> try_make(double mu, double log_sigma, double xi);

  double mu() const { return mu_; }
  double log_sigma() const { return log_sigma_; }
  double xi() const { return xi_; }
  double sigma() const { return sigma_; }

 private:
  struct Unchecked {};
  GevParams(Unchecked, double mu, double log_sigma, double xi);

  double mu_;
  double log_sigma_;
  double xi_;
  double sigma_;
};

// Probability constrained to the open interval (0,1); endpoints rejected.
class Probability {
 public:
  explicit Probability(double p);
  double value() const { return p_; }

 private:
  double p_;
};

// Distribution function. Total on valid params: returns 0 below the lower
// support endpoint (xi > 0) and 1 above the upper endpoint (xi < 0).
double cdf(double y, const GevParams& params);

// Log density; -infinity exactly when y is outside the support.
double logpdf(double y, const GevParams& params);

// Quantile function, the exact inverse of cdf on the support interior.
double quantile(Probability p, const GevParams& params);

// z = -1 / log(u) for u strictly inside (0,1); unit Frechet scale.
double to_frechet(double cdf_value);

}  // namespace stormlevels::gev
