#include "stormlevels/gev.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stormlevels::gev {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool valid_params(double mu, double log_sigma, double xi) {
  return std::isfinite(mu) && std::isfinite(log_sigma) && std::isfinite(xi) &&
         std::abs(xi) < kXiBound;
}
}  // namespace

GevParams::GevParams(double mu, double log_sigma, double xi) {
  if (!valid_params(mu, log_sigma, xi))
    throw std::invalid_argument("GevParams: parameters must be finite with |xi| < " +
                                std::to_string(kXiBound));
  mu_ = mu;
  log_sigma_ = log_sigma;
  xi_ = xi;
  sigma_ = std::exp(log_sigma);
}

GevParams::GevParams(Unchecked, double mu, double log_sigma, double xi)
    : mu_(mu), log_sigma_(log_sigma), xi_(xi), sigma_(std::exp(log_sigma)) {}

std::optional<GevParams> GevParams::try_make(double mu, double log_sigma, double xi) {
  if (!valid_params(mu, log_sigma, xi)) return std::nullopt;
  return GevParams(Unchecked{}, mu, log_sigma, xi);
}

Probability::Probability(double p) : p_(p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("Probability: value must lie strictly inside (0,1)");
}

double cdf(double y, const GevParams& params) {
  const double u = (y - params.mu()) / params.sigma();
  const double xi = params.xi();
  if (std::abs(xi) < kXiGumbelEps) return std::exp(-std::exp(-u));
  const double t = 1.0 + xi * u;
  if (t <= 0.0) return xi > 0.0 ? 0.0 : 1.0;
  // t^(-1/xi) evaluated as exp(-log1p(xi u)/xi) keeps the cdf/quantile
  // round trip tight across the whole parameter range.
  return std::exp(-std::exp(-std::log1p(xi * u) / xi));
}

double logpdf(double y, const GevParams& params) {
  const double u = (y - params.mu()) / params.sigma();
  const double xi = params.xi();
  if (std::abs(xi) < kXiGumbelEps) return -params.log_sigma() - u - std::exp(-u);
  const double t = 1.0 + xi * u;
  if (t <= 0.0) return kNegInf;
  const double log_t = std::log1p(xi * u);
  return -params.log_sigma() - (1.0 / xi + 1.0) * log_t - std::exp(-log_t / xi);
}

double quantile(Probability p, const GevParams& params) {
  const double w = -std::log(p.value());  // > 0
  const double xi = params.xi();
  if (std::abs(xi) < kXiGumbelEps) return params.mu() - params.sigma() * std::log(w);
  return params.mu() + params.sigma() * std::expm1(-xi * std::log(w)) / xi;
}

double to_frechet(double cdf_value) {
  if (!(cdf_value > 0.0) || !(cdf_value < 1.0))
    throw std::invalid_argument("to_frechet: cdf value must lie strictly inside (0,1)");
  return -1.0 / std::log(cdf_value);
}

}  // namespace stormlevels::gev
