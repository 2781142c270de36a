#include "stormlevels/spatial.hpp"

#include <cmath>
#include <stdexcept>

namespace stormlevels::spatial {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMaxJitter = 1e-4;
}  // namespace

void CovarianceSpec::validate() const {
  if (!(sill > 0.0) || !(range > 0.0) || !(smoothness > 0.0))
    throw std::invalid_argument("CovarianceSpec: sill, range and smoothness must be positive");
  if (kind == CovKind::powered_exponential && smoothness > 2.0)
    throw std::invalid_argument("CovarianceSpec: powered exponential smoothness must be in (0,2]");
  if (jitter < 0.0) throw std::invalid_argument("CovarianceSpec: jitter must be nonnegative");
}

double CovarianceSpec::operator()(double d) const {
  if (d <= 0.0) return sill;
  if (kind == CovKind::powered_exponential)
    return sill * std::exp(-std::pow(d / range, smoothness));
  const double x = d / range;
  if (x < 1e-12) return sill;  // K_nu blows up before the limit value does
  const double nu = smoothness;
  const double c = std::exp((1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(x));
  const double k = std::cyl_bessel_k(nu, x);
  const double v = sill * c * k;
  return std::isfinite(v) ? v : 0.0;  // large-distance underflow
}

Eigen::MatrixXd cov_matrix_from_dist(const CovarianceSpec& spec, const Eigen::MatrixXd& dist,
                                     bool add_jitter) {
  spec.validate();
  Eigen::MatrixXd c(dist.rows(), dist.cols());
  for (Eigen::Index i = 0; i < dist.rows(); ++i)
    for (Eigen::Index j = 0; j < dist.cols(); ++j) c(i, j) = spec(dist(i, j));
  if (add_jitter) {
    if (c.rows() != c.cols())
      throw std::invalid_argument("cov_matrix_from_dist: jitter requires a square matrix");
    c.diagonal().array() += spec.jitter;
  }
  return c;
}

Eigen::MatrixXd cov_matrix(const CovarianceSpec& spec, const Sites& sites) {
  return cov_matrix_from_dist(spec, distance_matrix(sites), true);
}

Eigen::MatrixXd cov_matrix(const CovarianceSpec& spec, const Sites& a, const Sites& b) {
  return cov_matrix_from_dist(spec, distance_matrix(a, b), false);
}

Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd cov, double base_jitter) {
  double added = 0.0;
  double next = base_jitter > 0.0 ? base_jitter * 10.0 : 1e-8;
  while (true) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt;
    if (next > kMaxJitter)
      throw std::runtime_error("safe_llt: factorization failed after jitter escalation");
    cov.diagonal().array() += next - added;
    added = next;
    next *= 10.0;
  }
}

double gp_logdensity(const GpField& field, const CovarianceSpec& spec, const Sites& sites) {
  const Eigen::Index n = field.values.size();
  if (static_cast<Eigen::Index>(sites.size()) != n || field.design.rows() != n ||
      field.design.cols() != field.beta.size())
    throw std::invalid_argument("gp_logdensity: inconsistent dimensions");
  const auto llt = safe_llt(cov_matrix(spec, sites), spec.jitter);
  const Eigen::VectorXd r = field.values - field.design * field.beta;
  const Eigen::VectorXd half = llt.matrixL().solve(r);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * static_cast<double>(n) * std::log(kTwoPi) - logdet - 0.5 * half.squaredNorm();
}

KrigeResult krige(const GpField& field, const CovarianceSpec& spec, const Sites& obs_sites,
                  const Sites& new_sites, const Eigen::MatrixXd& new_design) {
  spec.validate();
  if (static_cast<Eigen::Index>(new_sites.size()) != new_design.rows() ||
      new_design.cols() != field.beta.size())
    throw std::invalid_argument("krige: design at new sites has wrong shape");
  KrigeResult out;
  const Eigen::MatrixXd prior_cov = cov_matrix_from_dist(spec, distance_matrix(new_sites), false);
  const Eigen::VectorXd prior_mean = new_design * field.beta;
  if (obs_sites.empty()) {
    out.mean = prior_mean;
    out.cov = prior_cov;
    return out;
  }
  if (static_cast<Eigen::Index>(obs_sites.size()) != field.values.size())
    throw std::invalid_argument("krige: observed sites and values differ in length");
  const auto llt = safe_llt(cov_matrix(spec, obs_sites), spec.jitter);
  const Eigen::MatrixXd cross = cov_matrix(spec, new_sites, obs_sites);  // m x n
  const Eigen::VectorXd resid = field.values - field.design * field.beta;
  out.mean = prior_mean + cross * llt.solve(resid);
  out.cov = prior_cov - cross * llt.solve(cross.transpose());
  return out;
}

Eigen::VectorXd gp_sample(const CovarianceSpec& spec, const Sites& sites,
                          const Eigen::VectorXd& mean, Rng& rng) {
  if (static_cast<Eigen::Index>(sites.size()) != mean.size())
    throw std::invalid_argument("gp_sample: mean length must match site count");
  const auto llt = safe_llt(cov_matrix(spec, sites), spec.jitter);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + llt.matrixL() * z;
}

}  // namespace stormlevels::spatial
