#include "stormlevels/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace stormlevels::model {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
constexpr double kPiSq6 = 1.6449340668482264364724151666460252;  // zeta(2)
constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

// Grid ends sit just inside the open validity window.
constexpr double kGridXiMin = -0.4999;
constexpr double kGridXiMax = 0.9999;
constexpr int kGridLeft = 171;    // knots on [kGridXiMin, 0]
constexpr int kGridRight = 342;   // knots on [0, kGridXiMax]; 512 unique total
constexpr double kFdStep = 1e-4;  // central difference step for d'(xi)

double normal_logpdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance)) - 0.5 * r * r / variance;
}

// Adaptive Simpson on [a,b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Mean of GEV(0,1,xi): (Gamma(1-xi) - 1)/xi, with the xi -> 0 series.
double gev_unit_mean(double xi) {
  if (std::abs(xi) < 1e-6)
    return kEulerGamma + 0.5 * xi * (kEulerGamma * kEulerGamma + kPiSq6);
  return std::expm1(std::lgamma(1.0 - xi)) / xi;
}

// E[exp(-Y)] for Y ~ GEV(0,1,xi), integrated on the exponential scale
// w = -log F(y), so the integrand is smooth and rapidly decaying.
double gev_unit_exp_neg_mean(double xi) {
  if (std::abs(xi) < 1e-6) return 1.0;  // Y Gumbel: exp(-Y) is Exp(1)
  auto integrand = [xi](double w) -> double {
    if (w <= 0.0) return xi < 0.0 ? std::exp(1.0 / xi) : 0.0;
    const double u = std::expm1(-xi * std::log(w)) / xi;
    return std::exp(-u - w);
  };
  static const double panels[] = {0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0};
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < std::size(panels); ++k)
    total += integrate(integrand, panels[k], panels[k + 1], 1e-13);
  return total;
}

// Natural cubic spline second derivatives (tridiagonal solve).
std::vector<double> spline_moments(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0), u(n, 0.0), z(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    const double alpha = 3.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    const double l = 2.0 * (x[i + 1] - x[i - 1]) - h0 * u[i - 1];
    u[i] = h1 / l;
    z[i] = (alpha - h0 * z[i - 1]) / l;
  }
  for (std::size_t i = n - 1; i-- > 1;) m[i] = z[i] - u[i] * m[i + 1];
  return m;
}

double spline_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& m, double q) {
  const std::size_t n = x.size();
  if (q <= x.front()) q = x.front();
  if (q >= x.back()) q = x.back();
  std::size_t hi = static_cast<std::size_t>(
      std::upper_bound(x.begin(), x.end(), q) - x.begin());
  if (hi == 0) hi = 1;
  if (hi >= n) hi = n - 1;
  const std::size_t lo = hi - 1;
  const double h = x[hi] - x[lo];
  const double a = (x[hi] - q) / h;
  const double b = (q - x[lo]) / h;
  return a * y[lo] + b * y[hi] +
         ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0;
}

}  // namespace

double GammaPrior::logpdf(double x) const {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double InvGammaPrior::logpdf(double x) const {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

void ModelSpec::validate() const {
  if (weight_mode == WeightMode::gibbs_updated && likelihood != Likelihood::weighted)
    throw std::invalid_argument("ModelSpec: gibbs_updated weights require the weighted likelihood");
  if (!(jitter >= 0.0)) throw std::invalid_argument("ModelSpec: jitter must be nonnegative");
  for (const auto& p : process) {
    if (!(p.coef_variance > 0.0) || !(p.sill.shape > 0.0) || !(p.sill.scale > 0.0) ||
        !(p.range.shape > 0.0) || !(p.range.rate > 0.0) || !(p.smoothness.shape > 0.0) ||
        !(p.smoothness.rate > 0.0))
      throw std::invalid_argument("ModelSpec: prior hyperparameters must be positive");
  }
  if (!(pc_lambda_prior.shape > 0.0) || !(pc_lambda_prior.scale > 0.0))
    throw std::invalid_argument("ModelSpec: pc lambda prior hyperparameters must be positive");
}

Eigen::VectorXd LatentState::field(int k) const {
  Eigen::VectorXd v(eta.size());
  for (std::size_t j = 0; j < eta.size(); ++j)
    v(j) = k == 0 ? eta[j].mu() : (k == 1 ? eta[j].log_sigma() : eta[j].xi());
  return v;
}

double site_loglik(const Panel& panel, int site, const gev::GevParams& params) {
  double s = 0.0;
  for (int i = 0; i < panel.n_times(); ++i) {
    if (!panel.present(i, site)) continue;
    s += gev::logpdf(panel.values(i, site), params);
    if (s == kNegInf) return kNegInf;
  }
  return s;
}

double weighted_loglik(const Panel& panel, const std::vector<gev::GevParams>& eta,
                       const dependence::WeightVector& weights) {
  if (eta.size() != weights.size() || static_cast<int>(eta.size()) != panel.n_sites())
    throw std::invalid_argument("weighted_loglik: dimension mismatch");
  double total = 0.0;
  for (int j = 0; j < panel.n_sites(); ++j) {
    const double s = site_loglik(panel, j, eta[j]);
    if (s == kNegInf) return kNegInf;
    total += weights[j] * s;
  }
  return total;
}

double unweighted_loglik(const Panel& panel, const std::vector<gev::GevParams>& eta) {
  return weighted_loglik(panel, eta, dependence::WeightVector::ones(eta.size()));
}

double PcPrior::kld_to_gumbel(double xi) {
  if (!(xi > kPcXiMin && xi < kPcXiMax))
    throw std::domain_error("pc prior: xi outside the validity window (-0.5, 1)");
  // KLD = -H(xi) + E[Y] + E[exp(-Y)], H the GEV entropy, both expectations
  // under GEV(0,1,xi); the Gumbel log density is -y - exp(-y).
  const double entropy = kEulerGamma * (1.0 + xi) + 1.0;
  return -entropy + gev_unit_mean(xi) + gev_unit_exp_neg_mean(xi);
}

PcPrior::PcPrior() {
  left_x_.resize(kGridLeft);
  left_y_.resize(kGridLeft);
  for (int i = 0; i < kGridLeft; ++i) {
    const double xi = kGridXiMin + (0.0 - kGridXiMin) * i / (kGridLeft - 1);
    left_x_[i] = xi;
    left_y_[i] = xi == 0.0 ? 0.0 : std::sqrt(2.0 * std::max(0.0, kld_to_gumbel(xi)));
  }
  left_x_.back() = 0.0;
  left_y_.back() = 0.0;
  right_x_.resize(kGridRight);
  right_y_.resize(kGridRight);
  for (int i = 0; i < kGridRight; ++i) {
    const double xi = kGridXiMax * i / (kGridRight - 1);
    right_x_[i] = xi;
    right_y_[i] = xi == 0.0 ? 0.0 : std::sqrt(2.0 * std::max(0.0, kld_to_gumbel(xi)));
  }
  left_m_ = spline_moments(left_x_, left_y_);
  right_m_ = spline_moments(right_x_, right_y_);
}

double PcPrior::spline_distance(double xi) const {
  if (xi < 0.0) return spline_eval(left_x_, left_y_, left_m_, xi);
  return spline_eval(right_x_, right_y_, right_m_, xi);
}

double PcPrior::distance(double xi) const {
  if (!(xi > kPcXiMin && xi < kPcXiMax))
    throw std::domain_error("pc prior: xi outside the validity window (-0.5, 1)");
  if (xi == 0.0) return 0.0;
  return std::max(0.0, spline_distance(xi));
}

double PcPrior::logprior(double xi, double lambda) const {
  if (!(lambda > 0.0)) throw std::domain_error("pc prior: lambda must be positive");
  const double d = distance(xi);
  // d'(xi) by central difference, one-sided at the window edges
  double lo = xi - kFdStep, hi = xi + kFdStep;
  if (lo <= kGridXiMin) lo = xi;
  if (hi >= kGridXiMax) hi = xi;
  const double dd = (spline_distance(hi) - spline_distance(lo)) / (hi - lo);
  const double abs_dd = std::max(std::abs(dd), 1e-12);
  // each side carries mass 1/2; exponential truncated at the window edge
  const double d_end = xi < 0.0 ? left_y_.front() : right_y_.back();
  const double side_mass = -std::expm1(-lambda * d_end);
  return std::log(0.5) + std::log(lambda) - lambda * d + std::log(abs_dd) - std::log(side_mass);
}

const PcPrior& pc_prior_cache() {
  static const PcPrior cache;
  return cache;
}

double pc_distance(double xi) { return pc_prior_cache().distance(xi); }
double pc_logprior(double xi, double lambda) { return pc_prior_cache().logprior(xi, lambda); }

double log_posterior(const LatentState& state, const Panel& panel, const Sites& sites,
                     const Eigen::MatrixXd& design, const ModelSpec& spec) {
  const int n = panel.n_sites();
  if (state.n_sites() != n || static_cast<int>(sites.size()) != n || design.rows() != n)
    throw std::invalid_argument("log_posterior: dimension mismatch");

  double lp = 0.0;
  switch (spec.likelihood) {
    case Likelihood::weighted:
      lp += weighted_loglik(panel, state.eta, state.weights);
      break;
    case Likelihood::unweighted:
      lp += unweighted_loglik(panel, state.eta);
      break;
    case Likelihood::pc_prior: {
      lp += unweighted_loglik(panel, state.eta);
      for (const auto& p : state.eta) lp += pc_logprior(p.xi(), state.pc_lambda);
      lp += spec.pc_lambda_prior.logpdf(state.pc_lambda);
      break;
    }
  }
  if (lp == kNegInf) return kNegInf;

  for (int k = 0; k < 3; ++k) {
    const spatial::GpField field{state.field(k), state.beta[k], design};
    lp += spatial::gp_logdensity(field, state.cov[k], sites);
    for (Eigen::Index c = 0; c < state.beta[k].size(); ++c)
      lp += normal_logpdf(state.beta[k](c), 0.0, spec.process[k].coef_variance);
    lp += spec.process[k].sill.logpdf(state.cov[k].sill);
    lp += spec.process[k].range.logpdf(state.cov[k].range);
    lp += spec.process[k].smoothness.logpdf(state.cov[k].smoothness);
  }
  return lp;
}

Eigen::VectorXd effective_info(const dependence::WeightVector& weights,
                               const std::vector<int>& site_counts) {
  if (weights.size() != site_counts.size())
    throw std::invalid_argument("effective_info: dimension mismatch");
  Eigen::VectorXd out(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j)
    out(j) = weights[j] * static_cast<double>(site_counts[j]);
  return out;
}

ProcessPrior default_process_prior(const Eigen::VectorXd& field, const Sites& sites,
                                   const Eigen::MatrixXd& design) {
  const Eigen::Index n = field.size();
  ProcessPrior prior;
  if (n < 3 || design.rows() != n) return prior;

  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(field);
  const Eigen::VectorXd resid = field - design * beta;
  double var = resid.squaredNorm() / std::max<double>(1.0, static_cast<double>(n - 1));
  var = std::max(var, 1e-8);

  /* Empirical semivariogram of the exploratory field. Per-site estimation
   * noise shows up as a nugget at short lags; the prior for the latent sill
   * is centred on the partial sill (total variance minus nugget) so that
   * noisy exploratory fits do not masquerade as spatial variation. */
  double dmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dmax = std::max(dmax, distance(sites[i], sites[j]));
  double range_hat = dmax > 0.0 ? 0.5 * dmax : 1.0;
  double sill_hat = var;
  if (dmax > 0.0) {
    constexpr int kBins = 12;
    std::array<double, kBins> num{}, cnt{};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = distance(sites[i], sites[j]);
        int b = static_cast<int>(d / dmax * kBins);
        b = std::min(b, kBins - 1);
        const double diff = resid(i) - resid(j);
        num[b] += 0.5 * diff * diff;
        cnt[b] += 1.0;
      }
    double nugget = 0.0;
    for (int b = 0; b < kBins; ++b) {
      if (cnt[b] < 1.0) continue;
      nugget = num[b] / cnt[b];
      break;
    }
    nugget = std::min(nugget, var);
    sill_hat = std::max(var - nugget, 0.05 * var);
    for (int b = 0; b < kBins; ++b) {
      if (cnt[b] < 1.0) continue;
      if (num[b] / cnt[b] >= nugget + 0.632 * sill_hat) {
        range_hat = (b + 0.5) / kBins * dmax;
        break;
      }
    }
  }

  prior.sill = InvGammaPrior{2.0, sill_hat};       // mean sill_hat
  prior.range = GammaPrior{2.0, 2.0 / range_hat};  // mean range_hat
  prior.smoothness = GammaPrior{2.0, 2.0};         // mean 1
  return prior;
}

ModelSpec resolve_hyperpriors(const ModelSpec& spec, const std::array<Eigen::VectorXd, 3>& fields,
                              const Sites& sites, const Eigen::MatrixXd& design) {
  ModelSpec out = spec;
  if (!spec.auto_hyperpriors) return out;
  for (int k = 0; k < 3; ++k) {
    const double coef_var = out.process[k].coef_variance;
    out.process[k] = default_process_prior(fields[k], sites, design);
    out.process[k].coef_variance = coef_var;
  }
  out.auto_hyperpriors = false;
  return out;
}

}  // namespace stormlevels::model
