#include "stormlevels/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stormlevels/optim.hpp"
#include "stormlevels/rng.hpp"
#include "stormlevels/threading.hpp"

namespace stormlevels::sampler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-process cached pieces: precision, its log-determinant contribution,
// Q X, and the working residual r = Q (v - X beta).
struct ProcessCache {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd QX;
  Eigen::VectorXd r;
  double logdet = 0.0;  // sum of log diagonal of the Cholesky factor
};

struct CovPieces {
  Eigen::MatrixXd Q;
  double logdet = 0.0;
  double quad = 0.0;  // residual' Q residual
};

bool factor_cov(const Eigen::MatrixXd& dist, const spatial::CovarianceSpec& spec,
                const Eigen::VectorXd& resid, CovPieces& out) {
  Eigen::MatrixXd cov;
  try {
    cov = spatial::cov_matrix_from_dist(spec, dist, true);
  } catch (const std::invalid_argument&) {
    return false;
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  try {
    llt = spatial::safe_llt(std::move(cov), spec.jitter);
  } catch (const std::runtime_error&) {
    return false;
  }
  out.logdet = 0.0;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) out.logdet += std::log(llt.matrixL()(i, i));
  out.quad = llt.matrixL().solve(resid).squaredNorm();
  out.Q = llt.solve(Eigen::MatrixXd::Identity(dist.rows(), dist.cols()));
  return true;
}

double hyper_logprior(const model::ProcessPrior& prior, const spatial::CovarianceSpec& spec) {
  // includes the Jacobian of the log-scale parameterisation
  return prior.sill.logpdf(spec.sill) + prior.range.logpdf(spec.range) +
         prior.smoothness.logpdf(spec.smoothness) + std::log(spec.sill) +
         std::log(spec.range) + std::log(spec.smoothness);
}

struct BlockCounter {
  long window_accept = 0;
  long window_attempt = 0;
  long total_accept = 0;
  long total_attempt = 0;

  void record(bool accepted, bool post_burnin) {
    ++window_attempt;
    window_accept += accepted ? 1 : 0;
    if (post_burnin) {
      ++total_attempt;
      total_accept += accepted ? 1 : 0;
    }
  }
  double window_rate() const {
    return window_attempt == 0 ? 0.0 : static_cast<double>(window_accept) / window_attempt;
  }
  double total_rate() const {
    return total_attempt == 0 ? 0.0 : static_cast<double>(total_accept) / total_attempt;
  }
  void reset_window() { window_accept = window_attempt = 0; }
};

double mean_value(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("sampler: iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations)
    throw std::invalid_argument("sampler: burn_in must satisfy 0 <= burn_in < iterations");
  if (thin < 1 || thin > iterations - burn_in)
    throw std::invalid_argument("sampler: thin must satisfy 1 <= thin <= iterations - burn_in");
  if (adapt_window < 1) throw std::invalid_argument("sampler: adapt_window must be positive");
  if (chains < 1) throw std::invalid_argument("sampler: chains must be positive");
  if (!(target_accept_block > 0.0 && target_accept_block < 1.0) ||
      !(target_accept_scalar > 0.0 && target_accept_scalar < 1.0))
    throw std::invalid_argument("sampler: acceptance targets must lie in (0,1)");
}

void FitData::validate() const {
  panel.validate();
  const int n = panel.n_sites();
  if (static_cast<int>(sites.size()) != n)
    throw std::invalid_argument("fit data: sites do not match panel columns");
  if (design.rows() != n) throw std::invalid_argument("fit data: design rows do not match sites");
  if (design.cols() < 1) throw std::invalid_argument("fit data: design needs at least one column");
  if (!site_ids.empty() && static_cast<int>(site_ids.size()) != n)
    throw std::invalid_argument("fit data: site ids do not match panel columns");
  for (int j = 0; j < n; ++j)
    if (panel.site_count(j) < 1)
      throw std::invalid_argument("fit data: site " + std::to_string(j) + " has no observations");
}

gev::GevParams fit_gev_ml(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("fit_gev_ml: need at least two observations");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= std::max(1.0, n - 1.0);
  const double sd = std::max(std::sqrt(var), 1e-6 * (std::abs(mean) + 1.0));

  // Gumbel moment estimates as the starting point
  const double sigma0 = sd * std::sqrt(6.0) / M_PI;
  const double mu0 = mean - 0.57721566490153286 * sigma0;
  Eigen::VectorXd x0(3);
  x0 << mu0, std::log(sigma0), 0.1;

  auto negll = [&values](const Eigen::VectorXd& p) -> double {
    const auto params = gev::GevParams::try_make(p(0), p(1), p(2));
    if (!params) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double v : values) {
      s -= gev::logpdf(v, *params);
      if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
    }
    return s;
  };

  const auto res = nelder_mead(negll, x0, 0.25, 1e-12, 1500);
  if (std::isfinite(res.value)) {
    if (auto p = gev::GevParams::try_make(res.x(0), res.x(1), res.x(2))) return *p;
  }
  return gev::GevParams(mu0, std::log(sigma0), 0.1);
}

model::LatentState auto_init(const FitData& data, const model::ModelSpec& spec) {
  data.validate();
  spec.validate();
  const int n = data.panel.n_sites();
  model::LatentState state(n);
  state.eta.reserve(n);

  const bool pc = spec.likelihood == model::Likelihood::pc_prior;
  const double xi_lo = pc ? model::kPcXiMin + 0.05 : -2.0;
  const double xi_hi = pc ? model::kPcXiMax - 0.05 : 2.0;
  for (int j = 0; j < n; ++j) {
    std::vector<double> y;
    for (int i = 0; i < data.panel.n_times(); ++i)
      if (data.panel.present(i, j)) y.push_back(data.panel.values(i, j));
    gev::GevParams ml = y.size() >= 2 ? fit_gev_ml(y)
                                      : gev::GevParams(y.empty() ? 0.0 : y[0], 0.0, 0.1);
    const double xi = std::clamp(ml.xi(), xi_lo, xi_hi);
    state.eta.push_back(gev::GevParams(ml.mu(), ml.log_sigma(), xi));
  }

  std::array<Eigen::VectorXd, 3> fields{state.field(0), state.field(1), state.field(2)};
  const auto resolved = model::resolve_hyperpriors(spec, fields, data.sites, data.design);
  for (int k = 0; k < 3; ++k) {
    state.beta[k] = data.design.colPivHouseholderQr().solve(fields[k]);
    spatial::CovarianceSpec cov;
    cov.kind = spec.covariance;
    cov.sill = resolved.process[k].sill.mean();
    cov.range = resolved.process[k].range.mean();
    cov.smoothness = 1.0;
    cov.jitter = spec.jitter;
    cov.validate();
    state.cov[k] = cov;
  }

  if (spec.likelihood == model::Likelihood::weighted) {
    const auto z = dependence::ecdf_transform(data.panel);
    state.weights = dependence::weights_from_frechet(z, data.sites, spec.weights).weights;
  }
  state.pc_lambda = 1.0;
  return state;
}

double adapt_step(double scale, double accept_rate, double target, double kappa) {
  const double next = scale * std::exp(kappa * (accept_rate - target));
  return std::clamp(next, 1e-8, 1e6);
}

ChainOutput run_chain(const FitData& data, const model::ModelSpec& spec0,
                      const SamplerConfig& cfg, const std::optional<model::LatentState>& init) {
  const auto t_start = std::chrono::steady_clock::now();
  data.validate();
  cfg.validate();
  spec0.validate();

  const int n = data.panel.n_sites();
  const Eigen::Index p = data.design.cols();

  model::LatentState state = init ? *init : auto_init(data, spec0);
  if (state.n_sites() != n) throw std::invalid_argument("run_chain: init state has wrong size");
  for (int k = 0; k < 3; ++k) {
    if (state.beta[k].size() != p)
      throw std::invalid_argument("run_chain: init beta does not match design");
    if (state.cov[k].kind != spec0.covariance)
      throw std::invalid_argument("run_chain: init covariance kind does not match the model");
  }

  std::array<Eigen::VectorXd, 3> fields{state.field(0), state.field(1), state.field(2)};
  const model::ModelSpec spec =
      model::resolve_hyperpriors(spec0, fields, data.sites, data.design);

  const bool weighted = spec.likelihood == model::Likelihood::weighted;
  const bool pc = spec.likelihood == model::Likelihood::pc_prior;
  const bool gibbs_weights =
      weighted && spec.weight_mode == model::WeightMode::gibbs_updated && cfg.update.weights;

  const Eigen::MatrixXd dist = distance_matrix(data.sites);
  const Eigen::MatrixXd& X = data.design;

  // field vectors and per-process caches
  std::array<Eigen::VectorXd, 3> v = fields;
  std::array<ProcessCache, 3> proc;
  auto rebuild_process = [&](int k) {
    CovPieces pieces;
    const Eigen::VectorXd resid = v[k] - X * state.beta[k];
    if (!factor_cov(dist, state.cov[k], resid, pieces))
      throw std::runtime_error("run_chain: covariance factorization failed at initialization");
    proc[k].Q = std::move(pieces.Q);
    proc[k].logdet = pieces.logdet;
    proc[k].QX = proc[k].Q * X;
    proc[k].r = proc[k].Q * resid;
  };
  for (int k = 0; k < 3; ++k) rebuild_process(k);

  std::vector<double> site_ll(n);
  for (int j = 0; j < n; ++j) site_ll[j] = model::site_loglik(data.panel, j, state.eta[j]);

  if (!std::isfinite(model::log_posterior(state, data.panel, data.sites, X, spec)))
    throw std::runtime_error("run_chain: log posterior is not finite at initialization");

  // proposal scales
  std::vector<Eigen::Array3d> eta_scale(n);
  for (int j = 0; j < n; ++j)
    eta_scale[j] = Eigen::Array3d{0.25 * state.eta[j].sigma(), 0.12, 0.08};
  std::array<Eigen::Array3d, 3> hyper_scale;
  hyper_scale.fill(Eigen::Array3d{0.25, 0.25, 0.15});
  double lambda_scale = 0.5;

  std::vector<BlockCounter> eta_count(n);
  std::array<BlockCounter, 3> hyper_count;
  BlockCounter lambda_count;

  ChainOutput out;
  out.config = cfg;
  out.resolved_spec = spec;
  out.draws.reserve(cfg.n_stored());

  const Rng master(cfg.seed);

  for (int t = 1; t <= cfg.iterations; ++t) {
    const bool post_burnin = t > cfg.burn_in;

    // (1) per-site random-walk MH on eta, joint 3-dimensional proposal
    if (cfg.update.eta) {
      for (int j = 0; j < n; ++j) {
        Rng g = master.derive(t, 1, j);
        const double z0 = g.normal(), z1 = g.normal(), z2 = g.normal();
        const double logu = std::log(g.uniform());
        const auto& cur = state.eta[j];
        const auto prop = gev::GevParams::try_make(cur.mu() + eta_scale[j](0) * z0,
                                                   cur.log_sigma() + eta_scale[j](1) * z1,
                                                   cur.xi() + eta_scale[j](2) * z2);
        bool accepted = false;
        if (prop && (!pc || (prop->xi() > model::kPcXiMin && prop->xi() < model::kPcXiMax))) {
          const double ll_new = model::site_loglik(data.panel, j, *prop);
          if (ll_new != kNegInf) {
            const double w = weighted ? state.weights[j] : 1.0;
            double delta = w * (ll_new - site_ll[j]);
            if (pc)
              delta += model::pc_logprior(prop->xi(), state.pc_lambda) -
                       model::pc_logprior(cur.xi(), state.pc_lambda);
            const Eigen::Array3d dv{prop->mu() - cur.mu(), prop->log_sigma() - cur.log_sigma(),
                                    prop->xi() - cur.xi()};
            for (int k = 0; k < 3; ++k)
              delta += -dv(k) * proc[k].r(j) - 0.5 * dv(k) * dv(k) * proc[k].Q(j, j);
            if (logu < delta) {
              accepted = true;
              state.eta[j] = *prop;
              site_ll[j] = ll_new;
              for (int k = 0; k < 3; ++k) {
                if (dv(k) == 0.0) continue;
                v[k](j) += dv(k);
                proc[k].r += proc[k].Q.col(j) * dv(k);
              }
            }
          }
        }
        eta_count[j].record(accepted, post_burnin);
      }
    }

    // (2) conjugate normal draw of each beta block given its process
    if (cfg.update.beta) {
      for (int k = 0; k < 3; ++k) {
        Rng g = master.derive(t, 2, k);
        const double tau2 = spec.process[k].coef_variance;
        Eigen::MatrixXd A = X.transpose() * proc[k].QX;
        A.diagonal().array() += 1.0 / tau2;
        const Eigen::VectorXd b =
            X.transpose() * proc[k].r + (X.transpose() * proc[k].QX) * state.beta[k];
        Eigen::LLT<Eigen::MatrixXd> lltA(A);
        if (lltA.info() != Eigen::Success)
          throw std::runtime_error("run_chain: coefficient precision not positive definite");
        const Eigen::VectorXd mean = lltA.solve(b);
        Eigen::VectorXd z(p);
        for (Eigen::Index c = 0; c < p; ++c) z(c) = g.normal();
        const Eigen::VectorXd beta_new = mean + lltA.matrixU().solve(z);
        proc[k].r -= proc[k].QX * (beta_new - state.beta[k]);
        state.beta[k] = beta_new;
      }
    }

    // (3) MH on log covariance hyperparameters, one 3-dimensional block per process
    if (cfg.update.hyper) {
      for (int k = 0; k < 3; ++k) {
        Rng g = master.derive(t, 3, k);
        const double z0 = g.normal(), z1 = g.normal(), z2 = g.normal();
        const double logu = std::log(g.uniform());
        const auto& cur = state.cov[k];
        spatial::CovarianceSpec prop = cur;
        prop.sill = std::exp(std::log(cur.sill) + hyper_scale[k](0) * z0);
        prop.range = std::exp(std::log(cur.range) + hyper_scale[k](1) * z1);
        prop.smoothness = std::exp(std::log(cur.smoothness) + hyper_scale[k](2) * z2);
        bool accepted = false;
        const bool in_support =
            prop.kind == spatial::CovKind::powered_exponential
                ? prop.smoothness <= 2.0
                : prop.smoothness <= 25.0;  // K_nu overflows beyond, prior mass is negligible
        if (in_support) {
          const Eigen::VectorXd resid = v[k] - X * state.beta[k];
          CovPieces pieces;
          if (factor_cov(dist, prop, resid, pieces)) {
            const double quad_cur = resid.dot(proc[k].r);
            const double gp_new = -pieces.logdet - 0.5 * pieces.quad;
            const double gp_cur = -proc[k].logdet - 0.5 * quad_cur;
            const double delta = gp_new + hyper_logprior(spec.process[k], prop) - gp_cur -
                                 hyper_logprior(spec.process[k], cur);
            if (logu < delta) {
              accepted = true;
              state.cov[k] = prop;
              proc[k].Q = std::move(pieces.Q);
              proc[k].logdet = pieces.logdet;
              proc[k].QX = proc[k].Q * X;
              proc[k].r = proc[k].Q * resid;
            }
          }
        }
        hyper_count[k].record(accepted, post_burnin);
      }
    }

    // (4) MH on log lambda for the shape-penalty model
    if (pc && cfg.update.pc_lambda) {
      Rng g = master.derive(t, 4, 0);
      const double z = g.normal();
      const double logu = std::log(g.uniform());
      const double cur = state.pc_lambda;
      const double prop = std::exp(std::log(cur) + lambda_scale * z);
      double delta = spec.pc_lambda_prior.logpdf(prop) - spec.pc_lambda_prior.logpdf(cur) +
                     std::log(prop) - std::log(cur);
      for (const auto& e : state.eta)
        delta += model::pc_logprior(e.xi(), prop) - model::pc_logprior(e.xi(), cur);
      const bool accepted = logu < delta;
      if (accepted) state.pc_lambda = prop;
      lambda_count.record(accepted, post_burnin);
    }

    // (5) plug-in weight update from the current margins
    if (gibbs_weights) {
      try {
        const auto z = dependence::gev_transform(data.panel, state.eta);
        state.weights =
            dependence::weights_from_frechet(z, data.sites, spec.weights).weights;
      } catch (const std::exception&) {
        ++out.weight_update_failures;  // keep the previous weights
      }
    }

    // burn-in adaptation, frozen afterwards
    if (!post_burnin && t % cfg.adapt_window == 0) {
      const double kappa = 1.0 / std::sqrt(static_cast<double>(t / cfg.adapt_window));
      for (int j = 0; j < n; ++j) {
        if (eta_count[j].window_attempt > 0) {
          const double f = adapt_step(1.0, eta_count[j].window_rate(),
                                      cfg.target_accept_block, kappa);
          eta_scale[j] = (eta_scale[j] * f).max(1e-8).min(1e6);
        }
        eta_count[j].reset_window();
      }
      for (int k = 0; k < 3; ++k) {
        if (hyper_count[k].window_attempt > 0) {
          const double f = adapt_step(1.0, hyper_count[k].window_rate(),
                                      cfg.target_accept_block, kappa);
          hyper_scale[k] = (hyper_scale[k] * f).max(1e-8).min(1e6);
        }
        hyper_count[k].reset_window();
      }
      if (lambda_count.window_attempt > 0)
        lambda_scale = adapt_step(lambda_scale, lambda_count.window_rate(),
                                  cfg.target_accept_scalar, kappa);
      lambda_count.reset_window();
    }

    // periodic exact refresh of the working residuals
    if (t % 500 == 0)
      for (int k = 0; k < 3; ++k) proc[k].r = proc[k].Q * (v[k] - X * state.beta[k]);

    if (post_burnin && (t - cfg.burn_in) % cfg.thin == 0) {
      Draw d;
      d.mu = v[0];
      d.log_sigma = v[1];
      d.xi = v[2];
      d.beta = state.beta;
      d.cov = state.cov;
      d.pc_lambda = state.pc_lambda;
      d.weights = Eigen::Map<const Eigen::VectorXd>(state.weights.values().data(), n);
      out.draws.push_back(std::move(d));
      if (gibbs_weights)
        out.weight_trace.push_back(
            Eigen::Map<const Eigen::VectorXd>(state.weights.values().data(), n));
    }
  }

  std::vector<double> eta_rates(n);
  for (int j = 0; j < n; ++j) eta_rates[j] = eta_count[j].total_rate();
  out.accept_rates["eta"] = mean_value(eta_rates);
  for (int k = 0; k < 3; ++k)
    out.accept_rates[std::string("hyper.") + model::kProcessNames[k]] =
        hyper_count[k].total_rate();
  if (pc) out.accept_rates["pc_lambda"] = lambda_count.total_rate();

  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

std::vector<ChainOutput> run_chains(const FitData& data, const model::ModelSpec& spec,
                                    const SamplerConfig& cfg, int threads) {
  cfg.validate();
  std::vector<ChainOutput> outputs(cfg.chains);
  const Rng master(cfg.seed);
  parallel_for_jobs(cfg.chains, threads, [&](int c) {
    SamplerConfig chain_cfg = cfg;
    if (c > 0) {
      Rng derived = master.derive(90, static_cast<std::uint64_t>(c));
      chain_cfg.seed = derived.next_u64();
    }
    outputs[c] = run_chain(data, spec, chain_cfg);
  });
  return outputs;
}

// ------------------------------------------------------------ diagnostics

std::pair<double, double> hpd_interval(std::vector<double> draws, double mass) {
  if (draws.empty()) throw std::invalid_argument("hpd_interval: no draws");
  if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("hpd_interval: bad mass");
  std::sort(draws.begin(), draws.end());
  const std::size_t nn = draws.size();
  std::size_t m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(nn)));
  m = std::clamp<std::size_t>(m, 1, nn);
  std::size_t best = 0;
  double width = draws[m - 1] - draws[0];
  for (std::size_t i = 1; i + m <= nn; ++i) {
    const double w = draws[i + m - 1] - draws[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {draws[best], draws[best + m - 1]};
}

ScalarDiagnostics diagnose_scalar(const std::vector<double>& draws, int max_lag, double hpd_mass) {
  const std::size_t nn = draws.size();
  if (nn < 2) throw std::invalid_argument("diagnose_scalar: need at least two draws");
  ScalarDiagnostics s;
  s.mean = mean_value(draws);
  double ss = 0.0;
  for (double x : draws) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(nn - 1));

  if (max_lag <= 0) max_lag = static_cast<int>(std::min<std::size_t>(1000, nn - 1));
  s.acf.assign(max_lag + 1, 0.0);
  if (ss > 0.0) {
    for (int lag = 0; lag <= max_lag; ++lag) {
      double c = 0.0;
      for (std::size_t i = 0; i + lag < nn; ++i)
        c += (draws[i] - s.mean) * (draws[i + lag] - s.mean);
      s.acf[lag] = c / ss;
    }
  } else {
    s.acf[0] = 1.0;
  }

  // Geyer initial positive sequence for the integrated autocorrelation time
  double tau = -1.0;
  for (int m = 0; 2 * m + 1 <= max_lag; ++m) {
    const double gamma = s.acf[2 * m] + s.acf[2 * m + 1];
    if (gamma <= 0.0) break;
    tau += 2.0 * gamma;
  }
  s.iact = std::max(tau, 1.0);
  s.ess = static_cast<double>(nn) / s.iact;

  const auto hpd = hpd_interval(draws, hpd_mass);
  s.hpd_lo = hpd.first;
  s.hpd_hi = hpd.second;
  return s;
}

std::vector<std::string> draw_column_names(const ChainOutput& output,
                                           const std::vector<std::string>& site_ids) {
  if (output.draws.empty()) throw std::invalid_argument("chain output has no draws");
  const auto& first = output.draws.front();
  const std::size_t n = static_cast<std::size_t>(first.mu.size());
  std::vector<std::string> ids = site_ids;
  if (ids.empty())
    for (std::size_t j = 0; j < n; ++j) ids.push_back(std::to_string(j + 1));
  if (ids.size() != n) throw std::invalid_argument("site id count does not match draws");

  std::vector<std::string> names;
  for (const char* fieldname : {"mu", "logsigma", "xi"})
    for (std::size_t j = 0; j < n; ++j) names.push_back(std::string(fieldname) + "." + ids[j]);
  for (int k = 0; k < 3; ++k)
    for (Eigen::Index c = 0; c < first.beta[k].size(); ++c)
      names.push_back(std::string("beta.") + model::kProcessNames[k] + "." + std::to_string(c));
  for (int k = 0; k < 3; ++k) {
    names.push_back(std::string("sill.") + model::kProcessNames[k]);
    names.push_back(std::string("range.") + model::kProcessNames[k]);
    names.push_back(std::string("smooth.") + model::kProcessNames[k]);
  }
  if (output.resolved_spec.likelihood == model::Likelihood::pc_prior) names.push_back("lambda");
  for (std::size_t j = 0; j < n; ++j) names.push_back("w." + ids[j]);
  return names;
}

std::vector<double> draw_column(const ChainOutput& output, std::size_t column) {
  if (output.draws.empty()) throw std::invalid_argument("chain output has no draws");
  const auto& first = output.draws.front();
  const std::size_t n = static_cast<std::size_t>(first.mu.size());
  const bool pc = output.resolved_spec.likelihood == model::Likelihood::pc_prior;

  auto value_of = [&](const Draw& d) -> double {
    std::size_t c = column;
    if (c < n) return d.mu(c);
    c -= n;
    if (c < n) return d.log_sigma(c);
    c -= n;
    if (c < n) return d.xi(c);
    c -= n;
    for (int k = 0; k < 3; ++k) {
      const std::size_t pk = static_cast<std::size_t>(d.beta[k].size());
      if (c < pk) return d.beta[k](c);
      c -= pk;
    }
    for (int k = 0; k < 3; ++k) {
      if (c == 0) return d.cov[k].sill;
      if (c == 1) return d.cov[k].range;
      if (c == 2) return d.cov[k].smoothness;
      c -= 3;
    }
    if (pc) {
      if (c == 0) return d.pc_lambda;
      c -= 1;
    }
    if (c < n) return d.weights(c);
    throw std::out_of_range("draw_column: column index out of range");
  };

  std::vector<double> col;
  col.reserve(output.draws.size());
  for (const auto& d : output.draws) col.push_back(value_of(d));
  return col;
}

DiagnosticsReport diagnostics(const ChainOutput& output,
                              const std::vector<std::string>& site_ids) {
  if (output.draws.size() < 100)
    throw std::invalid_argument("diagnostics: at least 100 stored draws required");
  DiagnosticsReport report;
  report.names = draw_column_names(output, site_ids);
  report.stats.reserve(report.names.size());
  const int max_lag = static_cast<int>(std::min<std::size_t>(500, output.draws.size() - 1));
  for (std::size_t c = 0; c < report.names.size(); ++c)
    report.stats.push_back(diagnose_scalar(draw_column(output, c), max_lag));
  return report;
}

}  // namespace stormlevels::sampler
