#include <doctest.h>

#include <cmath>

#include "stormlevels/sampler.hpp"
#include "stormlevels/simulate.hpp"
#include "support/oracles.hpp"

using namespace stormlevels;

namespace {

// Independent GEV data on a small site layout.
sampler::FitData synthetic_fit_data(int n_sites, int n_times, std::uint64_t seed) {
  simulate::GeneratorConfig cfg = simulate::default_config();
  cfg.n_sites = n_sites;
  cfg.n_times = n_times;
  cfg.dependence = simulate::Dependence::independent;
  cfg.seed = seed;
  const auto ds = simulate::assemble_dataset(cfg);
  sampler::FitData data;
  data.panel = ds.panel;
  data.sites = ds.sites;
  data.site_ids = ds.site_ids;
  data.design.resize(n_sites, 3);
  for (int j = 0; j < n_sites; ++j) data.design.row(j) << 1.0, ds.sites[j].x, ds.sites[j].y;
  return data;
}

bool draws_equal(const sampler::ChainOutput& a, const sampler::ChainOutput& b) {
  if (a.draws.size() != b.draws.size()) return false;
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    if (a.draws[i].mu != b.draws[i].mu) return false;
    if (a.draws[i].log_sigma != b.draws[i].log_sigma) return false;
    if (a.draws[i].xi != b.draws[i].xi) return false;
    if (a.draws[i].weights != b.draws[i].weights) return false;
    for (int k = 0; k < 3; ++k) {
      if (a.draws[i].beta[k] != b.draws[i].beta[k]) return false;
      if (a.draws[i].cov[k].sill != b.draws[i].cov[k].sill) return false;
      if (a.draws[i].cov[k].range != b.draws[i].cov[k].range) return false;
      if (a.draws[i].cov[k].smoothness != b.draws[i].cov[k].smoothness) return false;
    }
    if (a.draws[i].pc_lambda != b.draws[i].pc_lambda) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("adapt_step direction and fixed point") {
  CHECK(sampler::adapt_step(0.5, 0.23, 0.23) == 0.5);
  CHECK(sampler::adapt_step(0.5, 1.0, 0.23) > 0.5);
  CHECK(sampler::adapt_step(0.5, 0.0, 0.23) < 0.5);
  // decaying influence shrinks the move
  const double big = sampler::adapt_step(0.5, 1.0, 0.23, 1.0);
  const double small = sampler::adapt_step(0.5, 1.0, 0.23, 0.25);
  CHECK(small < big);
  CHECK(small > 0.5);
}

TEST_CASE("config validation") {
  sampler::SamplerConfig cfg;
  cfg.iterations = 100;
  cfg.burn_in = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.burn_in = 50;
  cfg.thin = 60;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.thin = 5;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.n_stored() == 10);
}

TEST_CASE("per-site maximum likelihood recovers the truth at large T") {
  Rng rng(2);
  const gev::GevParams truth(20.0, std::log(5.0), 0.2);
  std::vector<double> y(4000);
  for (auto& v : y) v = gev::quantile(gev::Probability(rng.uniform()), truth);
  const auto fit = sampler::fit_gev_ml(y);
  CHECK(fit.mu() == doctest::Approx(20.0).epsilon(0.02));
  CHECK(fit.sigma() == doctest::Approx(5.0).epsilon(0.05));
  CHECK(fit.xi() == doctest::Approx(0.2).epsilon(0.25));
}

TEST_CASE("degenerate run stores exactly one draw") {
  auto data = synthetic_fit_data(6, 30, 3);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::unweighted;
  sampler::SamplerConfig cfg;
  cfg.iterations = 51;
  cfg.burn_in = 50;
  cfg.thin = 1;
  cfg.seed = 4;
  const auto out = sampler::run_chain(data, spec, cfg);
  CHECK(out.draws.size() == 1);

  // stored draws = floor((iterations - burn_in)/thin), non-divisible case
  cfg.iterations = 60;
  cfg.thin = 3;
  CHECK(cfg.n_stored() == 3);
  const auto out2 = sampler::run_chain(data, spec, cfg);
  CHECK(out2.draws.size() == 3);
}

TEST_CASE("same seed and config give bit-identical output") {
  auto data = synthetic_fit_data(6, 30, 5);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::weighted;
  sampler::SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.thin = 2;
  cfg.seed = 11;
  const auto a = sampler::run_chain(data, spec, cfg);
  const auto b = sampler::run_chain(data, spec, cfg);
  CHECK(draws_equal(a, b));
  CHECK(a.accept_rates.at("eta") == b.accept_rates.at("eta"));
}

TEST_CASE("fixed-weight mode keeps the weight vector constant") {
  auto data = synthetic_fit_data(8, 40, 6);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::weighted;
  spec.weight_mode = model::WeightMode::fixed;
  sampler::SamplerConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 50;
  cfg.thin = 5;
  cfg.seed = 7;
  const auto out = sampler::run_chain(data, spec, cfg);
  REQUIRE(out.draws.size() >= 2);
  for (const auto& d : out.draws) CHECK(d.weights == out.draws.front().weights);
}

TEST_CASE("gibbs-updated weights move and are recorded") {
  auto data = synthetic_fit_data(8, 40, 8);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::weighted;
  spec.weight_mode = model::WeightMode::gibbs_updated;
  sampler::SamplerConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 50;
  cfg.thin = 5;
  cfg.seed = 7;
  const auto out = sampler::run_chain(data, spec, cfg);
  CHECK(out.weight_trace.size() == out.draws.size());
  bool moved = false;
  for (const auto& d : out.draws)
    if (d.weights != out.draws.front().weights) moved = true;
  CHECK(moved);
}

TEST_CASE("accepted states keep a finite posterior") {
  auto data = synthetic_fit_data(5, 25, 9);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::pc_prior;
  sampler::SamplerConfig cfg;
  cfg.iterations = 150;
  cfg.burn_in = 50;
  cfg.thin = 1;
  cfg.seed = 10;
  const auto out = sampler::run_chain(data, spec, cfg);
  const auto resolved = out.resolved_spec;
  for (const auto& d : out.draws) {
    model::LatentState state(data.panel.n_sites());
    for (int j = 0; j < data.panel.n_sites(); ++j)
      state.eta.push_back(gev::GevParams(d.mu(j), d.log_sigma(j), d.xi(j)));
    state.beta = d.beta;
    state.cov = d.cov;
    state.pc_lambda = d.pc_lambda;
    std::vector<double> w(d.weights.data(), d.weights.data() + d.weights.size());
    state.weights = dependence::WeightVector(w);
    const double lp = model::log_posterior(state, data.panel, data.sites, data.design, resolved);
    CHECK(std::isfinite(lp));
  }
}

TEST_CASE("frozen blocks expose the conjugate coefficient posterior") {
  // small version of the generalized-least-squares oracle
  auto data = synthetic_fit_data(10, 50, 12);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::unweighted;
  sampler::SamplerConfig cfg;
  cfg.iterations = 4200;
  cfg.burn_in = 200;
  cfg.thin = 1;
  cfg.seed = 13;
  cfg.update.eta = false;
  cfg.update.hyper = false;
  cfg.update.weights = false;
  const auto init = sampler::auto_init(data, spec);
  const auto out = sampler::run_chain(data, spec, cfg, init);

  // closed-form posterior given the frozen field and covariance
  const auto resolved = out.resolved_spec;
  const Eigen::MatrixXd cov = spatial::cov_matrix(init.cov[0], data.sites);
  const Eigen::MatrixXd prec = cov.inverse();
  Eigen::MatrixXd a = data.design.transpose() * prec * data.design;
  a.diagonal().array() += 1.0 / resolved.process[0].coef_variance;
  const Eigen::MatrixXd a_inv = a.inverse();
  const Eigen::VectorXd mean = a_inv * data.design.transpose() * prec * init.field(0);

  const std::size_t n_draws = out.draws.size();
  Eigen::MatrixXd beta_draws(n_draws, 3);
  for (std::size_t i = 0; i < n_draws; ++i) beta_draws.row(i) = out.draws[i].beta[0].transpose();
  const Eigen::VectorXd emp_mean = beta_draws.colwise().mean();
  for (int c = 0; c < 3; ++c) {
    const double mc_se = std::sqrt(a_inv(c, c) / static_cast<double>(n_draws));
    CHECK(std::abs(emp_mean(c) - mean(c)) < 4.0 * mc_se);
  }
}

TEST_CASE("multiple chains differ but are reproducible") {
  auto data = synthetic_fit_data(5, 25, 14);
  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::unweighted;
  sampler::SamplerConfig cfg;
  cfg.iterations = 120;
  cfg.burn_in = 40;
  cfg.thin = 2;
  cfg.seed = 21;
  cfg.chains = 3;
  const auto serial = sampler::run_chains(data, spec, cfg, 1);
  const auto parallel = sampler::run_chains(data, spec, cfg, 3);
  REQUIRE(serial.size() == 3);
  for (int c = 0; c < 3; ++c) CHECK(draws_equal(serial[c], parallel[c]));
  CHECK(!draws_equal(serial[0], serial[1]));
}

TEST_CASE("hpd interval basics") {
  CHECK_THROWS_AS(sampler::hpd_interval({}, 0.95), std::invalid_argument);
  const auto flat = sampler::hpd_interval(std::vector<double>(50, 3.25), 0.95);
  CHECK(flat.first == 3.25);
  CHECK(flat.second == 3.25);

  Rng rng(31);
  std::vector<double> normal(10000);
  for (auto& v : normal) v = rng.normal();
  const auto hpd = sampler::hpd_interval(normal, 0.95);
  CHECK(hpd.first == doctest::Approx(-1.96).epsilon(0.06));
  CHECK(hpd.second == doctest::Approx(1.96).epsilon(0.06));
}

TEST_CASE("effective sample size of white noise is close to n") {
  Rng rng(37);
  std::vector<double> x(10000);
  for (auto& v : x) v = rng.normal();
  const auto d = sampler::diagnose_scalar(x);
  CHECK(d.ess / 10000.0 > 0.8);
  CHECK(d.ess / 10000.0 < 1.2);
  CHECK(d.acf[0] == doctest::Approx(1.0));
}

TEST_CASE("effective sample size shrinks for an AR(1) chain") {
  Rng rng(41);
  const double rho = 0.9;
  std::vector<double> x(20000);
  x[0] = rng.normal();
  for (std::size_t i = 1; i < x.size(); ++i)
    x[i] = rho * x[i - 1] + std::sqrt(1 - rho * rho) * rng.normal();
  const auto d = sampler::diagnose_scalar(x);
  // theoretical IACT = (1+rho)/(1-rho) = 19
  CHECK(d.iact > 10.0);
  CHECK(d.iact < 30.0);
}

TEST_CASE("diagnostics require at least 100 draws") {
  auto data = synthetic_fit_data(4, 25, 15);
  model::ModelSpec spec;
  sampler::SamplerConfig cfg;
  cfg.iterations = 90;
  cfg.burn_in = 40;
  cfg.thin = 1;
  const auto out = sampler::run_chain(data, spec, cfg);
  CHECK_THROWS_AS(sampler::diagnostics(out, data.site_ids), std::invalid_argument);
}

TEST_CASE("diagnostics report covers every stored scalar") {
  auto data = synthetic_fit_data(4, 25, 16);
  model::ModelSpec spec;
  sampler::SamplerConfig cfg;
  cfg.iterations = 360;
  cfg.burn_in = 100;
  cfg.thin = 2;
  const auto out = sampler::run_chain(data, spec, cfg);
  const auto report = sampler::diagnostics(out, data.site_ids);
  // 3N eta + 3p beta + 9 hyper + N weights
  CHECK(report.names.size() == 3u * 4 + 3u * 3 + 9u + 4u);
  CHECK(report.stats.size() == report.names.size());
  for (const auto& s : report.stats) CHECK(std::isfinite(s.ess));
}

TEST_CASE("calibration smoke test: nominal-ish coverage on independent data") {
  // 12 replicates of N=16, T=100 independent data fitted with the
  // unweighted model; pooled 95% HPD coverage for q(0.99) should be high.
  const int reps = 12;
  const int n_sites = 16;
  long covered = 0, total = 0;
  for (int rep = 0; rep < reps; ++rep) {
    simulate::GeneratorConfig gen = simulate::default_config();
    gen.n_sites = n_sites;
    gen.n_times = 100;
    gen.dependence = simulate::Dependence::independent;
    gen.seed = 1000 + rep;
    const auto ds = simulate::assemble_dataset(gen);
    sampler::FitData data;
    data.panel = ds.panel;
    data.sites = ds.sites;
    data.site_ids = ds.site_ids;
    data.design.resize(n_sites, 3);
    for (int j = 0; j < n_sites; ++j) data.design.row(j) << 1.0, ds.sites[j].x, ds.sites[j].y;

    model::ModelSpec spec;
    spec.likelihood = model::Likelihood::unweighted;
    sampler::SamplerConfig cfg;
    cfg.iterations = 4000;
    cfg.burn_in = 1000;
    cfg.thin = 3;
    cfg.seed = 555 + rep;
    const auto out = sampler::run_chain(data, spec, cfg);

    std::vector<double> q(out.draws.size());
    for (int j = 0; j < n_sites; ++j) {
      for (std::size_t s = 0; s < out.draws.size(); ++s)
        q[s] = gev::quantile(gev::Probability(0.99),
                             gev::GevParams(out.draws[s].mu(j), out.draws[s].log_sigma(j),
                                            out.draws[s].xi(j)));
      const auto hpd = sampler::hpd_interval(q, 0.95);
      const double truth = gev::quantile(gev::Probability(0.99), ds.true_eta[j]);
      covered += (truth >= hpd.first && truth <= hpd.second) ? 1 : 0;
      ++total;
    }
  }
  const double coverage = static_cast<double>(covered) / static_cast<double>(total);
  CHECK(coverage >= 0.85);
}

}  // TEST_SUITE
