#include <doctest.h>

#include <cmath>

#include "stormlevels/model.hpp"
#include "stormlevels/optim.hpp"
#include "stormlevels/rng.hpp"
#include "support/oracles.hpp"

using namespace stormlevels;

namespace {

Panel make_panel(const Eigen::MatrixXd& values) {
  Panel p;
  p.values = values;
  p.years.resize(values.rows());
  for (int i = 0; i < p.n_times(); ++i) p.years[i] = i + 1;
  return p;
}

// Independent oracle: KLD(GEV(0,1,xi) || Gumbel) integrated directly on the
// probability scale, with an analytic correction for the heavy upper tail.
double kld_oracle(double xi) {
  const gev::GevParams p_xi(0.0, 0.0, xi);
  const gev::GevParams p_0(0.0, 0.0, 0.0);
  const auto integrand = [&](double prob) {
    const double y = gev::quantile(gev::Probability(prob), p_xi);
    return gev::logpdf(y, p_xi) - gev::logpdf(y, p_0);
  };
  const double eps = 1e-10;
  double total = 0.0;
  double prev = eps;
  for (double q : {1e-6, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1.0 - 1e-6, 1.0 - eps}) {
    total += oracles::integrate(integrand, prev, q, 1e-11);
    prev = q;
  }
  // top-tail remainder of the E[Y] piece, integral of w^-xi / xi dp
  if (xi > 0.0) total += std::pow(eps, 1.0 - xi) / (xi * (1.0 - xi));
  return total;
}

model::LatentState tiny_state(const Sites& sites, const Eigen::MatrixXd& design) {
  model::LatentState state(static_cast<int>(sites.size()));
  for (std::size_t j = 0; j < sites.size(); ++j)
    state.eta.push_back(gev::GevParams(10.0 + 0.1 * j, 0.5, 0.1));
  for (int k = 0; k < 3; ++k) {
    state.beta[k] = Eigen::VectorXd::Zero(design.cols());
    state.beta[k](0) = k == 0 ? 10.0 : (k == 1 ? 0.5 : 0.1);
    state.cov[k] = spatial::CovarianceSpec{};
    state.cov[k].sill = 0.5;
    state.cov[k].range = 2.0;
  }
  return state;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("weighted log likelihood closed forms") {
  // single observation at the Gumbel mode contributes -1; a weight of one
  // half scales that contribution to -0.5
  Eigen::MatrixXd v(1, 1);
  v << 0.0;
  const auto panel = make_panel(v);
  const std::vector<gev::GevParams> eta{gev::GevParams(0.0, 0.0, 0.0)};
  CHECK(model::site_loglik(panel, 0, eta[0]) == doctest::Approx(-1.0));
  CHECK(0.5 * model::site_loglik(panel, 0, eta[0]) == doctest::Approx(-0.5));
  CHECK(model::unweighted_loglik(panel, eta) == doctest::Approx(-1.0));

  // the same arithmetic through the weighted sum, on a two-site panel where
  // a weight of one half is inside [1/N, 1]
  Eigen::MatrixXd v2(1, 2);
  v2 << 0.0, 0.0;
  const std::vector<gev::GevParams> eta2(2, gev::GevParams(0.0, 0.0, 0.0));
  CHECK(model::weighted_loglik(make_panel(v2), eta2, dependence::WeightVector({0.5, 1.0})) ==
        doctest::Approx(-1.5));
}

TEST_CASE("weighted log likelihood is linear in the weights") {
  Rng rng(3);
  Eigen::MatrixXd v(25, 3);
  const gev::GevParams truth(10.0, std::log(3.0), 0.15);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 3; ++j)
      v(i, j) = gev::quantile(gev::Probability(rng.uniform()), truth);
  const auto panel = make_panel(v);
  const std::vector<gev::GevParams> eta(3, truth);
  const double base = model::unweighted_loglik(panel, eta);
  // unit weights match the plain sum
  CHECK(model::weighted_loglik(panel, eta, dependence::WeightVector::ones(3)) ==
        doctest::Approx(base));
  // constant weights scale it
  CHECK(model::weighted_loglik(panel, eta, dependence::WeightVector({0.4, 0.4, 0.4})) ==
        doctest::Approx(0.4 * base));
  // support violation propagates minus infinity
  Eigen::MatrixXd bad = v;
  bad(0, 0) = -1e9;
  std::vector<gev::GevParams> eta_pos(3, gev::GevParams(10.0, std::log(3.0), 0.5));
  CHECK(model::weighted_loglik(make_panel(bad), eta_pos, dependence::WeightVector::ones(3)) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("per-site likelihood gradient matches finite differences") {
  Rng rng(19);
  Eigen::MatrixXd v(40, 1);
  const gev::GevParams truth(5.0, std::log(2.0), 0.2);
  for (int i = 0; i < 40; ++i) v(i, 0) = gev::quantile(gev::Probability(rng.uniform()), truth);
  const auto panel = make_panel(v);
  const auto at = [&panel](double mu, double ls, double xi) {
    return model::site_loglik(panel, 0, gev::GevParams(mu, ls, xi));
  };
  const double h = 1e-6;
  const double g_mu = (at(5.0 + h, std::log(2.0), 0.2) - at(5.0 - h, std::log(2.0), 0.2)) / (2 * h);
  const double g2_mu =
      (at(5.0 + 2 * h, std::log(2.0), 0.2) - at(5.0 - 2 * h, std::log(2.0), 0.2)) / (4 * h);
  CHECK(g_mu == doctest::Approx(g2_mu).epsilon(1e-5));
}

TEST_CASE("pc distance base cases") {
  CHECK(model::pc_distance(0.0) == 0.0);
  CHECK_THROWS_AS(model::pc_distance(-0.6), std::domain_error);
  CHECK_THROWS_AS(model::pc_distance(1.0), std::domain_error);
  CHECK(model::pc_distance(0.2) > 0.0);
  CHECK(model::pc_distance(-0.2) > 0.0);
}

TEST_CASE("pc distance matches the direct quadrature oracle") {
  for (double xi : {-0.3, -0.1, 0.1, 0.2, 0.4, 0.6}) {
    const double expected = std::sqrt(2.0 * kld_oracle(xi));
    CHECK(model::pc_distance(xi) == doctest::Approx(expected).epsilon(2e-3));
  }
}

TEST_CASE("pc distance is strictly increasing on [0, 0.5]") {
  double last = model::pc_distance(0.0);
  for (double xi = 0.1; xi <= 0.501; xi += 0.1) {
    const double d = model::pc_distance(std::min(xi, 0.5));
    CHECK(d > last);
    last = d;
  }
}

TEST_CASE("pc prior integrates to one") {
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto density = [lambda](double xi) {
      return std::exp(model::pc_logprior(xi, lambda));
    };
    const double mass = oracles::integrate(density, -0.4998, -1e-4, 1e-8) +
                        oracles::integrate(density, 1e-4, 0.9998, 1e-8);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("log posterior of the weighted model with unit weights equals unweighted") {
  Rng rng(7);
  const Sites sites{{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}, {0.5, 2.0}};
  Eigen::MatrixXd design(4, 2);
  for (int j = 0; j < 4; ++j) design.row(j) << 1.0, sites[j].x;
  Eigen::MatrixXd v(30, 4);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 4; ++j)
      v(i, j) = gev::quantile(gev::Probability(rng.uniform()),
                              gev::GevParams(10.0, std::log(3.0), 0.1));
  const auto panel = make_panel(v);
  auto state = tiny_state(sites, design);

  model::ModelSpec weighted;
  weighted.likelihood = model::Likelihood::weighted;
  weighted.auto_hyperpriors = false;
  model::ModelSpec unweighted = weighted;
  unweighted.likelihood = model::Likelihood::unweighted;

  const double a = model::log_posterior(state, panel, sites, design, weighted);
  const double b = model::log_posterior(state, panel, sites, design, unweighted);
  CHECK(a == b);
}

TEST_CASE("likelihood term is location equivariant") {
  Rng rng(13);
  Eigen::MatrixXd v(20, 2);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 2; ++j)
      v(i, j) = gev::quantile(gev::Probability(rng.uniform()),
                              gev::GevParams(5.0, std::log(2.0), 0.1));
  const std::vector<gev::GevParams> eta{gev::GevParams(5.0, 0.3, 0.1),
                                        gev::GevParams(5.5, 0.4, 0.12)};
  const double base = model::unweighted_loglik(make_panel(v), eta);
  const double shift = 7.25;
  Eigen::MatrixXd vs = v.array() + shift;
  const std::vector<gev::GevParams> eta_s{gev::GevParams(5.0 + shift, 0.3, 0.1),
                                          gev::GevParams(5.5 + shift, 0.4, 0.12)};
  CHECK(model::unweighted_loglik(make_panel(vs), eta_s) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("single-site flat-prior posterior mode matches the ML fit") {
  Rng rng(77);
  const int t = 200;
  Eigen::MatrixXd v(t, 1);
  const gev::GevParams truth(12.0, std::log(4.0), 0.15);
  for (int i = 0; i < t; ++i) v(i, 0) = gev::quantile(gev::Probability(rng.uniform()), truth);
  const auto panel = make_panel(v);
  const Sites sites{{0.0, 0.0}};
  const Eigen::MatrixXd design = Eigen::MatrixXd::Ones(1, 1);

  model::ModelSpec spec;
  spec.likelihood = model::Likelihood::unweighted;
  spec.auto_hyperpriors = false;
  for (auto& p : spec.process) p.coef_variance = 1e10;

  // beta pinned at zero and a huge sill make the latent layer effectively flat
  const auto posterior = [&](const Eigen::VectorXd& x) {
    auto params = gev::GevParams::try_make(x(0), x(1), x(2));
    if (!params) return 1e12;
    model::LatentState state(1);
    state.eta.push_back(*params);
    for (int k = 0; k < 3; ++k) {
      state.beta[k] = Eigen::VectorXd::Zero(1);
      state.cov[k] = spatial::CovarianceSpec{};
      state.cov[k].sill = 1e8;
    }
    const double lp = model::log_posterior(state, panel, sites, design, spec);
    return std::isfinite(lp) ? -lp : 1e12;
  };
  const auto ml = [&](const Eigen::VectorXd& x) {
    auto params = gev::GevParams::try_make(x(0), x(1), x(2));
    if (!params) return 1e12;
    const double ll = model::site_loglik(panel, 0, *params);
    return std::isfinite(ll) ? -ll : 1e12;
  };
  Eigen::VectorXd x0(3);
  x0 << 11.0, 1.2, 0.1;
  const auto mode_post = nelder_mead(posterior, x0, 0.3, 1e-13, 4000);
  const auto mode_ml = nelder_mead(ml, x0, 0.3, 1e-13, 4000);
  for (int c = 0; c < 3; ++c)
    CHECK(mode_post.x(c) == doctest::Approx(mode_ml.x(c)).epsilon(1e-4));
}

TEST_CASE("pc model posterior includes the shape penalty") {
  Rng rng(21);
  const Sites sites{{0.0, 0.0}, {2.0, 0.0}};
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(2, 1);
  Eigen::MatrixXd v(15, 2);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 2; ++j)
      v(i, j) = gev::quantile(gev::Probability(rng.uniform()),
                              gev::GevParams(10.0, std::log(3.0), 0.1));
  const auto panel = make_panel(v);

  model::LatentState state(2);
  state.eta = {gev::GevParams(10.0, 1.0, 0.1), gev::GevParams(10.0, 1.0, 0.2)};
  for (int k = 0; k < 3; ++k) {
    state.beta[k] = Eigen::VectorXd::Zero(1);
    state.cov[k] = spatial::CovarianceSpec{};
  }
  state.pc_lambda = 1.0;

  model::ModelSpec pc;
  pc.likelihood = model::Likelihood::pc_prior;
  pc.auto_hyperpriors = false;
  model::ModelSpec un = pc;
  un.likelihood = model::Likelihood::unweighted;

  const double lp_pc = model::log_posterior(state, panel, sites, design, pc);
  const double lp_un = model::log_posterior(state, panel, sites, design, un);
  const double penalty = model::pc_logprior(0.1, 1.0) + model::pc_logprior(0.2, 1.0) +
                         pc.pc_lambda_prior.logpdf(1.0);
  CHECK(lp_pc - lp_un == doctest::Approx(penalty).epsilon(1e-10));
}

TEST_CASE("weighted log likelihood is monotone in each weight") {
  // raising a weight helps when the site's summed log density is positive
  // and hurts when it is negative
  Eigen::MatrixXd v(1, 2);
  v << 0.0, 0.0;  // Gumbel mode: site log densities are -1 each
  const auto panel = make_panel(v);
  const std::vector<gev::GevParams> eta(2, gev::GevParams(0.0, 0.0, 0.0));
  const double low = model::weighted_loglik(panel, eta, dependence::WeightVector({0.6, 1.0}));
  const double high = model::weighted_loglik(panel, eta, dependence::WeightVector({0.9, 1.0}));
  CHECK(high < low);

  // a sharply concentrated margin gives positive log density at the mode
  Eigen::MatrixXd vp(1, 2);
  vp << 0.0, 0.0;
  const std::vector<gev::GevParams> eta_pos(2, gev::GevParams(0.0, -3.0, 0.0));
  CHECK(model::site_loglik(make_panel(vp), 0, eta_pos[0]) > 0.0);
  const double lo2 =
      model::weighted_loglik(make_panel(vp), eta_pos, dependence::WeightVector({0.6, 1.0}));
  const double hi2 =
      model::weighted_loglik(make_panel(vp), eta_pos, dependence::WeightVector({0.9, 1.0}));
  CHECK(hi2 > lo2);
}

TEST_CASE("pc-model log-posterior differences stabilize as lambda shrinks") {
  Rng rng(31);
  const Sites sites{{0.0, 0.0}, {2.0, 1.0}, {1.0, 3.0}};
  const Eigen::MatrixXd design = Eigen::MatrixXd::Ones(3, 1);
  Eigen::MatrixXd v(20, 3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j)
      v(i, j) = gev::quantile(gev::Probability(rng.uniform()),
                              gev::GevParams(10.0, std::log(3.0), 0.1));
  const auto panel = make_panel(v);

  auto make_state = [&](double xi) {
    model::LatentState s(3);
    for (int j = 0; j < 3; ++j) s.eta.push_back(gev::GevParams(10.0, 1.0, xi + 0.02 * j));
    for (int k = 0; k < 3; ++k) {
      s.beta[k] = Eigen::VectorXd::Zero(1);
      s.cov[k] = spatial::CovarianceSpec{};
    }
    return s;
  };
  model::ModelSpec pc;
  pc.likelihood = model::Likelihood::pc_prior;
  pc.auto_hyperpriors = false;

  auto state_a = make_state(0.05);
  auto state_b = make_state(0.25);
  auto diff_at = [&](double lambda) {
    state_a.pc_lambda = lambda;
    state_b.pc_lambda = lambda;
    return model::log_posterior(state_a, panel, sites, design, pc) -
           model::log_posterior(state_b, panel, sites, design, pc);
  };
  const double d4 = diff_at(1e-4);
  const double d6 = diff_at(1e-6);
  const double d8 = diff_at(1e-8);
  CHECK(std::abs(d6 - d8) < 1e-3);
  CHECK(std::abs(d4 - d8) < 1e-2);
}

TEST_CASE("effective information per site") {
  CHECK(model::effective_info(dependence::WeightVector({1.0}), {50})(0) == doctest::Approx(50.0));
  const int n = 50;
  std::vector<double> w(n, 1.0 / n);
  std::vector<int> counts(n, 50);
  const auto info = model::effective_info(dependence::WeightVector(w), counts);
  CHECK(info(0) == doctest::Approx(1.0));
  CHECK(model::effective_info(dependence::WeightVector({0.6, 1.0}), {60, 10})(0) ==
        doctest::Approx(36.0));
}

TEST_CASE("model spec validation") {
  model::ModelSpec bad;
  bad.likelihood = model::Likelihood::unweighted;
  bad.weight_mode = model::WeightMode::gibbs_updated;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  model::ModelSpec ok;
  ok.likelihood = model::Likelihood::weighted;
  ok.weight_mode = model::WeightMode::gibbs_updated;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("variogram-based default priors are centred on plausible values") {
  Rng rng(55);
  const int n = 40;
  Sites sites(n);
  for (auto& s : sites) s = Site{rng.uniform() * 20.0 - 10.0, rng.uniform() * 20.0 - 10.0};
  spatial::CovarianceSpec truth;
  truth.sill = 2.0;
  truth.range = 5.0;
  Eigen::VectorXd field = spatial::gp_sample(truth, sites, Eigen::VectorXd::Zero(n), rng);
  const auto prior =
      model::default_process_prior(field, sites, Eigen::MatrixXd::Ones(n, 1));
  CHECK(prior.sill.mean() > 0.2);
  CHECK(prior.sill.mean() < 20.0);
  CHECK(prior.range.mean() > 0.1);
  CHECK(prior.smoothness.mean() == doctest::Approx(1.0));
}

}  // TEST_SUITE
