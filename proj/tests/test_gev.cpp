#include <doctest.h>

#include <cmath>
#include <limits>

#include "stormlevels/gev.hpp"
#include "support/oracles.hpp"

using namespace stormlevels;

TEST_SUITE("gev") {

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(gev::GevParams(0.0, 0.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(gev::GevParams(0.0, 0.0, -6.0), std::invalid_argument);
  CHECK_THROWS_AS(gev::GevParams(std::nan(""), 0.0, 0.1), std::invalid_argument);
  CHECK(!gev::GevParams::try_make(0.0, 0.0, 7.0).has_value());
  CHECK(gev::GevParams::try_make(0.0, 0.0, 0.3).has_value());
  const gev::GevParams p(1.0, std::log(2.0), -0.2);
  CHECK(p.sigma() == doctest::Approx(2.0));
  CHECK_THROWS_AS(gev::Probability(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gev::Probability(1.0), std::invalid_argument);
}

TEST_CASE("cdf closed-form values") {
  // unit Frechet: mu=1, sigma=1, xi=1 at y=1
  CHECK(gev::cdf(1.0, gev::GevParams(1.0, 0.0, 1.0)) == doctest::Approx(std::exp(-1.0)));
  // Gumbel at the location parameter
  CHECK(gev::cdf(0.5, gev::GevParams(0.5, 0.0, 0.0)) == doctest::Approx(std::exp(-1.0)));
  // hand evaluation below and at the lower endpoint for xi=1
  const gev::GevParams p(0.0, 0.0, 1.0);
  CHECK(gev::cdf(-0.5, p) == doctest::Approx(std::exp(-2.0)));
  CHECK(gev::cdf(-1.5, p) == 0.0);
  CHECK(gev::cdf(-1.0, p) == 0.0);
  // upper endpoint for negative shape
  const gev::GevParams q(0.0, 0.0, -0.5);
  CHECK(gev::cdf(2.5, q) == 1.0);
}

TEST_CASE("logpdf closed-form values and support") {
  CHECK(gev::logpdf(0.0, gev::GevParams(0.0, 0.0, 0.0)) == doctest::Approx(-1.0));
  CHECK(gev::logpdf(-2.0, gev::GevParams(0.0, 0.0, 1.0)) ==
        -std::numeric_limits<double>::infinity());
  // the density must match the cdf's derivative
  const gev::GevParams p(0.3, -0.2, 0.2);
  const auto cdf_at = [&p](double y) { return gev::cdf(y, p); };
  for (double y : {0.0, 0.5, 1.5, 3.0}) {
    const double pdf = std::exp(gev::logpdf(y, p));
    CHECK(pdf == doctest::Approx(oracles::central_diff(cdf_at, y, 1e-7)).epsilon(1e-5));
  }
}

TEST_CASE("logpdf gradient matches finite differences") {
  // d/dmu at the spec's anchor point
  const auto by_mu = [](double mu) { return gev::logpdf(1.3, gev::GevParams(mu, 0.1, 0.15)); };
  const auto by_ls = [](double ls) { return gev::logpdf(1.3, gev::GevParams(0.2, ls, 0.15)); };
  const auto by_xi = [](double xi) { return gev::logpdf(1.3, gev::GevParams(0.2, 0.1, xi)); };
  // analytic derivative of the xi != 0 branch w.r.t. mu:
  //   d/dmu logpdf = (1+xi)/sigma / t - t^(-1/xi-1)/sigma
  const double sigma = std::exp(0.1);
  const double u = (1.3 - 0.2) / sigma;
  const double t = 1.0 + 0.15 * u;
  const double analytic_mu =
      (1.0 / 0.15 + 1.0) * 0.15 / sigma / t - std::pow(t, -1.0 / 0.15 - 1.0) / sigma;
  CHECK(oracles::central_diff(by_mu, 0.2) == doctest::Approx(analytic_mu).epsilon(1e-6));
  // smoothness in the other coordinates (finite differences at two scales agree)
  const std::function<double(double)> partials[] = {by_ls, by_xi};
  for (const auto& f : partials) {
    const double d1 = oracles::central_diff(f, 0.1, 1e-5);
    const double d2 = oracles::central_diff(f, 0.1, 1e-7);
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-5));
  }
}

TEST_CASE("quantile closed-form values") {
  CHECK(gev::quantile(gev::Probability(std::exp(-1.0)), gev::GevParams(0.0, 0.0, 0.0)) ==
        doctest::Approx(0.0));
  CHECK(gev::quantile(gev::Probability(std::exp(-1.0)), gev::GevParams(0.0, 0.0, 1.0)) ==
        doctest::Approx(0.0));
  CHECK(gev::quantile(gev::Probability(std::exp(-0.5)), gev::GevParams(0.0, 0.0, 1.0)) ==
        doctest::Approx(1.0));
}

TEST_CASE("to_frechet") {
  CHECK(gev::to_frechet(std::exp(-1.0)) == doctest::Approx(1.0));
  CHECK(gev::to_frechet(std::exp(-0.5)) == doctest::Approx(2.0));
  CHECK(gev::to_frechet(std::exp(-0.1)) == doctest::Approx(10.0));
  CHECK_THROWS_AS(gev::to_frechet(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gev::to_frechet(1.0), std::invalid_argument);
}

TEST_CASE("quantile-cdf round trip across the parameter grid") {
  for (double mu : {-5.0, 0.0, 3.0}) {
    for (double ls : {-1.0, 0.0, 1.5}) {
      for (double xi : {-0.4, -1e-9, 0.0, 1e-9, 0.35}) {
        const gev::GevParams p(mu, ls, xi);
        for (int k = 0; k <= 40; ++k) {
          const double prob = 1e-6 + (1.0 - 2e-6) * k / 40.0;
          const double y = gev::quantile(gev::Probability(prob), p);
          CHECK(std::abs(gev::cdf(y, p) - prob) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("quantile strictly increasing in p") {
  const gev::GevParams p(1.0, 0.3, 0.2);
  double last = -std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double y = gev::quantile(gev::Probability(k / 200.0), p);
    CHECK(y > last);
    last = y;
  }
}

TEST_CASE("density integrates to one, including the Gumbel crossover") {
  for (double xi : {-0.3, -1e-9, 0.0, 1e-9, 0.3}) {
    const gev::GevParams p(0.5, 0.2, xi);
    const auto pdf = [&p](double y) { return std::exp(gev::logpdf(y, p)); };
    // panels at quantiles keep the adaptive rule honest in the tails
    double total = 0.0;
    double prev = gev::quantile(gev::Probability(1e-12), p);
    for (double q : {1e-6, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1.0 - 1e-12}) {
      const double next = gev::quantile(gev::Probability(q), p);
      if (next > prev) total += oracles::integrate(pdf, prev, next, 1e-12);
      prev = next;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("continuity across xi = 0") {
  const gev::GevParams base(0.2, 0.1, 0.0);
  for (double y : {-2.0, -0.5, 0.2, 1.0, 3.0, 8.0}) {
    const double at_zero = gev::logpdf(y, base);
    for (double xi : {1e-8, -1e-8}) {
      const gev::GevParams p(0.2, 0.1, xi);
      CHECK(std::abs(gev::logpdf(y, p) - at_zero) < 1e-6);
    }
  }
}

}  // TEST_SUITE
