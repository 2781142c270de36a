#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stormlevels/dependence.hpp"
#include "stormlevels/evaluate.hpp"
#include "stormlevels/gev.hpp"
#include "stormlevels/model.hpp"
#include "stormlevels/sampler.hpp"
#include "stormlevels/simulate.hpp"
#include "stormlevels/spatial.hpp"
#include "stormlevels/version.hpp"

namespace py = pybind11;
using namespace stormlevels;

namespace {

Sites sites_from_array(const Eigen::MatrixXd& xy) {
  if (xy.cols() != 2) throw std::invalid_argument("sites must be an (n, 2) array");
  Sites s(xy.rows());
  for (Eigen::Index i = 0; i < xy.rows(); ++i) s[i] = Site{xy(i, 0), xy(i, 1)};
  return s;
}

Panel panel_from_array(const Eigen::MatrixXd& values) {
  Panel p;
  p.values = values;
  p.years.resize(values.rows());
  for (int i = 0; i < p.n_times(); ++i) p.years[i] = i + 1;
  return p;
}

std::vector<gev::GevParams> eta_from_array(const Eigen::MatrixXd& eta) {
  if (eta.cols() != 3) throw std::invalid_argument("eta must be an (n, 3) array");
  std::vector<gev::GevParams> out;
  out.reserve(eta.rows());
  for (Eigen::Index j = 0; j < eta.rows(); ++j)
    out.emplace_back(eta(j, 0), eta(j, 1), eta(j, 2));
  return out;
}

model::ModelSpec spec_from_name(const std::string& likelihood, const std::string& weight_mode) {
  model::ModelSpec spec;
  if (likelihood == "weighted") spec.likelihood = model::Likelihood::weighted;
  else if (likelihood == "unweighted") spec.likelihood = model::Likelihood::unweighted;
  else if (likelihood == "pc" || likelihood == "pc_prior")
    spec.likelihood = model::Likelihood::pc_prior;
  else throw std::invalid_argument("unknown likelihood: " + likelihood);
  if (weight_mode == "gibbs" || weight_mode == "gibbs_updated")
    spec.weight_mode = model::WeightMode::gibbs_updated;
  if (spec.likelihood != model::Likelihood::weighted)
    spec.weight_mode = model::WeightMode::fixed;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatial extremes return levels with dependence-weighted likelihoods";
  m.attr("__version__") = kVersion;

  // ---- marginal distribution
  m.def(
      "gev_cdf",
      [](double y, double mu, double log_sigma, double xi) {
        return gev::cdf(y, gev::GevParams(mu, log_sigma, xi));
      },
      py::arg("y"), py::arg("mu"), py::arg("log_sigma"), py::arg("xi"));
  m.def(
      "gev_logpdf",
      [](double y, double mu, double log_sigma, double xi) {
        return gev::logpdf(y, gev::GevParams(mu, log_sigma, xi));
      },
      py::arg("y"), py::arg("mu"), py::arg("log_sigma"), py::arg("xi"));
  m.def(
      "gev_quantile",
      [](double p, double mu, double log_sigma, double xi) {
        return gev::quantile(gev::Probability(p), gev::GevParams(mu, log_sigma, xi));
      },
      py::arg("p"), py::arg("mu"), py::arg("log_sigma"), py::arg("xi"));
  m.def("to_frechet", &gev::to_frechet, py::arg("cdf_value"));

  // ---- dependence and weights
  m.def(
      "ecdf_transform",
      [](const Eigen::MatrixXd& values) { return dependence::ecdf_transform(panel_from_array(values)).z; },
      py::arg("values"), "Rank transform to the unit Frechet scale; NaN marks missing entries.");
  m.def(
      "pairwise_theta",
      [](const Eigen::MatrixXd& z, const Eigen::MatrixXd& xy, int min_overlap) {
        FrechetPanel panel;
        panel.z = z;
        const auto pairs = dependence::pairwise_theta(panel, sites_from_array(xy), min_overlap);
        Eigen::MatrixXd out(pairs.size(), 3);
        for (std::size_t i = 0; i < pairs.size(); ++i)
          out.row(i) << pairs[i].distance, pairs[i].theta_hat,
              static_cast<double>(pairs[i].n_overlap);
        return out;
      },
      py::arg("z"), py::arg("sites"), py::arg("min_overlap") = 10,
      "Columns: distance, theta_hat, n_overlap.");
  m.def(
      "compute_weights",
      [](const Eigen::MatrixXd& values, const Eigen::MatrixXd& xy, int min_overlap,
         double bandwidth, bool use_smoothed) {
        dependence::WeightPipelineOptions opts;
        opts.min_overlap = min_overlap;
        opts.bandwidth = bandwidth;
        opts.use_smoothed_curve = use_smoothed;
        const auto z = dependence::ecdf_transform(panel_from_array(values));
        const auto res = dependence::weights_from_frechet(z, sites_from_array(xy), opts);
        return res.weights.values();
      },
      py::arg("values"), py::arg("sites"), py::arg("min_overlap") = 10,
      py::arg("bandwidth") = 0.0, py::arg("use_smoothed") = true,
      "Likelihood weights from annual maxima via the rank transform.");
  m.def(
      "theta_curve",
      [](const Eigen::MatrixXd& values, const Eigen::MatrixXd& xy, int min_overlap,
         double bandwidth) {
        const auto z = dependence::ecdf_transform(panel_from_array(values));
        const auto pairs = dependence::pairwise_theta(z, sites_from_array(xy), min_overlap);
        const auto curve = dependence::smooth_curve(pairs, bandwidth);
        return py::make_tuple(curve.bin_centers, curve.theta_hat, curve.bandwidth);
      },
      py::arg("values"), py::arg("sites"), py::arg("min_overlap") = 10,
      py::arg("bandwidth") = 0.0);

  // ---- shape penalty
  m.def("pc_distance", &model::pc_distance, py::arg("xi"));
  m.def("pc_logprior", &model::pc_logprior, py::arg("xi"), py::arg("lambda_"));
  m.def(
      "effective_info",
      [](const std::vector<double>& w, const std::vector<int>& counts) {
        return model::effective_info(dependence::WeightVector(w), counts);
      },
      py::arg("weights"), py::arg("site_counts"));

  // ---- simulation
  m.def(
      "simulate_dataset",
      [](int n, int t, const std::string& dependence, std::uint64_t seed) {
        simulate::GeneratorConfig cfg = simulate::default_config();
        cfg.n_sites = n;
        cfg.n_times = t;
        cfg.dependence = simulate::dependence_from_string(dependence);
        cfg.seed = seed;
        const auto ds = simulate::assemble_dataset(cfg);
        Eigen::MatrixXd xy(n, 2), eta(n, 3);
        for (int j = 0; j < n; ++j) {
          xy.row(j) << ds.sites[j].x, ds.sites[j].y;
          eta.row(j) << ds.true_eta[j].mu(), ds.true_eta[j].log_sigma(), ds.true_eta[j].xi();
        }
        py::dict out;
        out["sites"] = xy;
        out["true_eta"] = eta;
        out["values"] = ds.panel.values;
        return out;
      },
      py::arg("n"), py::arg("t"), py::arg("dependence") = "moderate", py::arg("seed") = 1);
  m.def(
      "analytic_theta",
      [](const std::string& dependence, double d) {
        const auto g = simulate::dependence_params(simulate::dependence_from_string(dependence));
        return simulate::analytic_theta(g(d));
      },
      py::arg("dependence"), py::arg("distance"));

  // ---- fitting
  m.def(
      "fit",
      [](const Eigen::MatrixXd& values, const Eigen::MatrixXd& xy, const std::string& likelihood,
         const std::string& weight_mode, int iterations, int burn_in, int thin,
         std::uint64_t seed) {
        sampler::FitData data;
        data.panel = panel_from_array(values);
        data.sites = sites_from_array(xy);
        data.design.resize(xy.rows(), 3);
        for (Eigen::Index j = 0; j < xy.rows(); ++j) data.design.row(j) << 1.0, xy(j, 0), xy(j, 1);
        sampler::SamplerConfig cfg;
        cfg.iterations = iterations;
        cfg.burn_in = burn_in;
        cfg.thin = thin;
        cfg.seed = seed;
        const auto chain = sampler::run_chain(data, spec_from_name(likelihood, weight_mode), cfg);
        const std::size_t s = chain.draws.size();
        const int n = static_cast<int>(xy.rows());
        Eigen::MatrixXd mu(s, n), ls(s, n), xi(s, n), w(s, n);
        for (std::size_t i = 0; i < s; ++i) {
          mu.row(i) = chain.draws[i].mu.transpose();
          ls.row(i) = chain.draws[i].log_sigma.transpose();
          xi.row(i) = chain.draws[i].xi.transpose();
          w.row(i) = chain.draws[i].weights.transpose();
        }
        py::dict out;
        out["mu"] = mu;
        out["log_sigma"] = ls;
        out["xi"] = xi;
        out["weights"] = w;
        out["accept_rates"] = chain.accept_rates;
        out["seconds"] = chain.seconds;
        return out;
      },
      py::arg("values"), py::arg("sites"), py::arg("likelihood") = "weighted",
      py::arg("weight_mode") = "fixed", py::arg("iterations") = 2000, py::arg("burn_in") = 500,
      py::arg("thin") = 5, py::arg("seed") = 1,
      "Fit the hierarchical model with a design of intercept plus coordinates; returns "
      "posterior draw arrays.");

  // ---- posterior summaries
  m.def(
      "hpd_interval",
      [](std::vector<double> draws, double mass) {
        const auto h = sampler::hpd_interval(std::move(draws), mass);
        return py::make_tuple(h.first, h.second);
      },
      py::arg("draws"), py::arg("mass") = 0.95);
  m.def(
      "ess",
      [](const std::vector<double>& draws) { return sampler::diagnose_scalar(draws).ess; },
      py::arg("draws"));
}
