#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stormlevels/model.hpp"

namespace stormlevels::sampler {

// Which blocks move each sweep; tests freeze blocks to expose conjugate parts.
struct UpdateToggles {
  bool eta = true;
  bool beta = true;
  bool hyper = true;
  bool pc_lambda = true;
  bool weights = true;
};

struct SamplerConfig {
  int iterations = 20000;
  int burn_in = 2000;
  int thin = 10;
  std::uint64_t seed = 1;
  double target_accept_block = 0.23;   // 3-dimensional blocks
  double target_accept_scalar = 0.44;  // scalar blocks
  int adapt_window = 50;
  int chains = 1;
  UpdateToggles update;

  void validate() const;
  int n_stored() const { return (iterations - burn_in) / thin; }
};

// One stored posterior sample.
struct Draw {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;
  Eigen::VectorXd xi;
  std::array<Eigen::VectorXd, 3> beta;
  std::array<spatial::CovarianceSpec, 3> cov;
  double pc_lambda = 1.0;
  Eigen::VectorXd weights;
};

struct ChainOutput {
  std::vector<Draw> draws;
  std::map<std::string, double> accept_rates;
  std::vector<Eigen::VectorXd> weight_trace;  // per stored draw, gibbs mode only
  double seconds = 0.0;
  SamplerConfig config;
  model::ModelSpec resolved_spec;
  long weight_update_failures = 0;
};

// Everything a fit needs: aligned panel, planar sites, shared design matrix.
struct FitData {
  Panel panel;
  Sites sites;
  Eigen::MatrixXd design;  // n_sites x p, first column usually the intercept
  std::vector<std::string> site_ids;

  void validate() const;
};

// Per-site maximum likelihood GEV fit (derivative-free), falling back to
// Gumbel moment estimates when the optimiser fails.
gev::GevParams fit_gev_ml(const std::vector<double>& values);

// ML fields, OLS coefficients, prior-mean hyperparameters, pipeline weights.
model::LatentState auto_init(const FitData& data, const model::ModelSpec& spec);

// Robbins-Monro style proposal scale update, used during burn-in only.
double adapt_step(double scale, double accept_rate, double target, double kappa = 1.0);

ChainOutput run_chain(const FitData& data, const model::ModelSpec& spec,
                      const SamplerConfig& cfg,
                      const std::optional<model::LatentState>& init = std::nullopt);

// Independent chains with derived seeds, run on up to `threads` workers.
std::vector<ChainOutput> run_chains(const FitData& data, const model::ModelSpec& spec,
                                    const SamplerConfig& cfg, int threads);

// ------------------------------------------------------------ diagnostics

struct ScalarDiagnostics {
  std::vector<double> acf;
  double iact = 1.0;
  double ess = 0.0;
  double hpd_lo = 0.0;
  double hpd_hi = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

// Shortest contiguous interval containing `mass` of the sorted draws.
std::pair<double, double> hpd_interval(std::vector<double> draws, double mass = 0.95);

ScalarDiagnostics diagnose_scalar(const std::vector<double>& draws, int max_lag = 0,
                                  double hpd_mass = 0.95);

struct DiagnosticsReport {
  std::vector<std::string> names;
  std::vector<ScalarDiagnostics> stats;
};

// Per-scalar report over the stored draws; requires at least 100 of them.
DiagnosticsReport diagnostics(const ChainOutput& output, const std::vector<std::string>& site_ids);

// Flat column view of a chain, shared by the CSV writer and diagnostics.
std::vector<std::string> draw_column_names(const ChainOutput& output,
                                           const std::vector<std::string>& site_ids);
std::vector<double> draw_column(const ChainOutput& output, std::size_t column);

}  // namespace stormlevels::sampler
