#include "stormlevels/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stormlevels/threading.hpp"

namespace stormlevels::evaluate {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Conditional draw of the three parameter processes at target sites given
// one posterior draw of the fields and hyperparameters.
std::vector<gev::GevParams> krige_eta_draw(const sampler::FitData& fitted,
                                           const sampler::Draw& draw, const Sites& targets,
                                           const Eigen::MatrixXd& target_design, Rng& rng,
                                           bool marginal_only) {
  const int m = static_cast<int>(targets.size());
  std::array<Eigen::VectorXd, 3> sampled;
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd& values = k == 0 ? draw.mu : (k == 1 ? draw.log_sigma : draw.xi);
    const spatial::GpField field{values, draw.beta[k], fitted.design};
    const auto cond = spatial::krige(field, draw.cov[k], fitted.sites, targets, target_design);
    if (marginal_only || m == 1) {
      sampled[k].resize(m);
      for (int i = 0; i < m; ++i) {
        const double sd = std::sqrt(std::max(0.0, cond.cov(i, i)));
        sampled[k](i) = cond.mean(i) + sd * rng.normal();
      }
    } else {
      Eigen::MatrixXd cov = cond.cov;
      cov.diagonal().array() += draw.cov[k].jitter;
      const auto llt = spatial::safe_llt(std::move(cov), draw.cov[k].jitter);
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z(i) = rng.normal();
      sampled[k] = cond.mean + llt.matrixL() * z;
    }
  }
  std::vector<gev::GevParams> eta;
  eta.reserve(m);
  for (int i = 0; i < m; ++i) {
    auto p = gev::GevParams::try_make(sampled[0](i), sampled[1](i), sampled[2](i));
    // a conditional draw can stray past the constructor shape bound
    eta.push_back(p ? *p
                    : gev::GevParams(sampled[0](i), sampled[1](i),
                                     std::clamp(sampled[2](i), -4.99, 4.99)));
  }
  return eta;
}

struct ReplicateRecord {
  bool failed = false;
  std::vector<int> covered;      // 0/1 per site
  std::vector<double> sq_error;  // per site
  std::vector<double> error;     // signed, per site
};

}  // namespace

std::vector<int> complement_indices(int n, const std::vector<int>& holdout) {
  std::vector<char> mask(n, 0);
  for (int h : holdout) {
    if (h < 0 || h >= n) throw std::invalid_argument("holdout index out of range");
    mask[h] = 1;
  }
  std::vector<int> keep;
  keep.reserve(n - static_cast<int>(holdout.size()));
  for (int i = 0; i < n; ++i)
    if (!mask[i]) keep.push_back(i);
  return keep;
}

std::vector<CellResult> coverage_study(const StudySpec& spec) {
  if (spec.replicates < 2) throw std::invalid_argument("coverage_study: replicates must be >= 2");
  if (spec.models.empty()) throw std::invalid_argument("coverage_study: no models");
  spec.chain.validate();

  const int n_dep = static_cast<int>(spec.dependences.size());
  const int n_mod = static_cast<int>(spec.models.size());
  // records[dep][model][replicate]
  std::vector<std::vector<std::vector<ReplicateRecord>>> records(
      n_dep, std::vector<std::vector<ReplicateRecord>>(
                 n_mod, std::vector<ReplicateRecord>(spec.replicates)));

  const Rng master(spec.seed);
  const int n_jobs = n_dep * spec.replicates;
  parallel_for_jobs(n_jobs, spec.threads, [&](int job) {
    const int d = job / spec.replicates;
    const int rep = job % spec.replicates;

    simulate::GeneratorConfig gen = simulate::default_config();
    gen.n_sites = spec.n_sites;
    gen.n_times = spec.n_times;
    gen.dependence = spec.dependences[d];
    gen.seed = master.derive(100, d, rep).next_u64();
    const auto dataset = simulate::assemble_dataset(gen);

    sampler::FitData data;
    data.panel = dataset.panel;
    data.sites = dataset.sites;
    data.site_ids = dataset.site_ids;
    data.design.resize(spec.n_sites, 3);
    for (int j = 0; j < spec.n_sites; ++j)
      data.design.row(j) << 1.0, dataset.sites[j].x, dataset.sites[j].y;

    std::vector<double> truth(spec.n_sites);
    for (int j = 0; j < spec.n_sites; ++j)
      truth[j] = gev::quantile(gev::Probability(spec.prob), dataset.true_eta[j]);

    for (int m = 0; m < n_mod; ++m) {
      ReplicateRecord& rec = records[d][m][rep];
      try {
        model::ModelSpec mspec;
        mspec.likelihood = spec.models[m];
        mspec.weight_mode = spec.weight_mode;
        sampler::SamplerConfig cfg = spec.chain;
        cfg.seed = master.derive(200, d, rep).derive(static_cast<std::uint64_t>(m)).next_u64();
        const auto chain = sampler::run_chain(data, mspec, cfg);
        if (chain.draws.empty()) throw std::runtime_error("no stored draws");

        rec.covered.resize(spec.n_sites);
        rec.sq_error.resize(spec.n_sites);
        rec.error.resize(spec.n_sites);
        std::vector<double> q(chain.draws.size());
        for (int j = 0; j < spec.n_sites; ++j) {
          for (std::size_t s = 0; s < chain.draws.size(); ++s) {
            const auto params = gev::GevParams::try_make(
                chain.draws[s].mu(j), chain.draws[s].log_sigma(j), chain.draws[s].xi(j));
            if (!params) throw std::runtime_error("invalid stored draw");
            q[s] = gev::quantile(gev::Probability(spec.prob), *params);
          }
          const auto hpd = sampler::hpd_interval(q, spec.hpd_mass);
          const double mean_q =
              std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
          rec.covered[j] = (truth[j] >= hpd.first && truth[j] <= hpd.second) ? 1 : 0;
          rec.error[j] = mean_q - truth[j];
          rec.sq_error[j] = rec.error[j] * rec.error[j];
          if (!std::isfinite(rec.sq_error[j])) throw std::runtime_error("non-finite estimate");
        }
      } catch (const std::exception&) {
        rec = ReplicateRecord{};
        rec.failed = true;
      }
    }
  });

  std::vector<CellResult> cells;
  cells.reserve(static_cast<std::size_t>(n_dep) * n_mod);
  for (int d = 0; d < n_dep; ++d) {
    for (int m = 0; m < n_mod; ++m) {
      CellResult cell;
      cell.dependence = spec.dependences[d];
      cell.n_sites = spec.n_sites;
      cell.n_times = spec.n_times;
      cell.likelihood = spec.models[m];
      long covered = 0;
      double sq_sum = 0.0, err_sum = 0.0;
      for (int rep = 0; rep < spec.replicates; ++rep) {
        const auto& rec = records[d][m][rep];
        if (rec.failed) {
          ++cell.failed_fits;
          continue;
        }
        ++cell.replicates_used;
        for (int j = 0; j < spec.n_sites; ++j) {
          covered += rec.covered[j];
          sq_sum += rec.sq_error[j];
          err_sum += rec.error[j];
          ++cell.n_pooled;
        }
      }
      cell.aborted = cell.failed_fits > spec.replicates / 10;
      if (cell.n_pooled > 0) {
        const double nn = static_cast<double>(cell.n_pooled);
        cell.coverage = static_cast<double>(covered) / nn;
        cell.coverage_se = std::sqrt(cell.coverage * (1.0 - cell.coverage) / nn);
        cell.mse = sq_sum / nn;
        const double bias = err_sum / nn;
        cell.bias2 = bias * bias;
        cell.variance = cell.mse - cell.bias2;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<HoldoutScore> holdout_logscore(const sampler::FitData& fitted,
                                           const sampler::ChainOutput& chain,
                                           const Panel& holdout_panel, const Sites& holdout_sites,
                                           const Eigen::MatrixXd& holdout_design,
                                           const std::vector<std::string>& holdout_ids,
                                           std::uint64_t seed) {
  const int m = static_cast<int>(holdout_sites.size());
  if (holdout_panel.n_sites() != m || holdout_design.rows() != m)
    throw std::invalid_argument("holdout_logscore: holdout pieces disagree in size");
  if (chain.draws.empty()) throw std::invalid_argument("holdout_logscore: empty chain");

  std::vector<double> sum_ll(m, 0.0);
  std::vector<long> degenerate(m, 0);
  const Rng master(seed);
  for (std::size_t s = 0; s < chain.draws.size(); ++s) {
    Rng g = master.derive(31, s);
    const auto eta =
        krige_eta_draw(fitted, chain.draws[s], holdout_sites, holdout_design, g, true);
    for (int i = 0; i < m; ++i) {
      double ll = model::site_loglik(holdout_panel, i, eta[i]);
      // Floor applies to -infinity and to finite values beyond it; otherwise
      // an infinitely bad draw would outrank a merely catastrophic one.
      if (ll < kLogScoreFloor) {
        ll = kLogScoreFloor;
        ++degenerate[i];
      }
      sum_ll[i] += ll;
    }
  }

  std::vector<HoldoutScore> scores(m);
  for (int i = 0; i < m; ++i) {
    scores[i].site_id = i < static_cast<int>(holdout_ids.size()) ? holdout_ids[i] : "";
    scores[i].location = holdout_sites[i];
    scores[i].log_score = sum_ll[i] / static_cast<double>(chain.draws.size());
    scores[i].degenerate_draws = degenerate[i];
  }
  return scores;
}

std::vector<SurfacePoint> rl_surface(const sampler::FitData& fitted,
                                     const sampler::ChainOutput& chain, const Sites& grid,
                                     const Eigen::MatrixXd& grid_design, double p,
                                     std::uint64_t seed, double hpd_mass) {
  const int m = static_cast<int>(grid.size());
  if (grid_design.rows() != m)
    throw std::invalid_argument("rl_surface: grid design does not match grid");
  if (chain.draws.empty()) throw std::invalid_argument("rl_surface: empty chain");
  const gev::Probability prob(p);

  const std::size_t n_draws = chain.draws.size();
  Eigen::MatrixXd q(n_draws, m);
  const Rng master(seed);
  for (std::size_t s = 0; s < n_draws; ++s) {
    Rng g = master.derive(41, s);
    const auto eta = krige_eta_draw(fitted, chain.draws[s], grid, grid_design, g, true);
    for (int i = 0; i < m; ++i) q(s, i) = gev::quantile(prob, eta[i]);
  }

  std::vector<SurfacePoint> out(m);
  std::vector<double> col(n_draws);
  for (int i = 0; i < m; ++i) {
    for (std::size_t s = 0; s < n_draws; ++s) col[s] = q(s, i);
    const auto hpd = sampler::hpd_interval(col, hpd_mass);
    out[i].location = grid[i];
    out[i].q_mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n_draws);
    out[i].q_lo = hpd.first;
    out[i].q_hi = hpd.second;
  }
  return out;
}

}  // namespace stormlevels::evaluate
