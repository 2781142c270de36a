#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "stormlevels/app.hpp"
#include "stormlevels/evaluate.hpp"
#include "stormlevels/simulate.hpp"
#include "stormlevels/version.hpp"

namespace stormlevels::app {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string likelihood_name(model::Likelihood l) {
  switch (l) {
    case model::Likelihood::weighted: return "weighted";
    case model::Likelihood::unweighted: return "unweighted";
    case model::Likelihood::pc_prior: return "pc_prior";
  }
  return "unknown";
}

std::string covkind_name(spatial::CovKind k) {
  return k == spatial::CovKind::matern ? "matern" : "powered_exponential";
}

std::string weight_mode_name(model::WeightMode m) {
  return m == model::WeightMode::gibbs_updated ? "gibbs_updated" : "fixed";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory: " + dir);
}

json sampler_config_json(const sampler::SamplerConfig& cfg) {
  return json{{"iterations", cfg.iterations},
              {"burn_in", cfg.burn_in},
              {"thin", cfg.thin},
              {"seed", cfg.seed},
              {"chains", cfg.chains},
              {"adapt_window", cfg.adapt_window},
              {"target_accept_block", cfg.target_accept_block},
              {"target_accept_scalar", cfg.target_accept_scalar}};
}

json model_spec_json(const model::ModelSpec& spec) {
  json processes = json::array();
  for (int k = 0; k < 3; ++k) {
    const auto& p = spec.process[k];
    processes.push_back(json{{"process", model::kProcessNames[k]},
                             {"coef_variance", p.coef_variance},
                             {"sill_shape", p.sill.shape},
                             {"sill_scale", p.sill.scale},
                             {"range_shape", p.range.shape},
                             {"range_rate", p.range.rate},
                             {"smooth_shape", p.smoothness.shape},
                             {"smooth_rate", p.smoothness.rate}});
  }
  return json{{"likelihood", likelihood_name(spec.likelihood)},
              {"weight_mode", weight_mode_name(spec.weight_mode)},
              {"covariance", covkind_name(spec.covariance)},
              {"jitter", spec.jitter},
              {"auto_hyperpriors", spec.auto_hyperpriors},
              {"pc_lambda_shape", spec.pc_lambda_prior.shape},
              {"pc_lambda_scale", spec.pc_lambda_prior.scale},
              {"weights",
               json{{"estimator", spec.weights.estimator ==
                                          dependence::ThetaEstimator::f_madogram
                                      ? "f_madogram"
                                      : "naive_frechet"},
                    {"min_overlap", spec.weights.min_overlap},
                    {"bandwidth", spec.weights.bandwidth},
                    {"n_bins", spec.weights.n_bins},
                    {"use_smoothed", spec.weights.use_smoothed_curve}}},
              {"priors", processes}};
}

void write_manifest(const std::string& path, json j) {
  j["version"] = kVersion;
  if (j.contains("config")) j["config_hash"] = io::string_digest(j["config"].dump());
  io::write_text_file(path, j.dump(2) + "\n");
}

// Row values in the canonical column order; mirrors draw_column_names.
void append_draw_row(std::string& out, const sampler::Draw& d, bool pc) {
  const auto put = [&out](double v) {
    out += io::format_double(v);
    out += ',';
  };
  for (Eigen::Index j = 0; j < d.mu.size(); ++j) put(d.mu(j));
  for (Eigen::Index j = 0; j < d.log_sigma.size(); ++j) put(d.log_sigma(j));
  for (Eigen::Index j = 0; j < d.xi.size(); ++j) put(d.xi(j));
  for (int k = 0; k < 3; ++k)
    for (Eigen::Index c = 0; c < d.beta[k].size(); ++c) put(d.beta[k](c));
  for (int k = 0; k < 3; ++k) {
    put(d.cov[k].sill);
    put(d.cov[k].range);
    put(d.cov[k].smoothness);
  }
  if (pc) put(d.pc_lambda);
  for (Eigen::Index j = 0; j < d.weights.size(); ++j) put(d.weights(j));
  out.back() = '\n';
}

std::string chain_to_csv(const sampler::ChainOutput& chain,
                         const std::vector<std::string>& ids) {
  const auto names = sampler::draw_column_names(chain, ids);
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    out += names[c];
    out += c + 1 == names.size() ? '\n' : ',';
  }
  const bool pc = chain.resolved_spec.likelihood == model::Likelihood::pc_prior;
  for (const auto& d : chain.draws) append_draw_row(out, d, pc);
  return out;
}

sampler::ChainOutput read_chain_csv(const std::string& path, int n_sites, int n_coef,
                                    model::Likelihood likelihood, spatial::CovKind kind,
                                    double jitter) {
  const auto table = io::read_csv(path);
  const bool pc = likelihood == model::Likelihood::pc_prior;
  const std::size_t expected = 3u * n_sites + 3u * n_coef + 9u + (pc ? 1u : 0u) + n_sites;
  if (table.header.size() != expected)
    throw io::ValidationError(path + ": unexpected column count " +
                              std::to_string(table.header.size()) + ", expected " +
                              std::to_string(expected));
  sampler::ChainOutput chain;
  chain.resolved_spec.likelihood = likelihood;
  chain.resolved_spec.covariance = kind;
  chain.draws.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = path + ": row " + std::to_string(r + 2);
    std::size_t c = 0;
    auto next = [&]() { return io::parse_double(row[c++], ctx); };
    sampler::Draw d;
    d.mu.resize(n_sites);
    d.log_sigma.resize(n_sites);
    d.xi.resize(n_sites);
    for (int j = 0; j < n_sites; ++j) d.mu(j) = next();
    for (int j = 0; j < n_sites; ++j) d.log_sigma(j) = next();
    for (int j = 0; j < n_sites; ++j) d.xi(j) = next();
    for (int k = 0; k < 3; ++k) {
      d.beta[k].resize(n_coef);
      for (int q = 0; q < n_coef; ++q) d.beta[k](q) = next();
    }
    for (int k = 0; k < 3; ++k) {
      d.cov[k].kind = kind;
      d.cov[k].jitter = jitter;
      d.cov[k].sill = next();
      d.cov[k].range = next();
      d.cov[k].smoothness = next();
    }
    d.pc_lambda = pc ? next() : 1.0;
    d.weights.resize(n_sites);
    for (int j = 0; j < n_sites; ++j) d.weights(j) = next();
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

struct FitArtifacts {
  StationSet data;
  std::vector<sampler::ChainOutput> chains;
  json manifest;
};

// Reads a fit directory back, re-ingesting the same station files and
// checking their digests against the manifest.
FitArtifacts read_fit_dir(const std::string& fit_dir, const std::string& stations_path,
                          const std::string& obs_path, CoordinateMode mode) {
  FitArtifacts art;
  const std::string manifest_path = fit_dir + "/manifest.json";
  art.manifest = json::parse(io::read_text_file(manifest_path));
  const auto& m = art.manifest;
  const std::string want_st = m.at("inputs").at("stations");
  const std::string want_ob = m.at("inputs").at("observations");
  if (io::file_digest(stations_path) != want_st || io::file_digest(obs_path) != want_ob)
    throw io::ValidationError("station or observation files differ from the ones used by " +
                              fit_dir);
  art.data = ingest(stations_path, obs_path, mode);
  const int n = art.data.n_stations();
  const int p = 1 + static_cast<int>(art.data.covariate_names.size());
  const auto& cfg = m.at("config");
  const std::string lik = cfg.at("model").at("likelihood");
  const model::Likelihood likelihood = lik == "weighted"
                                           ? model::Likelihood::weighted
                                           : (lik == "pc_prior" ? model::Likelihood::pc_prior
                                                                : model::Likelihood::unweighted);
  const spatial::CovKind kind = cfg.at("model").at("covariance") == "matern"
                                    ? spatial::CovKind::matern
                                    : spatial::CovKind::powered_exponential;
  const double jitter = cfg.at("model").at("jitter");
  for (const auto& f : m.at("outputs")) {
    const std::string name = f.get<std::string>();
    if (name.rfind("chain", 0) != 0) continue;
    art.chains.push_back(
        read_chain_csv(fit_dir + "/" + name, n, p, likelihood, kind, jitter));
  }
  if (art.chains.empty()) throw io::ValidationError(fit_dir + ": no chain files listed");
  return art;
}

sampler::ChainOutput pool_chains(std::vector<sampler::ChainOutput> chains) {
  sampler::ChainOutput pooled = std::move(chains.front());
  for (std::size_t c = 1; c < chains.size(); ++c)
    for (auto& d : chains[c].draws) pooled.draws.push_back(std::move(d));
  return pooled;
}

void print_warnings(const StationSet& data) {
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
}

// ------------------------------------------------------------- subcommands

struct CommonFitFlags {
  std::string stations, obs, config_path;
  std::string model_name = "weighted";
  std::string weight_mode = "fixed";
  std::string covariance;
  std::string coordinates = "planar";
  int iters = 0, burnin = -1, thin = 0, chains = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

bool flag_given(const CLI::App* cmd, const std::string& name) {
  const auto* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

RunConfig resolve_run_config(const CommonFitFlags& f, const CLI::App* cmd) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  if (flag_given(cmd, "--model")) {
    if (f.model_name == "weighted") cfg.model.likelihood = model::Likelihood::weighted;
    else if (f.model_name == "unweighted") cfg.model.likelihood = model::Likelihood::unweighted;
    else if (f.model_name == "pc" || f.model_name == "pc_prior")
      cfg.model.likelihood = model::Likelihood::pc_prior;
    else throw io::ValidationError("unknown model '" + f.model_name + "'");
  }
  if (flag_given(cmd, "--weights")) {
    if (f.weight_mode == "fixed") cfg.model.weight_mode = model::WeightMode::fixed;
    else if (f.weight_mode == "gibbs" || f.weight_mode == "gibbs_updated")
      cfg.model.weight_mode = model::WeightMode::gibbs_updated;
    else throw io::ValidationError("unknown weight mode '" + f.weight_mode + "'");
  }
  if (flag_given(cmd, "--covariance")) {
    if (f.covariance == "matern") cfg.model.covariance = spatial::CovKind::matern;
    else if (f.covariance == "powered_exponential" || f.covariance == "powexp")
      cfg.model.covariance = spatial::CovKind::powered_exponential;
    else throw io::ValidationError("unknown covariance '" + f.covariance + "'");
  }
  if (flag_given(cmd, "--coordinates")) {
    if (f.coordinates == "planar") cfg.coordinates = CoordinateMode::planar;
    else if (f.coordinates == "lonlat") cfg.coordinates = CoordinateMode::lonlat;
    else throw io::ValidationError("unknown coordinate mode '" + f.coordinates + "'");
  }
  if (f.iters > 0) cfg.chain.iterations = f.iters;
  if (f.burnin >= 0) cfg.chain.burn_in = f.burnin;
  if (f.thin > 0) cfg.chain.thin = f.thin;
  if (f.chains > 0) cfg.chain.chains = f.chains;
  if (f.seed_set) cfg.chain.seed = f.seed;
  if (f.threads > 0) cfg.threads = f.threads;
  if (cfg.model.weight_mode == model::WeightMode::gibbs_updated &&
      cfg.model.likelihood != model::Likelihood::weighted)
    cfg.model.weight_mode = model::WeightMode::fixed;
  return cfg;
}

int run_simulate(const std::string& out_dir, int n, int t, const std::string& dependence,
                 std::uint64_t seed, const std::string& algorithm, int n_spectral) {
  simulate::GeneratorConfig cfg = simulate::default_config();
  cfg.n_sites = n;
  cfg.n_times = t;
  cfg.dependence = simulate::dependence_from_string(dependence);
  cfg.seed = seed;
  if (algorithm == "spectral") cfg.br_algorithm = simulate::BrAlgorithm::approx_spectral;
  else if (algorithm != "exact") throw io::ValidationError("unknown simulation algorithm");
  cfg.n_spectral = n_spectral;

  const auto ds = simulate::assemble_dataset(cfg);
  ensure_dir(out_dir);

  std::string stations = "id,x,y,cov_x,cov_y\n";
  for (int j = 0; j < cfg.n_sites; ++j) {
    stations += ds.site_ids[j] + ',' + io::format_double(ds.sites[j].x) + ',' +
                io::format_double(ds.sites[j].y) + ',' + io::format_double(ds.sites[j].x) + ',' +
                io::format_double(ds.sites[j].y) + '\n';
  }
  io::write_text_file(out_dir + "/stations.csv", stations);

  std::string obs = "id,year,value\n";
  for (int j = 0; j < cfg.n_sites; ++j)
    for (int i = 0; i < cfg.n_times; ++i)
      obs += ds.site_ids[j] + ',' + std::to_string(ds.panel.years[i]) + ',' +
             io::format_double(ds.panel.values(i, j)) + '\n';
  io::write_text_file(out_dir + "/observations.csv", obs);

  std::string truth = "site,mu,sigma,xi,q99\n";
  for (int j = 0; j < cfg.n_sites; ++j) {
    const auto& e = ds.true_eta[j];
    truth += ds.site_ids[j] + ',' + io::format_double(e.mu()) + ',' +
             io::format_double(e.sigma()) + ',' + io::format_double(e.xi()) + ',' +
             io::format_double(gev::quantile(gev::Probability(0.99), e)) + '\n';
  }
  io::write_text_file(out_dir + "/truth.csv", truth);

  json manifest{{"tool", "simulate"},
                {"seed", seed},
                {"config",
                 json{{"n_sites", n},
                      {"n_times", t},
                      {"dependence", dependence},
                      {"algorithm", algorithm},
                      {"n_spectral", n_spectral}}},
                {"outputs", json::array({"stations.csv", "observations.csv", "truth.csv"})}};
  json digests;
  for (const char* f : {"stations.csv", "observations.csv", "truth.csv"})
    digests[f] = io::file_digest(out_dir + "/" + std::string(f));
  manifest["output_digests"] = digests;
  write_manifest(out_dir + "/manifest.json", manifest);
  return 0;
}

int run_weights(const std::string& stations, const std::string& obs, const std::string& out_dir,
                RunConfig cfg, bool raw_pairs) {
  const auto data = ingest(stations, obs, cfg.coordinates);
  print_warnings(data);
  auto opts = cfg.model.weights;
  if (raw_pairs) opts.use_smoothed_curve = false;
  const auto z = dependence::ecdf_transform(data.panel);
  const auto result = dependence::weights_from_frechet(z, data.sites(), opts);

  ensure_dir(out_dir);
  std::string wcsv = "site_id,weight\n";
  for (int j = 0; j < data.n_stations(); ++j)
    wcsv += data.stations[j].id + ',' + io::format_double(result.weights[j]) + '\n';
  io::write_text_file(out_dir + "/weights.csv", wcsv);

  std::string pcsv = "distance,theta_hat\n";
  for (const auto& p : result.pairs)
    pcsv += io::format_double(p.distance) + ',' + io::format_double(p.theta_hat) + '\n';
  io::write_text_file(out_dir + "/theta_pairs.csv", pcsv);

  json manifest{{"tool", "weights"},
                {"inputs", json{{"stations", io::file_digest(stations)},
                                {"observations", io::file_digest(obs)}}},
                {"config", json{{"model", model_spec_json(cfg.model)},
                                {"raw_pairs", raw_pairs}}},
                {"outputs", json::array({"weights.csv", "theta_pairs.csv"})}};
  write_manifest(out_dir + "/manifest.json", manifest);
  return 0;
}

int run_fit(const std::string& stations, const std::string& obs, const std::string& out_dir,
            const RunConfig& cfg) {
  const auto data = ingest(stations, obs, cfg.coordinates);
  print_warnings(data);
  const auto fit_data = data.fit_data();
  const int threads = resolve_threads(cfg.threads);
  const auto chains = sampler::run_chains(fit_data, cfg.model, cfg.chain, threads);

  ensure_dir(out_dir);
  json outputs = json::array();
  json acceptance = json::array();
  double seconds = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const std::string name = "chain_" + std::to_string(c + 1) + ".csv";
    io::write_text_file(out_dir + "/" + name, chain_to_csv(chains[c], fit_data.site_ids));
    outputs.push_back(name);
    acceptance.push_back(chains[c].accept_rates);
    seconds += chains[c].seconds;
  }

  json manifest{{"tool", "fit"},
                {"inputs", json{{"stations", io::file_digest(stations)},
                                {"observations", io::file_digest(obs)}}},
                {"config", json{{"model", model_spec_json(chains.front().resolved_spec)},
                                {"sampler", sampler_config_json(cfg.chain)},
                                {"coordinates",
                                 cfg.coordinates == CoordinateMode::lonlat ? "lonlat" : "planar"},
                                {"projection_lat0", data.projection_lat0}}},
                {"site_ids", fit_data.site_ids},
                {"covariates", data.covariate_names},
                {"n_draws_per_chain", chains.front().draws.size()},
                {"acceptance_rates", acceptance},
                {"weight_update_failures", chains.front().weight_update_failures},
                {"seconds", seconds},
                {"outputs", outputs}};
  write_manifest(out_dir + "/manifest.json", manifest);
  return 0;
}

int run_predict(const std::string& fit_dir, const std::string& stations, const std::string& obs,
                const std::string& grid_path, double p, const std::string& out_file,
                std::uint64_t seed, CoordinateMode mode) {
  auto art = read_fit_dir(fit_dir, stations, obs, mode);
  const auto chain = pool_chains(std::move(art.chains));
  const auto grid_table = io::read_csv(grid_path);
  if (grid_table.header.size() < 2 || grid_table.header[0] != "x" || grid_table.header[1] != "y")
    throw io::ValidationError(grid_path + ": header must start with x,y");
  std::vector<std::string> grid_covs(grid_table.header.begin() + 2, grid_table.header.end());
  if (grid_covs != art.data.covariate_names)
    throw io::ValidationError(grid_path + ": covariate columns must match the fitted stations");

  const int m = static_cast<int>(grid_table.rows.size());
  Sites grid(m);
  std::vector<Site> raw(m);
  Eigen::MatrixXd grid_design(m, 1 + grid_covs.size());
  for (int i = 0; i < m; ++i) {
    const auto& row = grid_table.rows[i];
    const std::string ctx = grid_path + ": row " + std::to_string(i + 2);
    raw[i] = Site{io::parse_double(row[0], ctx), io::parse_double(row[1], ctx)};
    grid[i] = mode == CoordinateMode::lonlat
                  ? project_lonlat(raw[i].x, raw[i].y, art.data.projection_lat0)
                  : raw[i];
    grid_design(i, 0) = 1.0;
    for (std::size_t c = 0; c < grid_covs.size(); ++c)
      grid_design(i, c + 1) = io::parse_double(row[c + 2], ctx);
  }

  const auto surface =
      evaluate::rl_surface(art.data.fit_data(), chain, grid, grid_design, p, seed);
  std::string csv = "x,y,q_mean,q_hpd_lo,q_hpd_hi\n";
  for (int i = 0; i < m; ++i)
    csv += io::format_double(raw[i].x) + ',' + io::format_double(raw[i].y) + ',' +
           io::format_double(surface[i].q_mean) + ',' + io::format_double(surface[i].q_lo) + ',' +
           io::format_double(surface[i].q_hi) + '\n';
  io::write_text_file(out_file, csv);

  json manifest{{"tool", "predict"},
                {"seed", seed},
                {"inputs", json{{"stations", io::file_digest(stations)},
                                {"observations", io::file_digest(obs)},
                                {"grid", io::file_digest(grid_path)},
                                {"fit_manifest", io::file_digest(fit_dir + "/manifest.json")}}},
                {"config", json{{"p", p}, {"n_draws", chain.draws.size()}}},
                {"outputs", json::array({fs::path(out_file).filename().string()})}};
  write_manifest(out_file + ".manifest.json", manifest);
  return 0;
}

int run_score(const std::string& stations, const std::string& obs, const std::string& out_dir,
              const RunConfig& cfg, const std::vector<std::string>& models,
              const std::string& holdout_ids, double holdout_frac, std::uint64_t holdout_seed) {
  const auto data = ingest(stations, obs, cfg.coordinates);
  print_warnings(data);
  const int n = data.n_stations();

  std::vector<int> holdout;
  if (!holdout_ids.empty()) {
    std::stringstream ss(holdout_ids);
    std::string id;
    while (std::getline(ss, id, ',')) {
      const int j = data.index_of(id);
      if (j < 0) throw io::ValidationError("holdout station '" + id + "' not found");
      holdout.push_back(j);
    }
  } else {
    const int k = std::max(1, static_cast<int>(std::ceil(holdout_frac * n)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(holdout_seed);
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
    holdout.assign(order.begin(), order.begin() + k);
    std::sort(holdout.begin(), holdout.end());
  }
  if (static_cast<int>(holdout.size()) >= n - 2)
    throw io::ValidationError("holdout set leaves too few stations for fitting");

  const auto train_idx = evaluate::complement_indices(n, holdout);
  const auto train = data.subset(train_idx);
  const auto hold = data.subset(holdout);

  std::string csv = "site_id,x,y,model,log_score,degenerate_draws\n";
  json summary = json::array();
  for (const auto& name : models) {
    model::ModelSpec mspec = cfg.model;
    if (name == "weighted") mspec.likelihood = model::Likelihood::weighted;
    else if (name == "unweighted") mspec.likelihood = model::Likelihood::unweighted;
    else if (name == "pc" || name == "pc_prior") mspec.likelihood = model::Likelihood::pc_prior;
    else throw io::ValidationError("unknown model '" + name + "'");
    if (mspec.likelihood != model::Likelihood::weighted)
      mspec.weight_mode = model::WeightMode::fixed;

    const auto chain = sampler::run_chain(train.fit_data(), mspec, cfg.chain);
    const auto scores = evaluate::holdout_logscore(
        train.fit_data(), chain, hold.panel, hold.sites(), hold.design(), hold.ids(),
        cfg.chain.seed + 77);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto& st = hold.stations[i];
      csv += st.id + ',' + io::format_double(st.raw_x) + ',' + io::format_double(st.raw_y) + ',' +
             name + ',' + io::format_double(scores[i].log_score) + ',' +
             std::to_string(scores[i].degenerate_draws) + '\n';
      summary.push_back(json{{"site", st.id},
                             {"model", name},
                             {"log_score", scores[i].log_score},
                             {"degenerate_draws", scores[i].degenerate_draws}});
    }
  }
  ensure_dir(out_dir);
  io::write_text_file(out_dir + "/scores.csv", csv);

  json holdout_names = json::array();
  for (int j : holdout) holdout_names.push_back(data.stations[j].id);
  json manifest{{"tool", "score"},
                {"inputs", json{{"stations", io::file_digest(stations)},
                                {"observations", io::file_digest(obs)}}},
                {"config", json{{"model", model_spec_json(cfg.model)},
                                {"sampler", sampler_config_json(cfg.chain)},
                                {"models", models},
                                {"holdout", holdout_names},
                                {"holdout_seed", holdout_seed}}},
                {"scores", summary},
                {"outputs", json::array({"scores.csv"})}};
  write_manifest(out_dir + "/manifest.json", manifest);
  return 0;
}

int run_study(const std::string& out_dir, const std::vector<std::string>& dependences, int n,
              int t, int replicates, const std::vector<std::string>& models,
              const RunConfig& cfg) {
  evaluate::StudySpec spec;
  spec.dependences.clear();
  for (const auto& d : dependences) spec.dependences.push_back(simulate::dependence_from_string(d));
  spec.models.clear();
  for (const auto& m : models) {
    if (m == "weighted") spec.models.push_back(model::Likelihood::weighted);
    else if (m == "unweighted") spec.models.push_back(model::Likelihood::unweighted);
    else if (m == "pc" || m == "pc_prior") spec.models.push_back(model::Likelihood::pc_prior);
    else throw io::ValidationError("unknown model '" + m + "'");
  }
  spec.n_sites = n;
  spec.n_times = t;
  spec.replicates = replicates;
  spec.weight_mode = cfg.model.weight_mode;
  spec.chain = cfg.chain;
  spec.seed = cfg.chain.seed;
  spec.threads = resolve_threads(cfg.threads);

  const auto cells = evaluate::coverage_study(spec);

  ensure_dir(out_dir);
  std::string csv =
      "dependence,n_sites,n_times,model,replicates_used,failed_fits,aborted,n_pooled,"
      "coverage,coverage_se,mse,bias2,variance\n";
  json rows = json::array();
  for (const auto& c : cells) {
    csv += simulate::to_string(c.dependence) + ',' + std::to_string(c.n_sites) + ',' +
           std::to_string(c.n_times) + ',' + likelihood_name(c.likelihood) + ',' +
           std::to_string(c.replicates_used) + ',' + std::to_string(c.failed_fits) + ',' +
           (c.aborted ? "1" : "0") + ',' + std::to_string(c.n_pooled) + ',' +
           io::format_double(c.coverage) + ',' + io::format_double(c.coverage_se) + ',' +
           io::format_double(c.mse) + ',' + io::format_double(c.bias2) + ',' +
           io::format_double(c.variance) + '\n';
    rows.push_back(json{{"dependence", simulate::to_string(c.dependence)},
                        {"model", likelihood_name(c.likelihood)},
                        {"coverage", c.coverage},
                        {"coverage_se", c.coverage_se},
                        {"mse", c.mse},
                        {"failed_fits", c.failed_fits},
                        {"aborted", c.aborted}});
  }
  io::write_text_file(out_dir + "/study.csv", csv);

  json manifest{{"tool", "study"},
                {"seed", spec.seed},
                {"config", json{{"dependences", dependences},
                                {"models", models},
                                {"n_sites", n},
                                {"n_times", t},
                                {"replicates", replicates},
                                {"sampler", sampler_config_json(cfg.chain)},
                                {"weight_mode", weight_mode_name(cfg.model.weight_mode)}}},
                {"cells", rows},
                {"outputs", json::array({"study.csv"})}};
  write_manifest(out_dir + "/manifest.json", manifest);
  return 0;
}

int run_diagnose(const std::string& fit_dir, const std::string& stations, const std::string& obs,
                 const std::string& out_file, CoordinateMode mode) {
  auto art = read_fit_dir(fit_dir, stations, obs, mode);
  const auto chain = pool_chains(std::move(art.chains));
  const auto report = sampler::diagnostics(chain, art.data.ids());
  std::string csv = "name,mean,sd,ess,iact,hpd_lo,hpd_hi\n";
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    const auto& s = report.stats[i];
    csv += report.names[i] + ',' + io::format_double(s.mean) + ',' + io::format_double(s.sd) +
           ',' + io::format_double(s.ess) + ',' + io::format_double(s.iact) + ',' +
           io::format_double(s.hpd_lo) + ',' + io::format_double(s.hpd_hi) + '\n';
  }
  io::write_text_file(out_file, csv);
  json manifest{{"tool", "diagnose"},
                {"inputs", json{{"fit_manifest", io::file_digest(fit_dir + "/manifest.json")}}},
                {"config", json{{"n_draws", chain.draws.size()}}},
                {"outputs", json::array({fs::path(out_file).filename().string()})}};
  write_manifest(out_file + ".manifest.json", manifest);
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App cli{"Spatial extremes return levels with dependence-weighted likelihoods"};
  cli.require_subcommand(1);

  // ---- simulate
  auto* sim = cli.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_out, sim_dep = "moderate", sim_alg = "exact";
  int sim_n = 50, sim_t = 50, sim_nspec = 1000;
  std::uint64_t sim_seed = 1;
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--n", sim_n, "Number of sites");
  sim->add_option("--t", sim_t, "Number of years");
  sim->add_option("--dependence", sim_dep, "independent|weak|moderate|strong");
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--algorithm", sim_alg, "exact|spectral");
  sim->add_option("--n-spectral", sim_nspec, "Spectral truncation (spectral mode)");

  // ---- shared fit-like flags
  auto add_fit_flags = [](CLI::App* cmd, CommonFitFlags& f, bool with_model = true) {
    cmd->add_option("--stations", f.stations, "Stations CSV")->required();
    cmd->add_option("--obs", f.obs, "Observations CSV")->required();
    cmd->add_option("--config", f.config_path, "Config file (INI-style)");
    cmd->add_option("--coordinates", f.coordinates, "planar|lonlat");
    cmd->add_option("--threads", f.threads, "Worker threads");
    if (with_model) {
      cmd->add_option("--model", f.model_name, "weighted|unweighted|pc");
      cmd->add_option("--weights", f.weight_mode, "fixed|gibbs");
      cmd->add_option("--covariance", f.covariance, "powered_exponential|matern");
      cmd->add_option("--iters", f.iters, "MCMC iterations");
      cmd->add_option("--burnin", f.burnin, "Burn-in iterations");
      cmd->add_option("--thin", f.thin, "Thinning stride");
      cmd->add_option("--chains", f.chains, "Number of chains");
      cmd->add_option("--seed", f.seed, "Random seed")->each([&f](const std::string&) {
        f.seed_set = true;
      });
    }
  };

  // ---- weights
  auto* wcmd = cli.add_subcommand("weights", "Extremal-coefficient likelihood weights");
  CommonFitFlags wflags;
  std::string w_out;
  bool w_raw = false;
  add_fit_flags(wcmd, wflags, false);
  wcmd->add_option("--out", w_out, "Output directory")->required();
  wcmd->add_flag("--raw-pairs", w_raw, "Average raw pairwise estimates instead of the curve");
  std::string w_estimator;
  int w_min_overlap = 0;
  double w_bandwidth = 0.0;
  wcmd->add_option("--estimator", w_estimator, "naive|fmadogram");
  wcmd->add_option("--min-overlap", w_min_overlap, "Minimum overlapping years per pair");
  wcmd->add_option("--bandwidth", w_bandwidth, "Kernel bandwidth (0 = auto)");

  // ---- fit
  auto* fcmd = cli.add_subcommand("fit", "Fit a latent spatial model by MCMC");
  CommonFitFlags fflags;
  std::string f_out;
  add_fit_flags(fcmd, fflags);
  fcmd->add_option("--out", f_out, "Output directory")->required();

  // ---- predict
  auto* pcmd = cli.add_subcommand("predict", "Return-level surface on a grid");
  std::string p_fit, p_stations, p_obs, p_grid, p_out, p_coords = "planar";
  double p_prob = 0.99;
  std::uint64_t p_seed = 1;
  pcmd->add_option("--fit", p_fit, "Fit output directory")->required();
  pcmd->add_option("--stations", p_stations, "Stations CSV used for the fit")->required();
  pcmd->add_option("--obs", p_obs, "Observations CSV used for the fit")->required();
  pcmd->add_option("--grid", p_grid, "Grid CSV (x,y,cov_*)")->required();
  pcmd->add_option("--out", p_out, "Output CSV")->required();
  pcmd->add_option("--p", p_prob, "Quantile probability");
  pcmd->add_option("--seed", p_seed, "Seed for conditional draws");
  pcmd->add_option("--coordinates", p_coords, "planar|lonlat");

  // ---- score
  auto* scmd = cli.add_subcommand("score", "Holdout log-score comparison");
  CommonFitFlags sflags;
  std::string s_out, s_models = "weighted,unweighted", s_holdout;
  double s_frac = 0.1;
  std::uint64_t s_hseed = 1;
  add_fit_flags(scmd, sflags);
  scmd->add_option("--out", s_out, "Output directory")->required();
  scmd->add_option("--models", s_models, "Comma-separated model list");
  scmd->add_option("--holdout", s_holdout, "Comma-separated station ids");
  scmd->add_option("--holdout-frac", s_frac, "Holdout fraction when ids are not given");
  scmd->add_option("--holdout-seed", s_hseed, "Seed for holdout selection");

  // ---- study
  auto* tcmd = cli.add_subcommand("study", "Simulation study: coverage and MSE");
  CommonFitFlags tflags;
  std::string t_out, t_deps = "moderate", t_models = "weighted,unweighted";
  int t_n = 30, t_t = 50, t_reps = 50;
  add_fit_flags(tcmd, tflags);
  tcmd->add_option("--out", t_out, "Output directory")->required();
  tcmd->add_option("--dependence", t_deps, "Comma-separated dependence levels");
  tcmd->add_option("--models", t_models, "Comma-separated model list");
  tcmd->add_option("--n", t_n, "Sites per dataset");
  tcmd->add_option("--t", t_t, "Years per dataset");
  tcmd->add_option("--replicates", t_reps, "Replicates per cell");
  tcmd->get_option("--stations")->required(false);
  tcmd->get_option("--obs")->required(false);

  // ---- diagnose
  auto* dcmd = cli.add_subcommand("diagnose", "Chain diagnostics: ESS, IACT, HPD");
  std::string d_fit, d_stations, d_obs, d_out, d_coords = "planar";
  dcmd->add_option("--fit", d_fit, "Fit output directory")->required();
  dcmd->add_option("--stations", d_stations, "Stations CSV used for the fit")->required();
  dcmd->add_option("--obs", d_obs, "Observations CSV used for the fit")->required();
  dcmd->add_option("--out", d_out, "Output CSV")->required();
  dcmd->add_option("--coordinates", d_coords, "planar|lonlat");

  std::vector<std::string> argv_copy = args;
  std::vector<char*> argv;
  std::string prog = "stormlevels";
  argv.push_back(prog.data());
  for (auto& a : argv_copy) argv.push_back(a.data());

  try {
    cli.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };

  try {
    if (sim->parsed())
      return run_simulate(sim_out, sim_n, sim_t, sim_dep, sim_seed, sim_alg, sim_nspec);
    if (wcmd->parsed()) {
      RunConfig cfg = resolve_run_config(wflags, wcmd);
      if (flag_given(wcmd, "--estimator")) {
        if (w_estimator == "naive")
          cfg.model.weights.estimator = dependence::ThetaEstimator::naive_frechet;
        else if (w_estimator == "fmadogram")
          cfg.model.weights.estimator = dependence::ThetaEstimator::f_madogram;
        else
          throw io::ValidationError("unknown estimator '" + w_estimator + "'");
      }
      if (w_min_overlap > 0) cfg.model.weights.min_overlap = w_min_overlap;
      if (w_bandwidth > 0) cfg.model.weights.bandwidth = w_bandwidth;
      return run_weights(wflags.stations, wflags.obs, w_out, cfg, w_raw);
    }
    if (fcmd->parsed())
      return run_fit(fflags.stations, fflags.obs, f_out, resolve_run_config(fflags, fcmd));
    if (pcmd->parsed()) {
      const CoordinateMode mode =
          p_coords == "lonlat" ? CoordinateMode::lonlat : CoordinateMode::planar;
      return run_predict(p_fit, p_stations, p_obs, p_grid, p_prob, p_out, p_seed, mode);
    }
    if (scmd->parsed())
      return run_score(sflags.stations, sflags.obs, s_out, resolve_run_config(sflags, scmd),
                       split_list(s_models), s_holdout, s_frac, s_hseed);
    if (tcmd->parsed())
      return run_study(t_out, split_list(t_deps), t_n, t_t, t_reps, split_list(t_models),
                       resolve_run_config(tflags, tcmd));
    if (dcmd->parsed()) {
      const CoordinateMode mode =
          d_coords == "lonlat" ? CoordinateMode::lonlat : CoordinateMode::planar;
      return run_diagnose(d_fit, d_stations, d_obs, d_out, mode);
    }
  } catch (const io::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

}  // namespace stormlevels::app
