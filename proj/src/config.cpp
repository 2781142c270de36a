#include <algorithm>
#include <cstdlib>

#include "stormlevels/app.hpp"
#include "stormlevels/threading.hpp"

namespace stormlevels::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw io::ValidationError("config: " + key + " must be a boolean, got '" + v + "'");
}

model::Likelihood parse_likelihood(const std::string& v) {
  if (v == "weighted") return model::Likelihood::weighted;
  if (v == "unweighted") return model::Likelihood::unweighted;
  if (v == "pc" || v == "pc_prior") return model::Likelihood::pc_prior;
  throw io::ValidationError("config: unknown likelihood '" + v + "'");
}

model::WeightMode parse_weight_mode(const std::string& v) {
  if (v == "fixed") return model::WeightMode::fixed;
  if (v == "gibbs" || v == "gibbs_updated") return model::WeightMode::gibbs_updated;
  throw io::ValidationError("config: unknown weight mode '" + v + "'");
}

spatial::CovKind parse_covariance(const std::string& v) {
  if (v == "powered_exponential" || v == "powexp") return spatial::CovKind::powered_exponential;
  if (v == "matern") return spatial::CovKind::matern;
  throw io::ValidationError("config: unknown covariance kind '" + v + "'");
}

int process_index(const std::string& name) {
  for (int k = 0; k < 3; ++k)
    if (name == model::kProcessNames[k]) return k;
  return -1;
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
  std::map<std::string, std::string> keys;
  std::string section;
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string line = text.substr(start, end == std::string::npos ? end : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw io::ValidationError("config line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io::ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw io::ValidationError("config line " + std::to_string(line_no) + ": empty key");
    keys[section.empty() ? key : section + "." + key] = value;
  }
  return keys;
}

void apply_config_map(RunConfig& cfg, const std::map<std::string, std::string>& keys) {
  for (const auto& [key, value] : keys) {
    const std::string ctx = "config key " + key;
    if (key == "model.likelihood") {
      cfg.model.likelihood = parse_likelihood(value);
    } else if (key == "model.weight_mode") {
      cfg.model.weight_mode = parse_weight_mode(value);
    } else if (key == "model.covariance") {
      cfg.model.covariance = parse_covariance(value);
    } else if (key == "model.jitter") {
      cfg.model.jitter = io::parse_double(value, ctx);
    } else if (key == "model.coef_variance") {
      const double v = io::parse_double(value, ctx);
      for (auto& p : cfg.model.process) p.coef_variance = v;
    } else if (key == "weights.estimator") {
      if (value == "naive" || value == "naive_frechet")
        cfg.model.weights.estimator = dependence::ThetaEstimator::naive_frechet;
      else if (value == "fmadogram" || value == "f_madogram")
        cfg.model.weights.estimator = dependence::ThetaEstimator::f_madogram;
      else
        throw io::ValidationError(ctx + ": unknown estimator '" + value + "'");
    } else if (key == "weights.min_overlap") {
      cfg.model.weights.min_overlap = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "weights.bandwidth") {
      cfg.model.weights.bandwidth = io::parse_double(value, ctx);
    } else if (key == "weights.n_bins") {
      cfg.model.weights.n_bins = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "weights.use_smoothed") {
      cfg.model.weights.use_smoothed_curve = parse_bool(value, key);
    } else if (key == "priors.auto") {
      cfg.model.auto_hyperpriors = parse_bool(value, key);
    } else if (key == "pc.lambda_shape") {
      cfg.model.pc_lambda_prior.shape = io::parse_double(value, ctx);
    } else if (key == "pc.lambda_scale") {
      cfg.model.pc_lambda_prior.scale = io::parse_double(value, ctx);
    } else if (key == "sampler.iterations") {
      cfg.chain.iterations = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "sampler.burn_in") {
      cfg.chain.burn_in = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "sampler.thin") {
      cfg.chain.thin = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "sampler.seed") {
      cfg.chain.seed = static_cast<std::uint64_t>(io::parse_long(value, ctx));
    } else if (key == "sampler.chains") {
      cfg.chain.chains = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "sampler.adapt_window") {
      cfg.chain.adapt_window = static_cast<int>(io::parse_long(value, ctx));
    } else if (key == "sampler.target_accept_block") {
      cfg.chain.target_accept_block = io::parse_double(value, ctx);
    } else if (key == "sampler.target_accept_scalar") {
      cfg.chain.target_accept_scalar = io::parse_double(value, ctx);
    } else if (key == "app.coordinates") {
      if (value == "planar")
        cfg.coordinates = CoordinateMode::planar;
      else if (value == "lonlat")
        cfg.coordinates = CoordinateMode::lonlat;
      else
        throw io::ValidationError(ctx + ": expected planar or lonlat");
    } else if (key == "app.threads") {
      cfg.threads = static_cast<int>(io::parse_long(value, ctx));
    } else {
      // per-process prior overrides: priors.<proc>.<field>
      bool handled = false;
      if (key.rfind("priors.", 0) == 0) {
        const auto rest = key.substr(7);
        const auto dot = rest.find('.');
        if (dot != std::string::npos) {
          const int k = process_index(rest.substr(0, dot));
          const std::string field = rest.substr(dot + 1);
          if (k >= 0) {
            auto& prior = cfg.model.process[k];
            const double v = io::parse_double(value, ctx);
            handled = true;
            if (field == "sill_shape") prior.sill.shape = v;
            else if (field == "sill_scale") prior.sill.scale = v;
            else if (field == "range_shape") prior.range.shape = v;
            else if (field == "range_rate") prior.range.rate = v;
            else if (field == "smooth_shape") prior.smoothness.shape = v;
            else if (field == "smooth_rate") prior.smoothness.rate = v;
            else if (field == "coef_variance") prior.coef_variance = v;
            else handled = false;
          }
        }
      }
      if (!handled) throw io::ValidationError("config: unknown key '" + key + "'");
    }
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  apply_config_map(cfg, parse_ini(io::read_text_file(path)));
  return cfg;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("STORMLEVELS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return hardware_threads();
}

}  // namespace stormlevels::app
