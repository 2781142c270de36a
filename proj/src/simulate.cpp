#include "stormlevels/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace stormlevels::simulate {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One unit Frechet draw.
double frechet_draw(Rng& rng) { return -1.0 / std::log(rng.uniform()); }

/* Gaussian machinery for the spectral processes anchored at one site: the
 * log-Gaussian field W(s_i) - W(s_anchor) has variance gamma(d_i,anchor) and
 * covariance (gamma_ia + gamma_ja - gamma_ij) / 2. The anchor coordinate is
 * identically zero and is left out of the factorization. */
struct AnchoredGaussian {
  int anchor = 0;
  std::vector<int> others;           // indices != anchor
  Eigen::VectorXd drift;             // gamma(d_i,anchor)/2 for i in others
  Eigen::MatrixXd chol;              // lower factor of the (N-1)-dim covariance

  // spectral function at all N sites, anchor value exactly 1
  Eigen::VectorXd draw(int n_sites, Rng& rng) const {
    Eigen::VectorXd z(others.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd g = chol * z;
    Eigen::VectorXd y = Eigen::VectorXd::Ones(n_sites);
    for (std::size_t i = 0; i < others.size(); ++i)
      y(others[i]) = std::exp(g(static_cast<Eigen::Index>(i)) - drift(static_cast<Eigen::Index>(i)));
    return y;
  }
};

AnchoredGaussian make_anchored(const Semivariogram& gamma, const Eigen::MatrixXd& dist,
                               int anchor) {
  const int n = static_cast<int>(dist.rows());
  AnchoredGaussian a;
  a.anchor = anchor;
  for (int i = 0; i < n; ++i)
    if (i != anchor) a.others.push_back(i);
  const int m = static_cast<int>(a.others.size());
  a.drift.resize(m);
  Eigen::MatrixXd cov(m, m);
  for (int i = 0; i < m; ++i) {
    const double gia = gamma(dist(a.others[i], anchor));
    a.drift(i) = 0.5 * gia;
    for (int j = 0; j <= i; ++j) {
      const double gja = gamma(dist(a.others[j], anchor));
      const double gij = gamma(dist(a.others[i], a.others[j]));
      cov(i, j) = cov(j, i) = 0.5 * (gia + gja - gij);
    }
  }
  cov.diagonal().array() += 1e-10;
  a.chol = spatial::safe_llt(std::move(cov), 1e-10).matrixL();
  return a;
}

// Exact simulation: sweep the sites, simulating only the Poisson points
// whose spectral functions attain the running maximum somewhere.
Eigen::VectorXd br_exact_one(const std::vector<AnchoredGaussian>& anchors, int n, Rng& rng) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int site = 0; site < n; ++site) {
    double arrivals = rng.exponential();
    double zeta = 1.0 / arrivals;
    while (zeta > z(site)) {
      const Eigen::VectorXd y = anchors[site].draw(n, rng);
      bool dominated = false;
      for (int i = 0; i < site; ++i) {
        if (zeta * y(i) >= z(i)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) z = z.cwiseMax(zeta * y);
      arrivals += rng.exponential();
      zeta = 1.0 / arrivals;
    }
  }
  return z;
}

// Truncated spectral maximum anchored at the domain centre. Cheap, but the
// finite truncation biases the largest values low.
Eigen::VectorXd br_spectral_one(const AnchoredGaussian& origin_anchor, int n, int n_spectral,
                                Rng& rng) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  double arrivals = 0.0;
  for (int k = 0; k < n_spectral; ++k) {
    arrivals += rng.exponential();
    const double zeta = 1.0 / arrivals;
    const Eigen::VectorXd y = origin_anchor.draw(n + 1, rng);
    z = z.cwiseMax(zeta * y.head(n));
  }
  return z;
}

}  // namespace

Dependence dependence_from_string(const std::string& name) {
  if (name == "independent") return Dependence::independent;
  if (name == "weak") return Dependence::weak;
  if (name == "moderate") return Dependence::moderate;
  if (name == "strong") return Dependence::strong;
  throw std::invalid_argument("unknown dependence level: " + name);
}

std::string to_string(Dependence d) {
  switch (d) {
    case Dependence::independent: return "independent";
    case Dependence::weak: return "weak";
    case Dependence::moderate: return "moderate";
    case Dependence::strong: return "strong";
  }
  return "unknown";
}

double Semivariogram::operator()(double d) const {
  if (d <= 0.0) return 0.0;
  return std::pow(d / lambda, alpha);
}

Semivariogram dependence_params(Dependence d) {
  switch (d) {
    case Dependence::weak: return {0.25, 0.75};
    case Dependence::moderate: return {0.5, 0.5};
    case Dependence::strong: return {0.75, 0.25};
    case Dependence::independent: break;
  }
  throw std::invalid_argument("independent data have no semivariogram");
}

double analytic_theta(double gamma_value) {
  return 2.0 * std_normal_cdf(std::sqrt(gamma_value) / 2.0);
}

void GeneratorConfig::validate() const {
  if (n_sites < 2) throw std::invalid_argument("generator: at least two sites");
  if (n_times < 1) throw std::invalid_argument("generator: at least one replicate");
  if (!(domain_half > 0.0)) throw std::invalid_argument("generator: domain size must be positive");
  if (dependence != Dependence::independent) {
    const auto g = dependence_params(dependence);
    if (!(g.lambda > 0.0) || !(g.alpha > 0.0 && g.alpha <= 2.0))
      throw std::invalid_argument("generator: semivariogram needs lambda > 0, alpha in (0,2]");
  }
  if (br_algorithm == BrAlgorithm::approx_spectral && n_spectral < 1)
    throw std::invalid_argument("generator: n_spectral must be positive");
  mu_field.cov.validate();
  logsigma_field.cov.validate();
  xi_field.cov.validate();
}

GeneratorConfig default_config() {
  GeneratorConfig cfg;
  cfg.mu_field = {26.0, 0.5, 0.0,
                  {spatial::CovKind::powered_exponential, 4.0, 20.0, 1.0, 1e-8}};
  cfg.logsigma_field = {std::log(10.0), 0.0, 0.05,
                        {spatial::CovKind::powered_exponential, 0.4, 5.0, 1.0, 1e-8}};
  cfg.xi_field = {0.12, 0.0, 0.0,
                  {spatial::CovKind::powered_exponential, 0.0012, 10.0, 1.0, 1e-8}};
  return cfg;
}

Sites sample_sites(const GeneratorConfig& cfg, Rng& rng) {
  Sites sites(cfg.n_sites);
  for (auto& s : sites) {
    s.x = (2.0 * rng.uniform() - 1.0) * cfg.domain_half;
    s.y = (2.0 * rng.uniform() - 1.0) * cfg.domain_half;
  }
  return sites;
}

std::vector<gev::GevParams> sample_parameter_fields(const GeneratorConfig& cfg, const Sites& sites,
                                                    Rng& rng) {
  const int n = static_cast<int>(sites.size());
  auto field_mean = [&](const FieldConfig& f) {
    Eigen::VectorXd m(n);
    for (int j = 0; j < n; ++j) m(j) = f.mean_at(sites[j]);
    return m;
  };
  Rng mu_rng = rng.derive(11);
  Rng ls_rng = rng.derive(12);
  Rng xi_rng = rng.derive(13);
  const Eigen::VectorXd mu = spatial::gp_sample(cfg.mu_field.cov, sites,
                                                field_mean(cfg.mu_field), mu_rng);
  const Eigen::VectorXd ls = spatial::gp_sample(cfg.logsigma_field.cov, sites,
                                                field_mean(cfg.logsigma_field), ls_rng);
  Eigen::VectorXd xi;
  int attempt = 0;
  const Eigen::VectorXd xi_mean = field_mean(cfg.xi_field);
  do {
    if (attempt++ >= cfg.max_xi_redraws)
      throw std::runtime_error("sample_parameter_fields: shape field redraw cap exceeded");
    xi = spatial::gp_sample(cfg.xi_field.cov, sites, xi_mean, xi_rng);
  } while (xi.minCoeff() <= 0.0);

  std::vector<gev::GevParams> eta;
  eta.reserve(n);
  for (int j = 0; j < n; ++j) eta.emplace_back(mu(j), ls(j), xi(j));
  return eta;
}

Eigen::MatrixXd sample_br_frechet(const Semivariogram& gamma, const Sites& sites, int t, Rng& rng,
                                  BrAlgorithm algorithm, int n_spectral) {
  const int n = static_cast<int>(sites.size());
  const Eigen::MatrixXd dist = distance_matrix(sites);
  Eigen::MatrixXd z(t, n);

  if (algorithm == BrAlgorithm::exact_extremal) {
    std::vector<AnchoredGaussian> anchors;
    anchors.reserve(n);
    for (int j = 0; j < n; ++j) anchors.push_back(make_anchored(gamma, dist, j));
    for (int i = 0; i < t; ++i) {
      Rng replicate = rng.derive(21, static_cast<std::uint64_t>(i));
      z.row(i) = br_exact_one(anchors, n, replicate).transpose();
    }
    return z;
  }

  // anchor the spectral representation at an extra virtual site (the centre)
  Sites extended = sites;
  extended.push_back(Site{0.0, 0.0});
  const Eigen::MatrixXd dist_ext = distance_matrix(extended);
  const AnchoredGaussian origin = make_anchored(gamma, dist_ext, n);
  for (int i = 0; i < t; ++i) {
    Rng replicate = rng.derive(22, static_cast<std::uint64_t>(i));
    z.row(i) = br_spectral_one(origin, n, n_spectral, replicate).transpose();
  }
  return z;
}

SyntheticDataset assemble_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticDataset ds;
  ds.config = cfg;
  Rng site_rng = rng.derive(1);
  ds.sites = sample_sites(cfg, site_rng);
  Rng field_rng = rng.derive(2);
  ds.true_eta = sample_parameter_fields(cfg, ds.sites, field_rng);

  ds.site_ids.reserve(cfg.n_sites);
  for (int j = 0; j < cfg.n_sites; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%03d", j + 1);
    ds.site_ids.emplace_back(buf);
  }

  Eigen::MatrixXd z(cfg.n_times, cfg.n_sites);
  Rng dep_rng = rng.derive(3);
  if (cfg.dependence == Dependence::independent) {
    for (int i = 0; i < cfg.n_times; ++i) {
      Rng replicate = dep_rng.derive(23, static_cast<std::uint64_t>(i));
      for (int j = 0; j < cfg.n_sites; ++j) z(i, j) = frechet_draw(replicate);
    }
  } else {
    z = sample_br_frechet(dependence_params(cfg.dependence), ds.sites, cfg.n_times, dep_rng,
                          cfg.br_algorithm, cfg.n_spectral);
  }

  ds.panel.years.resize(cfg.n_times);
  for (int i = 0; i < cfg.n_times; ++i) ds.panel.years[i] = i + 1;
  ds.panel.values.resize(cfg.n_times, cfg.n_sites);
  for (int j = 0; j < cfg.n_sites; ++j) {
    for (int i = 0; i < cfg.n_times; ++i) {
      // unit Frechet cdf exp(-1/z), clamped inside (0,1) against overflow
      double u = std::exp(-1.0 / z(i, j));
      u = std::min(u, 1.0 - 1e-16);
      u = std::max(u, 1e-300);
      ds.panel.values(i, j) = gev::quantile(gev::Probability(u), ds.true_eta[j]);
    }
  }
  return ds;
}

}  // namespace stormlevels::simulate
