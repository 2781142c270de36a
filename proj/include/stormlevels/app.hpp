#pragma once

#include <map>
#include <string>
#include <vector>

#include "stormlevels/io.hpp"
#include "stormlevels/model.hpp"
#include "stormlevels/sampler.hpp"

namespace stormlevels::app {

enum class CoordinateMode { planar, lonlat };

inline constexpr double kEarthRadiusKm = 6371.0088;

// Equirectangular projection about lat0; Euclidean distances in the image
// match great-circle kilometres to second order over small domains.
Site project_lonlat(double lon, double lat, double lat0);

struct Station {
  std::string id;
  double raw_x = 0.0;  // as read; lon in lonlat mode
  double raw_y = 0.0;  // lat in lonlat mode
  double x = 0.0;      // working planar coordinates
  double y = 0.0;
  std::vector<double> covariates;
};

struct StationSet {
  std::vector<Station> stations;
  std::vector<std::string> covariate_names;  // cov_* header names
  Panel panel;                               // columns follow stations order
  CoordinateMode mode = CoordinateMode::planar;
  double projection_lat0 = 0.0;              // lonlat mode only
  std::vector<std::string> warnings;         // short-record stations etc.

  int n_stations() const { return static_cast<int>(stations.size()); }
  Sites sites() const;
  std::vector<std::string> ids() const;
  Eigen::MatrixXd design() const;  // intercept column plus covariates
  sampler::FitData fit_data() const;
  StationSet subset(const std::vector<int>& keep) const;
  int index_of(const std::string& id) const;  // -1 when absent
};

/* Reads and cross-validates the two input files. Stations need header
 * id,x,y,cov_* (id,lon,lat,cov_* accepted in lonlat mode); observations need
 * header id,year,value. Stations with fewer than 2 observations are
 * rejected; fewer than 18 produces a warning. */
StationSet ingest(const std::string& stations_csv, const std::string& observations_csv,
                  CoordinateMode mode = CoordinateMode::planar);

struct RunConfig {
  model::ModelSpec model;
  sampler::SamplerConfig chain;
  CoordinateMode coordinates = CoordinateMode::planar;
  int threads = 0;  // 0 = use all hardware threads
};

// Flat key-value text with [section] headers; '#' and ';' start comments.
std::map<std::string, std::string> parse_ini(const std::string& text);
void apply_config_map(RunConfig& cfg, const std::map<std::string, std::string>& keys);
RunConfig load_config(const std::string& path);

int resolve_threads(int flag_value);  // flag beats STORMLEVELS_THREADS beats hardware

int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

}  // namespace stormlevels::app
