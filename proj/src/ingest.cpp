#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "stormlevels/app.hpp"

namespace stormlevels::app {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
constexpr int kShortRecordWarning = 18;
}  // namespace

Site project_lonlat(double lon, double lat, double lat0) {
  return Site{kEarthRadiusKm * std::cos(lat0 * kDegToRad) * lon * kDegToRad,
              kEarthRadiusKm * lat * kDegToRad};
}

Sites StationSet::sites() const {
  Sites s;
  s.reserve(stations.size());
  for (const auto& st : stations) s.push_back(Site{st.x, st.y});
  return s;
}

std::vector<std::string> StationSet::ids() const {
  std::vector<std::string> out;
  out.reserve(stations.size());
  for (const auto& st : stations) out.push_back(st.id);
  return out;
}

Eigen::MatrixXd StationSet::design() const {
  const int n = n_stations();
  const int p = 1 + static_cast<int>(covariate_names.size());
  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < n; ++j) {
    x(j, 0) = 1.0;
    for (int c = 0; c < p - 1; ++c) x(j, c + 1) = stations[j].covariates[c];
  }
  return x;
}

sampler::FitData StationSet::fit_data() const {
  sampler::FitData data;
  data.panel = panel;
  data.sites = sites();
  data.design = design();
  data.site_ids = ids();
  return data;
}

StationSet StationSet::subset(const std::vector<int>& keep) const {
  StationSet out;
  out.covariate_names = covariate_names;
  out.mode = mode;
  out.projection_lat0 = projection_lat0;
  out.panel.years = panel.years;
  out.panel.values.resize(panel.n_times(), static_cast<int>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const int j = keep[c];
    if (j < 0 || j >= n_stations()) throw std::invalid_argument("subset: index out of range");
    out.stations.push_back(stations[j]);
    out.panel.values.col(static_cast<int>(c)) = panel.values.col(j);
  }
  return out;
}

int StationSet::index_of(const std::string& id) const {
  for (int j = 0; j < n_stations(); ++j)
    if (stations[j].id == id) return j;
  return -1;
}

StationSet ingest(const std::string& stations_csv, const std::string& observations_csv,
                  CoordinateMode mode) {
  const auto stations_table = io::read_csv(stations_csv);
  const auto& sh = stations_table.header;
  const bool lonlat_header = sh.size() >= 3 && sh[0] == "id" && sh[1] == "lon" && sh[2] == "lat";
  const bool xy_header = sh.size() >= 3 && sh[0] == "id" && sh[1] == "x" && sh[2] == "y";
  if (!xy_header && !(mode == CoordinateMode::lonlat && lonlat_header))
    throw io::ValidationError(stations_csv + ": header must start with id,x,y" +
                              (mode == CoordinateMode::lonlat ? " (or id,lon,lat)" : ""));
  for (std::size_t c = 3; c < sh.size(); ++c)
    if (sh[c].rfind("cov_", 0) != 0)
      throw io::ValidationError(stations_csv + ": column '" + sh[c] +
                                "' must be named cov_<name>");

  StationSet out;
  out.mode = mode;
  for (std::size_t c = 3; c < sh.size(); ++c) out.covariate_names.push_back(sh[c]);

  std::set<std::string> seen_ids;
  for (std::size_t r = 0; r < stations_table.rows.size(); ++r) {
    const auto& row = stations_table.rows[r];
    const std::string ctx = stations_csv + ": row " + std::to_string(r + 2);
    Station st;
    st.id = row[0];
    if (st.id.empty()) throw io::ValidationError(ctx + ": empty station id");
    if (!seen_ids.insert(st.id).second)
      throw io::ValidationError(ctx + ": duplicate station id '" + st.id + "'");
    st.raw_x = io::parse_double(row[1], ctx);
    st.raw_y = io::parse_double(row[2], ctx);
    for (std::size_t c = 3; c < row.size(); ++c)
      st.covariates.push_back(io::parse_double(row[c], ctx));
    out.stations.push_back(std::move(st));
  }
  if (out.stations.empty()) throw io::ValidationError(stations_csv + ": no stations");

  if (mode == CoordinateMode::lonlat) {
    double lat0 = 0.0;
    for (const auto& st : out.stations) lat0 += st.raw_y;
    lat0 /= static_cast<double>(out.stations.size());
    out.projection_lat0 = lat0;
    for (auto& st : out.stations) {
      const Site s = project_lonlat(st.raw_x, st.raw_y, lat0);
      st.x = s.x;
      st.y = s.y;
    }
  } else {
    for (auto& st : out.stations) {
      st.x = st.raw_x;
      st.y = st.raw_y;
    }
  }

  const auto obs_table = io::read_csv(observations_csv);
  if (obs_table.header.size() != 3 || obs_table.header[0] != "id" ||
      obs_table.header[1] != "year" || obs_table.header[2] != "value")
    throw io::ValidationError(observations_csv + ": header must be id,year,value");

  struct Obs {
    int station;
    int year;
    double value;
  };
  std::vector<Obs> obs;
  obs.reserve(obs_table.rows.size());
  std::set<std::pair<int, int>> seen_keys;
  std::set<int> years;
  for (std::size_t r = 0; r < obs_table.rows.size(); ++r) {
    const auto& row = obs_table.rows[r];
    const std::string ctx = observations_csv + ": row " + std::to_string(r + 2);
    const int j = out.index_of(row[0]);
    if (j < 0) throw io::ValidationError(ctx + ": unknown station id '" + row[0] + "'");
    const int year = static_cast<int>(io::parse_long(row[1], ctx));
    if (!seen_keys.insert({j, year}).second)
      throw io::ValidationError(ctx + ": duplicate observation for station '" + row[0] +
                                "', year " + std::to_string(year));
    const double value = io::parse_double(row[2], ctx);
    if (!std::isfinite(value)) throw io::ValidationError(ctx + ": non-finite value");
    obs.push_back({j, year, value});
    years.insert(year);
  }

  out.panel.years.assign(years.begin(), years.end());
  out.panel.values = Eigen::MatrixXd::Constant(static_cast<int>(years.size()),
                                               out.n_stations(),
                                               std::numeric_limits<double>::quiet_NaN());
  auto year_row = [&](int year) {
    return static_cast<int>(std::lower_bound(out.panel.years.begin(), out.panel.years.end(),
                                             year) -
                            out.panel.years.begin());
  };
  for (const auto& o : obs) out.panel.values(year_row(o.year), o.station) = o.value;

  for (int j = 0; j < out.n_stations(); ++j) {
    const int count = out.panel.site_count(j);
    if (count < 2)
      throw io::ValidationError("station '" + out.stations[j].id + "' has " +
                                std::to_string(count) + " observations; at least 2 required");
    if (count < kShortRecordWarning)
      out.warnings.push_back("station '" + out.stations[j].id + "' has only " +
                             std::to_string(count) + " observations");
  }
  return out;
}

}  // namespace stormlevels::app
