#include "tiltnet/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tiltnet/rng.hpp"

namespace tiltnet::netsim {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double dist2d(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct LinkTerms {
  double pathloss_linear;
  double horizontal_atten_db;
  double vertical_angle_deg;
};

// Tilt-independent terms of one (cell, user) link. Both snapshot paths go
// through this single definition so their arithmetic is identical.
LinkTerms link_terms(const Deployment& d, const Vec2& user, bool indoor, const Cell& cell) {
  const DeploymentParams& p = d.params;
  const Vec2& st = d.stations[cell.station];
  const double dx = user.x - st.x;
  const double dy = user.y - st.y;
  const double d2d = std::hypot(dx, dy);
  const double bearing_deg = std::atan2(dy, dx) * kRadToDeg;
  const double offset_deg = wrap_angle_deg(bearing_deg - cell.azimuth_deg);
  const double height = p.antenna_height_m - p.user_height_m;
  const double vertical_deg = std::atan2(height, d2d) * kRadToDeg;
  const double pl_db = pathloss_db(p, d2d, indoor);
  return {db_to_linear(-pl_db), horizontal_attenuation_db(p.antenna, offset_deg), vertical_deg};
}

double link_pathgain(const AntennaModel& a, const LinkTerms& t, double tilt_deg) {
  const double gain_db = a.max_gain_dbi -
                         std::min(vertical_attenuation_db(a, t.vertical_angle_deg, tilt_deg) +
                                      t.horizontal_atten_db,
                                  a.total_attenuation_cap_db);
  return db_to_linear(gain_db) * t.pathloss_linear;
}

// Association and SINR for one user given its per-cell received powers.
void user_link_stats(const double* rx_w, int n_cells, double noise_w, int& assoc, double& sinr) {
  int best = 0;
  for (int c = 1; c < n_cells; ++c) {
    if (rx_w[c] > rx_w[best]) best = c;  // ties keep the lowest cell id
  }
  double total = 0.0;
  for (int c = 0; c < n_cells; ++c) total += rx_w[c];
  assoc = best;
  sinr = rx_w[best] / ((total - rx_w[best]) + noise_w);
}

void check_tilts(const Deployment& d, const JointAction& tilts) {
  if (static_cast<int>(tilts.size()) != d.n_cells())
    throw std::invalid_argument("compute_snapshot: one tilt index per cell required");
  for (int t : tilts)
    if (t < 0 || t >= d.params.n_tilts)
      throw std::invalid_argument("compute_snapshot: tilt index out of range");
}

void finalize_cells(Deployment& d) {
  int id = 0;
  for (auto& c : d.cells) c.cell_id = id++;
}

}  // namespace

double wrap_angle_deg(double a) {
  a = std::fmod(a, 360.0);
  if (a > 180.0) a -= 360.0;
  if (a <= -180.0) a += 360.0;
  return a;
}

double horizontal_attenuation_db(const AntennaModel& a, double offset_deg) {
  const double r = offset_deg / a.horizontal_beamwidth_deg;
  return std::min(12.0 * r * r, a.front_back_ratio_h_db);
}

double vertical_attenuation_db(const AntennaModel& a, double angle_deg, double tilt_deg) {
  const double r = (angle_deg - tilt_deg) / a.vertical_beamwidth_deg;
  return std::min(12.0 * r * r, a.side_lobe_floor_v_db);
}

double antenna_gain_db(const AntennaModel& a, double vertical_angle_deg, double tilt_deg,
                       double horizontal_offset_deg) {
  const double att = std::min(vertical_attenuation_db(a, vertical_angle_deg, tilt_deg) +
                                  horizontal_attenuation_db(a, horizontal_offset_deg),
                              a.total_attenuation_cap_db);
  return a.max_gain_dbi - att;
}

double pathloss_db(const DeploymentParams& p, double distance_2d_m, bool indoor) {
  const double d_km = std::max(distance_2d_m, p.min_link_distance_m) / 1000.0;
  double pl = p.pathloss_offset_db + p.pathloss_slope_db * std::log10(d_km);
  if (indoor) pl += p.indoor_penetration_db;
  return pl;
}

Deployment generate_deployment(int n_base_stations, std::uint64_t seed,
                               const DeploymentParams& params) {
  if (n_base_stations < 1)
    throw std::invalid_argument("generate_deployment: need at least one base station");
  if (params.cells_per_station < 1)
    throw std::invalid_argument("generate_deployment: cells_per_station must be >= 1");

  Deployment d;
  d.params = params;
  d.rng_seed = seed;
  d.area_half_width_m = std::sqrt(params.area_per_station_m2 * n_base_stations) / 2.0;

  Rng rng(derive_seed(seed, Stream::deployment));
  const long max_attempts = 10000L * n_base_stations;
  long attempts = 0;
  while (d.n_stations() < n_base_stations) {
    if (++attempts > max_attempts)
      throw std::runtime_error(
          "generate_deployment: exceeded rejection budget; area too small for " +
          std::to_string(n_base_stations) + " stations at the minimum intersite distance");
    Vec2 p{rng.uniform(-d.area_half_width_m, d.area_half_width_m),
           rng.uniform(-d.area_half_width_m, d.area_half_width_m)};
    bool ok = true;
    for (const auto& q : d.stations) {
      if (dist2d(p, q) < params.min_intersite_m) {
        ok = false;
        break;
      }
    }
    if (ok) d.stations.push_back(p);
  }

  for (int s = 0; s < n_base_stations; ++s)
    for (int k = 0; k < params.cells_per_station; ++k)
      d.cells.push_back({0, s, 360.0 * k / params.cells_per_station});
  finalize_cells(d);
  return d;
}

Deployment make_deployment(const std::vector<Vec2>& stations,
                           const std::vector<std::vector<double>>& azimuths_per_station,
                           const DeploymentParams& params, double area_half_width_m) {
  if (stations.empty()) throw std::invalid_argument("make_deployment: no stations");
  if (azimuths_per_station.size() != stations.size())
    throw std::invalid_argument("make_deployment: one azimuth list per station required");
  const std::size_t per = azimuths_per_station.front().size();
  for (const auto& az : azimuths_per_station)
    if (az.size() != per || per == 0)
      throw std::invalid_argument("make_deployment: azimuth lists must be non-empty, equal size");

  Deployment d;
  d.params = params;
  d.params.cells_per_station = static_cast<int>(per);
  d.area_half_width_m =
      area_half_width_m > 0.0
          ? area_half_width_m
          : std::sqrt(params.area_per_station_m2 * static_cast<double>(stations.size())) / 2.0;
  d.stations = stations;
  for (int s = 0; s < d.n_stations(); ++s)
    for (double az : azimuths_per_station[s]) d.cells.push_back({0, s, az});
  finalize_cells(d);

  for (std::size_t i = 0; i < stations.size(); ++i)
    for (std::size_t j = i + 1; j < stations.size(); ++j)
      if (dist2d(stations[i], stations[j]) < params.min_intersite_m)
        throw std::invalid_argument("make_deployment: stations closer than min_intersite_m");
  return d;
}

UserDrop drop_users(const Deployment& d, int n_users, std::uint64_t seed) {
  if (n_users < 1) throw std::invalid_argument("drop_users: n_users must be >= 1");
  Rng rng(derive_seed(seed, Stream::user_drop));
  UserDrop drop;
  drop.positions.reserve(n_users);
  drop.indoor.reserve(n_users);
  const double h = d.area_half_width_m;
  for (int u = 0; u < n_users; ++u) {
    drop.positions.push_back({rng.uniform(-h, h), rng.uniform(-h, h)});
    drop.indoor.push_back(rng.bernoulli(d.params.indoor_fraction) ? 1 : 0);
  }
  return drop;
}

void associate_and_sinr(const std::vector<double>& rx_power_w, int n_cells, int n_users,
                        double noise_w, std::vector<int>& association, std::vector<double>& sinr) {
  if (rx_power_w.size() != static_cast<std::size_t>(n_cells) * n_users)
    throw std::invalid_argument("associate_and_sinr: matrix size mismatch");
  association.resize(n_users);
  sinr.resize(n_users);
  std::vector<double> col(n_cells);
  for (int u = 0; u < n_users; ++u) {
    for (int c = 0; c < n_cells; ++c)
      col[c] = rx_power_w[static_cast<std::size_t>(c) * n_users + u];
    user_link_stats(col.data(), n_cells, noise_w, association[u], sinr[u]);
  }
}

void throughput_and_rewards(const DeploymentParams& p, const std::vector<double>& sinr,
                            const std::vector<int>& association, int n_cells,
                            std::vector<double>& throughput, std::vector<double>& cell_rewards,
                            std::vector<int>& cell_load) {
  const int n_users = static_cast<int>(sinr.size());
  cell_load.assign(n_cells, 0);
  for (int u = 0; u < n_users; ++u) cell_load[association[u]]++;

  const double cell_bandwidth = p.n_prb * p.prb_bandwidth_hz;
  throughput.resize(n_users);
  for (int u = 0; u < n_users; ++u)
    throughput[u] = cell_bandwidth / cell_load[association[u]] * std::log2(1.0 + sinr[u]);

  std::vector<double> cell_sum(n_cells, 0.0);
  for (int u = 0; u < n_users; ++u) cell_sum[association[u]] += throughput[u];

  cell_rewards.resize(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    const double mean_tp =
        cell_load[c] > 0 ? cell_sum[c] / cell_load[c] : p.empty_cell_throughput_floor;
    cell_rewards[c] = std::log(mean_tp);
  }
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * p / 100.0;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

LinkGeometry compute_geometry(const Deployment& d, const UserDrop& users) {
  LinkGeometry g;
  g.n_cells = d.n_cells();
  g.n_users = users.n_users();
  const std::size_t n = static_cast<std::size_t>(g.n_cells) * g.n_users;
  g.pathloss_linear.resize(n);
  g.horizontal_atten_db.resize(n);
  g.vertical_angle_deg.resize(n);
#pragma omp parallel for schedule(static)
  for (int u = 0; u < g.n_users; ++u) {
    for (int c = 0; c < g.n_cells; ++c) {
      const LinkTerms t = link_terms(d, users.positions[u], users.indoor[u] != 0, d.cells[c]);
      const std::size_t k = static_cast<std::size_t>(c) * g.n_users + u;
      g.pathloss_linear[k] = t.pathloss_linear;
      g.horizontal_atten_db[k] = t.horizontal_atten_db;
      g.vertical_angle_deg[k] = t.vertical_angle_deg;
    }
  }
  return g;
}

RadioSnapshot compute_snapshot(const Deployment& d, const LinkGeometry& geo, const UserDrop& users,
                               const JointAction& tilts) {
  check_tilts(d, tilts);
  if (geo.n_cells != d.n_cells() || geo.n_users != users.n_users())
    throw std::invalid_argument("compute_snapshot: geometry does not match deployment/drop");

  RadioSnapshot s;
  s.n_cells = geo.n_cells;
  s.n_users = geo.n_users;
  s.pathgain.resize(static_cast<std::size_t>(s.n_cells) * s.n_users);
  s.association.resize(s.n_users);
  s.sinr.resize(s.n_users);

  const AntennaModel& ant = d.params.antenna;
  const double noise = d.params.noise_power_w;

  // Users are independent here; per-cell reductions happen serially below.
#pragma omp parallel
  {
    std::vector<double> rx(s.n_cells);
#pragma omp for schedule(static)
    for (int u = 0; u < s.n_users; ++u) {
      for (int c = 0; c < s.n_cells; ++c) {
        const std::size_t k = static_cast<std::size_t>(c) * s.n_users + u;
        const LinkTerms t{geo.pathloss_linear[k], geo.horizontal_atten_db[k],
                          geo.vertical_angle_deg[k]};
        const double pg = link_pathgain(ant, t, static_cast<double>(tilts[c]));
        s.pathgain[k] = pg;
        rx[c] = ant.tx_power_w * pg;
      }
      user_link_stats(rx.data(), s.n_cells, noise, s.association[u], s.sinr[u]);
    }
  }

  throughput_and_rewards(d.params, s.sinr, s.association, s.n_cells, s.throughput, s.cell_rewards,
                         s.cell_load);
  return s;
}

RadioSnapshot compute_snapshot(const Deployment& d, const UserDrop& users,
                               const JointAction& tilts) {
  return compute_snapshot(d, compute_geometry(d, users), users, tilts);
}

RadioSnapshot compute_snapshot_reference(const Deployment& d, const UserDrop& users,
                                         const JointAction& tilts) {
  check_tilts(d, tilts);
  RadioSnapshot s;
  s.n_cells = d.n_cells();
  s.n_users = users.n_users();
  s.pathgain.resize(static_cast<std::size_t>(s.n_cells) * s.n_users);
  s.association.resize(s.n_users);
  s.sinr.resize(s.n_users);

  const AntennaModel& ant = d.params.antenna;
  std::vector<double> rx(s.n_cells);
  for (int u = 0; u < s.n_users; ++u) {
    for (int c = 0; c < s.n_cells; ++c) {
      const LinkTerms t = link_terms(d, users.positions[u], users.indoor[u] != 0, d.cells[c]);
      const double pg = link_pathgain(ant, t, static_cast<double>(tilts[c]));
      s.pathgain[static_cast<std::size_t>(c) * s.n_users + u] = pg;
      rx[c] = ant.tx_power_w * pg;
    }
    user_link_stats(rx.data(), s.n_cells, d.params.noise_power_w, s.association[u], s.sinr[u]);
  }

  throughput_and_rewards(d.params, s.sinr, s.association, s.n_cells, s.throughput, s.cell_rewards,
                         s.cell_load);
  return s;
}

Observation observe(const RadioSnapshot& s, int cell, double empty_cell_obs_db) {
  if (cell < 0 || cell >= s.n_cells) throw std::invalid_argument("observe: unknown cell id");
  std::vector<double> sinr_db;
  for (int u = 0; u < s.n_users; ++u)
    if (s.association[u] == cell) sinr_db.push_back(linear_to_db(s.sinr[u]));
  if (sinr_db.empty())
    return {empty_cell_obs_db, empty_cell_obs_db, empty_cell_obs_db, empty_cell_obs_db};
  std::sort(sinr_db.begin(), sinr_db.end());
  Observation obs;
  const double percentiles[4] = {10.0, 25.0, 50.0, 75.0};
  for (int i = 0; i < 4; ++i) {
    const double h = (sinr_db.size() - 1) * percentiles[i] / 100.0;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sinr_db.size()) {
      obs[i] = sinr_db.back();
    } else {
      obs[i] = sinr_db[lo] + (h - static_cast<double>(lo)) * (sinr_db[lo + 1] - sinr_db[lo]);
    }
  }
  return obs;
}

std::vector<double> all_observations(const RadioSnapshot& s, double empty_cell_obs_db) {
  std::vector<double> out(static_cast<std::size_t>(s.n_cells) * 4);
  for (int c = 0; c < s.n_cells; ++c) {
    const Observation obs = observe(s, c, empty_cell_obs_db);
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(c) * 4 + i] = obs[i];
  }
  return out;
}

double global_reward(const RadioSnapshot& s) {
  double sum = 0.0;
  for (double r : s.cell_rewards) sum += r;
  return sum;
}

}  // namespace tiltnet::netsim
