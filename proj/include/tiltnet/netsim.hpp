#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tiltnet/types.hpp"

namespace tiltnet::netsim {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }

// Thermal noise floor (-174 dBm/Hz) over a bandwidth, plus receiver noise figure.
inline double thermal_noise_w(double bandwidth_hz, double noise_figure_db) {
  return db_to_linear(-174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db - 30.0);
}

// Parametric 3-sector antenna pattern plus transmitter constants.
// Attenuation is quadratic in the normalized off-axis angle, capped per plane
// and capped in total.
struct AntennaModel {
  double max_gain_dbi = 15.0;
  double horizontal_beamwidth_deg = 65.0;
  double vertical_beamwidth_deg = 6.5;
  double side_lobe_floor_v_db = 20.0;
  double front_back_ratio_h_db = 25.0;
  double total_attenuation_cap_db = 30.0;
  double tx_power_w = 40.0;
};

struct DeploymentParams {
  int cells_per_station = 3;
  double area_per_station_m2 = 6e6;  // square area grows linearly with station count
  double min_intersite_m = 1500.0;
  double antenna_height_m = 32.0;
  double user_height_m = 1.5;
  double indoor_fraction = 0.5;
  double pathloss_offset_db = 128.1;  // log-distance urban macro at 2 GHz
  double pathloss_slope_db = 37.6;    // dB per decade of km
  double indoor_penetration_db = 20.0;
  double min_link_distance_m = 35.0;  // 2-D distance clamp for the path loss
  double noise_power_w = thermal_noise_w(9e6, 9.0);
  int n_prb = 50;
  double prb_bandwidth_hz = 180e3;
  int n_tilts = 16;  // tilt index k means k degrees of electrical downtilt
  double empty_cell_obs_db = -40.0;          // sentinel observation for empty cells
  double empty_cell_throughput_floor = 1.0;  // bit/s; keeps the log reward finite
  AntennaModel antenna;
};

struct Cell {
  int cell_id = 0;
  int station = 0;
  double azimuth_deg = 0.0;  // boresight, degrees counterclockwise from +x
};

struct Deployment {
  std::vector<Vec2> stations;
  std::vector<Cell> cells;
  double area_half_width_m = 0.0;
  std::uint64_t rng_seed = 0;
  DeploymentParams params;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_stations() const { return static_cast<int>(stations.size()); }
};

struct UserDrop {
  std::vector<Vec2> positions;
  std::vector<std::uint8_t> indoor;

  int n_users() const { return static_cast<int>(positions.size()); }
};

// Tilt-independent link state, cached once per (deployment, drop). Changing
// tilts only changes the vertical antenna attenuation.
struct LinkGeometry {
  int n_cells = 0;
  int n_users = 0;
  std::vector<double> pathloss_linear;      // n_cells x n_users, includes indoor penetration
  std::vector<double> horizontal_atten_db;  // n_cells x n_users
  std::vector<double> vertical_angle_deg;   // n_cells x n_users, depression angle to the user
};

struct RadioSnapshot {
  int n_cells = 0;
  int n_users = 0;
  std::vector<double> pathgain;  // n_cells x n_users row-major, linear G*L
  std::vector<int> association;  // per user, serving cell id
  std::vector<double> sinr;      // per user, linear ratio
  std::vector<double> throughput;  // per user, bit/s
  std::vector<double> cell_rewards;
  std::vector<int> cell_load;

  double pg(int cell, int user) const {
    return pathgain[static_cast<std::size_t>(cell) * n_users + user];
  }
};

// Four SINR percentiles (10/25/50/75) of a cell's users, in dB.
using Observation = std::array<double, 4>;

// --- deployment / users ------------------------------------------------

// Stations from a Poisson process with rejection resampling for the minimum
// intersite distance. Throws if the area cannot accommodate the stations.
Deployment generate_deployment(int n_base_stations, std::uint64_t seed,
                               const DeploymentParams& params = {});

// Hand-constructed layout (explicit station positions and per-station cell
// azimuths). area_half_width_m == 0 derives the area from the station count.
Deployment make_deployment(const std::vector<Vec2>& stations,
                           const std::vector<std::vector<double>>& azimuths_per_station,
                           const DeploymentParams& params = {}, double area_half_width_m = 0.0);

UserDrop drop_users(const Deployment& d, int n_users, std::uint64_t seed);

// --- radio kernels ------------------------------------------------------

double wrap_angle_deg(double a);  // to (-180, 180]
double horizontal_attenuation_db(const AntennaModel& a, double offset_deg);
double vertical_attenuation_db(const AntennaModel& a, double angle_deg, double tilt_deg);
double antenna_gain_db(const AntennaModel& a, double vertical_angle_deg, double tilt_deg,
                       double horizontal_offset_deg);
double pathloss_db(const DeploymentParams& p, double distance_2d_m, bool indoor);

// Association (max received power, ties to the lowest cell id) and SINR from
// a received-power matrix. Exposed so the SINR arithmetic can be driven with
// synthetic powers.
void associate_and_sinr(const std::vector<double>& rx_power_w, int n_cells, int n_users,
                        double noise_w, std::vector<int>& association, std::vector<double>& sinr);

// Round-robin Shannon throughput per user and the per-cell log-mean-throughput
// rewards. Serial with fixed iteration order.
void throughput_and_rewards(const DeploymentParams& p, const std::vector<double>& sinr,
                            const std::vector<int>& association, int n_cells,
                            std::vector<double>& throughput, std::vector<double>& cell_rewards,
                            std::vector<int>& cell_load);

// Percentile with linear interpolation between order statistics, inclusive
// endpoints. p in [0, 100].
double percentile(std::vector<double> values, double p);

// --- snapshots ----------------------------------------------------------

LinkGeometry compute_geometry(const Deployment& d, const UserDrop& users);

// Production path: cached geometry, users processed in parallel, per-cell
// reductions serial in user order (bitwise reproducible for any thread count).
RadioSnapshot compute_snapshot(const Deployment& d, const LinkGeometry& geo,
                               const UserDrop& users, const JointAction& tilts);
RadioSnapshot compute_snapshot(const Deployment& d, const UserDrop& users,
                               const JointAction& tilts);

// Serial reference: recomputes every link from scratch, no cache, no threads.
// Kept for tests and the kernel benchmark; must match the production path
// bitwise.
RadioSnapshot compute_snapshot_reference(const Deployment& d, const UserDrop& users,
                                         const JointAction& tilts);

Observation observe(const RadioSnapshot& s, int cell, double empty_cell_obs_db);

// All cells' observations flattened to n_cells*4, in cell order.
std::vector<double> all_observations(const RadioSnapshot& s, double empty_cell_obs_db);

// Sum of per-cell rewards (raw, before standardization).
double global_reward(const RadioSnapshot& s);

}  // namespace tiltnet::netsim
