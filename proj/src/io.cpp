#include "tiltnet/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tiltnet::io {

namespace {

constexpr int kArtifactVersion = 1;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> flatten_params(const std::vector<std::vector<double>>& weights,
                                   const std::vector<std::vector<double>>& biases) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].begin(), weights[l].end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void unflatten_params(const std::vector<double>& flat, const std::vector<int>& dims,
                      std::vector<std::vector<double>>& weights,
                      std::vector<std::vector<double>>& biases) {
  weights.clear();
  biases.clear();
  std::size_t k = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t nw = static_cast<std::size_t>(dims[l + 1]) * dims[l];
    const std::size_t nb = dims[l + 1];
    if (k + nw + nb > flat.size()) throw std::invalid_argument("checkpoint: parameter array too short");
    weights.emplace_back(flat.begin() + k, flat.begin() + k + nw);
    k += nw;
    biases.emplace_back(flat.begin() + k, flat.begin() + k + nb);
    k += nb;
  }
  if (k != flat.size()) throw std::invalid_argument("checkpoint: parameter array size mismatch");
}

json antenna_to_json(const netsim::AntennaModel& a) {
  return {{"max_gain_dbi", a.max_gain_dbi},
          {"horizontal_beamwidth_deg", a.horizontal_beamwidth_deg},
          {"vertical_beamwidth_deg", a.vertical_beamwidth_deg},
          {"side_lobe_floor_v_db", a.side_lobe_floor_v_db},
          {"front_back_ratio_h_db", a.front_back_ratio_h_db},
          {"total_attenuation_cap_db", a.total_attenuation_cap_db},
          {"tx_power_w", a.tx_power_w}};
}

netsim::AntennaModel antenna_from_json(const json& j) {
  netsim::AntennaModel a;
  a.max_gain_dbi = j.at("max_gain_dbi");
  a.horizontal_beamwidth_deg = j.at("horizontal_beamwidth_deg");
  a.vertical_beamwidth_deg = j.at("vertical_beamwidth_deg");
  a.side_lobe_floor_v_db = j.at("side_lobe_floor_v_db");
  a.front_back_ratio_h_db = j.at("front_back_ratio_h_db");
  a.total_attenuation_cap_db = j.at("total_attenuation_cap_db");
  a.tx_power_w = j.at("tx_power_w");
  return a;
}

json params_to_json(const netsim::DeploymentParams& p) {
  return {{"cells_per_station", p.cells_per_station},
          {"area_per_station_m2", p.area_per_station_m2},
          {"min_intersite_m", p.min_intersite_m},
          {"antenna_height_m", p.antenna_height_m},
          {"user_height_m", p.user_height_m},
          {"indoor_fraction", p.indoor_fraction},
          {"pathloss_offset_db", p.pathloss_offset_db},
          {"pathloss_slope_db", p.pathloss_slope_db},
          {"indoor_penetration_db", p.indoor_penetration_db},
          {"min_link_distance_m", p.min_link_distance_m},
          {"noise_power_w", p.noise_power_w},
          {"n_prb", p.n_prb},
          {"prb_bandwidth_hz", p.prb_bandwidth_hz},
          {"n_tilts", p.n_tilts},
          {"empty_cell_obs_db", p.empty_cell_obs_db},
          {"empty_cell_throughput_floor", p.empty_cell_throughput_floor},
          {"antenna", antenna_to_json(p.antenna)}};
}

netsim::DeploymentParams params_from_json(const json& j) {
  netsim::DeploymentParams p;
  p.cells_per_station = j.at("cells_per_station");
  p.area_per_station_m2 = j.at("area_per_station_m2");
  p.min_intersite_m = j.at("min_intersite_m");
  p.antenna_height_m = j.at("antenna_height_m");
  p.user_height_m = j.at("user_height_m");
  p.indoor_fraction = j.at("indoor_fraction");
  p.pathloss_offset_db = j.at("pathloss_offset_db");
  p.pathloss_slope_db = j.at("pathloss_slope_db");
  p.indoor_penetration_db = j.at("indoor_penetration_db");
  p.min_link_distance_m = j.at("min_link_distance_m");
  p.noise_power_w = j.at("noise_power_w");
  p.n_prb = j.at("n_prb");
  p.prb_bandwidth_hz = j.at("prb_bandwidth_hz");
  p.n_tilts = j.at("n_tilts");
  p.empty_cell_obs_db = j.at("empty_cell_obs_db");
  p.empty_cell_throughput_floor = j.at("empty_cell_throughput_floor");
  p.antenna = antenna_from_json(j.at("antenna"));
  return p;
}

}  // namespace

std::string content_hash(json j) {
  j.erase("content_hash");
  return fnv1a_hex(j.dump());
}

void write_artifact(const std::string& path, json j) {
  j["content_hash"] = content_hash(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

json read_artifact(const std::string& path, const std::string& expect_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j = json::parse(in);
  const std::string kind = j.at("kind");
  if (kind != expect_kind)
    throw std::runtime_error(path + ": expected kind '" + expect_kind + "', found '" + kind + "'");
  const std::string stored = j.at("content_hash");
  if (stored != content_hash(j))
    throw std::runtime_error(path + ": content hash mismatch (artifact modified or corrupted)");
  return j;
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json deployment_to_json(const netsim::Deployment& d) {
  json stations = json::array();
  for (const auto& s : d.stations) stations.push_back({s.x, s.y});
  json cells = json::array();
  for (const auto& c : d.cells)
    cells.push_back({{"cell_id", c.cell_id}, {"station", c.station}, {"azimuth_deg", c.azimuth_deg}});
  return {{"version", kArtifactVersion},
          {"kind", "deployment"},
          {"params", params_to_json(d.params)},
          {"area_half_width_m", d.area_half_width_m},
          {"rng_seed", d.rng_seed},
          {"stations", stations},
          {"cells", cells}};
}

netsim::Deployment deployment_from_json(const json& j) {
  netsim::Deployment d;
  d.params = params_from_json(j.at("params"));
  d.area_half_width_m = j.at("area_half_width_m");
  d.rng_seed = j.at("rng_seed");
  for (const auto& s : j.at("stations")) d.stations.push_back({s.at(0), s.at(1)});
  for (const auto& c : j.at("cells"))
    d.cells.push_back({c.at("cell_id"), c.at("station"), c.at("azimuth_deg")});
  for (int k = 0; k < d.n_cells(); ++k)
    if (d.cells[k].cell_id != k) throw std::invalid_argument("deployment: cell ids must be dense");
  return d;
}

json drop_to_json(const netsim::UserDrop& u) {
  json pos = json::array();
  for (const auto& p : u.positions) pos.push_back({p.x, p.y});
  json indoor = json::array();
  for (auto f : u.indoor) indoor.push_back(f != 0);
  return {{"version", kArtifactVersion}, {"kind", "user_drop"}, {"positions", pos}, {"indoor", indoor}};
}

netsim::UserDrop drop_from_json(const json& j) {
  netsim::UserDrop u;
  for (const auto& p : j.at("positions")) u.positions.push_back({p.at(0), p.at(1)});
  for (const auto& f : j.at("indoor")) u.indoor.push_back(f.get<bool>() ? 1 : 0);
  if (u.positions.size() != u.indoor.size())
    throw std::invalid_argument("user_drop: positions/indoor size mismatch");
  return u;
}

json graph_to_json(const graph::CoordinationGraph& g, const std::string& deployment_hash) {
  json edges = json::array();
  for (const auto& [i, j] : g.edges) edges.push_back({i, j});
  return {{"version", kArtifactVersion},
          {"kind", "graph"},
          {"topology", g.topology},
          {"n_nodes", g.n_nodes},
          {"edges", edges},
          {"deployment_hash", deployment_hash}};
}

graph::CoordinationGraph graph_from_json(const json& j) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) edges.push_back({e.at(0), e.at(1)});
  return graph::graph_from_edges(j.at("n_nodes"), std::move(edges), j.at("topology"));
}

json normalizer_to_json(const learner::Normalizer& n, const std::string& deployment_hash,
                        int n_configs, std::uint64_t seed) {
  return {{"version", kArtifactVersion},
          {"kind", "normalizer"},
          {"max_sinr_db", n.max_sinr_db},
          {"reward_mean", n.reward_mean},
          {"reward_std", n.reward_std},
          {"calibration_configs", n_configs},
          {"calibration_seed", seed},
          {"deployment_hash", deployment_hash}};
}

learner::Normalizer normalizer_from_json(const json& j) {
  learner::Normalizer n;
  n.max_sinr_db = j.at("max_sinr_db");
  n.reward_mean = j.at("reward_mean");
  n.reward_std = j.at("reward_std");
  n.calibrated = true;
  return n;
}

json mlp_to_json(const neural::Mlp& net) {
  return {{"dims", net.dims}, {"params", flatten_params(net.weights, net.biases)}};
}

neural::Mlp mlp_from_json(const json& j) {
  neural::Mlp net;
  net.dims = j.at("dims").get<std::vector<int>>();
  if (net.dims.size() < 2) throw std::invalid_argument("checkpoint: bad network dims");
  unflatten_params(j.at("params").get<std::vector<double>>(), net.dims, net.weights, net.biases);
  return net;
}

json adam_to_json(const neural::AdamState& s) {
  return {{"learning_rate", s.learning_rate},
          {"beta1", s.beta1},
          {"beta2", s.beta2},
          {"epsilon", s.epsilon},
          {"step", s.step},
          {"m", flatten_params(s.m.weights, s.m.biases)},
          {"v", flatten_params(s.v.weights, s.v.biases)}};
}

neural::AdamState adam_from_json(const json& j, const neural::Mlp& shape) {
  neural::AdamState s;
  s.learning_rate = j.at("learning_rate");
  s.beta1 = j.at("beta1");
  s.beta2 = j.at("beta2");
  s.epsilon = j.at("epsilon");
  s.step = j.at("step");
  unflatten_params(j.at("m").get<std::vector<double>>(), shape.dims, s.m.weights, s.m.biases);
  unflatten_params(j.at("v").get<std::vector<double>>(), shape.dims, s.v.weights, s.v.biases);
  return s;
}

json checkpoint_to_json(const Checkpoint& c) {
  json j{{"version", kArtifactVersion},
         {"kind", "checkpoint"},
         {"algorithm", c.algorithm},
         {"config_hash", c.config_hash},
         {"deployment_hash", c.deployment_hash},
         {"graph_hash", c.graph_hash},
         {"normalizer",
          {{"max_sinr_db", c.normalizer.max_sinr_db},
           {"reward_mean", c.normalizer.reward_mean},
           {"reward_std", c.normalizer.reward_std}}},
         {"train_steps", c.train_steps},
         {"seed", c.seed}};
  if (c.edge_q) {
    const learner::EdgeQ& q = *c.edge_q;
    j["edge_q"] = {{"mode", q.mode == learner::QMode::shared ? "shared" : "per_edge"},
                   {"obs_dim", q.obs_dim},
                   {"n_actions", q.n_actions},
                   {"online", json::array()},
                   {"target", json::array()},
                   {"opt", json::array()}};
    for (const auto& n : q.online) j["edge_q"]["online"].push_back(mlp_to_json(n));
    for (const auto& n : q.target) j["edge_q"]["target"].push_back(mlp_to_json(n));
    for (const auto& o : q.opt) j["edge_q"]["opt"].push_back(adam_to_json(o));
  }
  if (c.cell_q) {
    const baselines::CellQPolicy& p = *c.cell_q;
    j["cell_q"] = {{"mode", p.mode == baselines::DqnMode::shared ? "shared" : "independent"},
                   {"n_cells", p.n_cells},
                   {"obs_dim", p.obs_dim},
                   {"n_actions", p.n_actions},
                   {"online", json::array()},
                   {"target", json::array()},
                   {"opt", json::array()}};
    for (const auto& n : p.online) j["cell_q"]["online"].push_back(mlp_to_json(n));
    for (const auto& n : p.target) j["cell_q"]["target"].push_back(mlp_to_json(n));
    for (const auto& o : p.opt) j["cell_q"]["opt"].push_back(adam_to_json(o));
  }
  if (c.tilts) j["tilts"] = *c.tilts;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  c.algorithm = j.at("algorithm");
  c.config_hash = j.at("config_hash");
  c.deployment_hash = j.at("deployment_hash");
  c.graph_hash = j.at("graph_hash");
  c.normalizer.max_sinr_db = j.at("normalizer").at("max_sinr_db");
  c.normalizer.reward_mean = j.at("normalizer").at("reward_mean");
  c.normalizer.reward_std = j.at("normalizer").at("reward_std");
  c.normalizer.calibrated = true;
  c.train_steps = j.at("train_steps");
  c.seed = j.at("seed");
  if (j.contains("edge_q")) {
    const json& e = j.at("edge_q");
    learner::EdgeQ q;
    q.mode = e.at("mode") == "shared" ? learner::QMode::shared : learner::QMode::per_edge;
    q.obs_dim = e.at("obs_dim");
    q.n_actions = e.at("n_actions");
    for (const auto& n : e.at("online")) q.online.push_back(mlp_from_json(n));
    for (const auto& n : e.at("target")) q.target.push_back(mlp_from_json(n));
    for (std::size_t k = 0; k < e.at("opt").size(); ++k)
      q.opt.push_back(adam_from_json(e.at("opt")[k], q.online[k]));
    c.edge_q = std::move(q);
  }
  if (j.contains("cell_q")) {
    const json& e = j.at("cell_q");
    baselines::CellQPolicy p;
    p.mode = e.at("mode") == "shared" ? baselines::DqnMode::shared : baselines::DqnMode::independent;
    p.n_cells = e.at("n_cells");
    p.obs_dim = e.at("obs_dim");
    p.n_actions = e.at("n_actions");
    for (const auto& n : e.at("online")) p.online.push_back(mlp_from_json(n));
    for (const auto& n : e.at("target")) p.target.push_back(mlp_from_json(n));
    for (std::size_t k = 0; k < e.at("opt").size(); ++k)
      p.opt.push_back(adam_from_json(e.at("opt")[k], p.online[k]));
    c.cell_q = std::move(p);
  }
  if (j.contains("tilts")) c.tilts = j.at("tilts").get<JointAction>();
  return c;
}

}  // namespace tiltnet::io
