// Command-line front end: deployment generation, graph construction,
// calibration, training, evaluation and the action-selection latency
// benchmark. Artifacts are JSON with content hashes; metrics are CSV.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tiltnet/baselines.hpp"
#include "tiltnet/config.hpp"
#include "tiltnet/io.hpp"

namespace fs = std::filesystem;
using namespace tiltnet;
using io::json;

namespace {

std::string resolve_out(const std::string& path) {
  const char* root = std::getenv("TILTNET_OUT_ROOT");
  if (root != nullptr && *root != '\0' && fs::path(path).is_relative())
    return (fs::path(root) / path).string();
  return path;
}

json load_file(const std::string& path, const std::string& kind) {
  return io::read_artifact(resolve_out(path), kind);
}

struct LoadedDeployment {
  netsim::Deployment deployment;
  std::string hash;
};

LoadedDeployment load_deployment(const std::string& path) {
  const json j = load_file(path, "deployment");
  return {io::deployment_from_json(j), io::content_hash(j)};
}

void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# config_hash=" << config_hash << "\n";
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmt(double v) { return io::format_double(v); }

// --- generate ---------------------------------------------------------------

int cmd_generate(int stations, std::uint64_t seed, int cells_per_station,
                 double area_per_station_m2, const std::string& out) {
  netsim::DeploymentParams params;
  params.cells_per_station = cells_per_station;
  if (area_per_station_m2 > 0) params.area_per_station_m2 = area_per_station_m2;
  const netsim::Deployment d = netsim::generate_deployment(stations, seed, params);
  io::write_artifact(resolve_out(out), io::deployment_to_json(d));

  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d.n_stations(); ++i)
    for (int j = i + 1; j < d.n_stations(); ++j)
      min_dist = std::min(min_dist, std::hypot(d.stations[i].x - d.stations[j].x,
                                               d.stations[i].y - d.stations[j].y));
  std::cout << "deployment: " << d.n_stations() << " stations, " << d.n_cells() << " cells, "
            << "area half width " << d.area_half_width_m << " m";
  if (d.n_stations() > 1) std::cout << ", min intersite distance " << min_dist << " m";
  std::cout << "\nwrote " << resolve_out(out) << "\n";
  return 0;
}

// --- graph ------------------------------------------------------------------

int cmd_graph(const std::string& dep_path, const std::string& topology, int ref_drops,
              int n_users, std::uint64_t seed, double sparse_offset_db, double dense_offset_db,
              const std::string& out) {
  const LoadedDeployment dep = load_deployment(dep_path);
  graph::GraphParams params;
  params.sparse_noise_offset_db = sparse_offset_db;
  params.dense_noise_offset_db = dense_offset_db;
  const graph::CouplingMatrix c =
      graph::coupling_matrix(dep.deployment, ref_drops, seed, n_users, params);
  const graph::CoordinationGraph g =
      graph::build_graph(c, graph::topology_from_name(topology), params);
  io::write_artifact(resolve_out(out), io::graph_to_json(g, dep.hash));

  std::cout << "graph: topology " << g.topology << ", " << g.n_nodes << " nodes, " << g.n_edges()
            << " edges, " << (g.connected ? "connected" : "DISCONNECTED") << "\n";
  if (!g.connected) {
    std::cout << "warning: " << g.components.size()
              << " components; algorithms run per component independently\n";
    for (const auto& comp : g.components) {
      std::cout << "  component:";
      for (int v : comp) std::cout << " " << v;
      std::cout << "\n";
    }
  }
  std::cout << "wrote " << resolve_out(out) << "\n";
  return 0;
}

// --- calibrate ----------------------------------------------------------------

int cmd_calibrate(const std::string& dep_path, int configs, int n_users, std::uint64_t seed,
                  const std::string& out) {
  const LoadedDeployment dep = load_deployment(dep_path);
  const learner::Normalizer norm = learner::calibrate(dep.deployment, configs, n_users, seed);
  io::write_artifact(resolve_out(out), io::normalizer_to_json(norm, dep.hash, configs, seed));
  std::cout << "normalizer: max SINR " << norm.max_sinr_db << " dB, reward mean "
            << norm.reward_mean << ", reward std " << norm.reward_std << "\nwrote "
            << resolve_out(out) << "\n";
  return 0;
}

// --- train --------------------------------------------------------------------

struct SeedOutcome {
  std::vector<learner::MetricsRow> rows;
  io::Checkpoint final_ck;
  io::Checkpoint best_ck;
  bool has_best = false;
  bool completed = false;
};

learner::Policy constant_policy(const JointAction& tilts) {
  return [tilts](const std::vector<double>&) { return tilts; };
}

SeedOutcome run_one_seed(const config::ExperimentConfig& cfg, const netsim::Deployment& d,
                         const graph::CoordinationGraph* g, const learner::Normalizer& norm,
                         std::uint64_t seed) {
  SeedOutcome outcome;
  const std::string& algo = cfg.algorithm;

  const auto eval_of = [&](const learner::Policy& policy) {
    return learner::evaluate(d, norm, policy, cfg.eval_drops, cfg.eval_seed, cfg.n_users,
                             cfg.default_tilt);
  };
  const auto single_row = [&](double eval_mean) {
    learner::MetricsRow row;
    row.step = 0;
    row.epsilon = 0.0;
    row.eval_mean = eval_mean;
    return row;
  };

  if (algo == "ps-crl" || algo == "crl") {
    learner::TrainConfig tc;
    tc.deployment = &d;
    tc.graph = g;
    tc.normalizer = norm;
    tc.hyper = cfg.hyper;
    tc.mode = algo == "ps-crl" ? learner::QMode::shared : learner::QMode::per_edge;
    tc.n_users = cfg.n_users;
    tc.budget = cfg.budget;
    tc.eval_every = cfg.eval_every;
    tc.eval_drops = cfg.eval_drops;
    tc.default_tilt = cfg.default_tilt;
    tc.seed = seed;
    tc.eval_seed = cfg.eval_seed;
    learner::TrainResult r = learner::run_training(tc);
    outcome.rows = std::move(r.rows);
    outcome.best_ck.edge_q = std::move(r.best_q);
    outcome.has_best = !outcome.best_ck.edge_q->online.empty();
    outcome.final_ck.edge_q = std::move(r.final_q);
    outcome.best_ck.train_steps = outcome.final_ck.train_steps = r.train_steps;
  } else if (algo == "idqn" || algo == "sdqn") {
    baselines::DqnConfig dc;
    dc.deployment = &d;
    dc.normalizer = norm;
    dc.hyper = cfg.hyper;
    dc.mode = algo == "idqn" ? baselines::DqnMode::independent : baselines::DqnMode::shared;
    dc.n_users = cfg.n_users;
    dc.budget = cfg.budget;
    dc.eval_every = cfg.eval_every;
    dc.eval_drops = cfg.eval_drops;
    dc.default_tilt = cfg.default_tilt;
    dc.seed = seed;
    dc.eval_seed = cfg.eval_seed;
    baselines::DqnResult r = baselines::train_dqn(dc);
    outcome.rows = std::move(r.rows);
    outcome.best_ck.cell_q = std::move(r.best_policy);
    outcome.has_best = !outcome.best_ck.cell_q->online.empty();
    outcome.final_ck.cell_q = std::move(r.final_policy);
    outcome.best_ck.train_steps = outcome.final_ck.train_steps = r.train_steps;
  } else if (algo == "sweep" || algo == "csweep") {
    // One fixed drop per run; the seed controls the visit order.
    const netsim::UserDrop drop =
        netsim::drop_users(d, cfg.n_users, derive_seed(seed, Stream::sweep, 12345));
    const netsim::LinkGeometry geo = netsim::compute_geometry(d, drop);
    JointAction tilts;
    if (algo == "sweep") {
      const auto objective = [&](const JointAction& a) {
        const netsim::RadioSnapshot s = netsim::compute_snapshot(d, geo, drop, a);
        double v = 0.0;
        for (double r : s.cell_rewards) v += norm.standardize(r);
        return v / d.n_cells();
      };
      tilts = baselines::sweep(objective, d.n_cells(), d.params.n_tilts, cfg.sweep_passes, seed,
                               JointAction(d.n_cells(), cfg.default_tilt))
                  .tilts;
    } else {
      const auto rewards_fn = [&](const JointAction& a) {
        const netsim::RadioSnapshot s = netsim::compute_snapshot(d, geo, drop, a);
        std::vector<double> z(s.cell_rewards.size());
        for (std::size_t k = 0; k < z.size(); ++k) z[k] = norm.standardize(s.cell_rewards[k]);
        return z;
      };
      tilts = baselines::coordinated_sweep(rewards_fn, *g, d.params.n_tilts, cfg.default_tilt,
                                           cfg.hyper.mp_max_iters)
                  .tilts;
    }
    outcome.rows.push_back(single_row(eval_of(constant_policy(tilts)).mean));
    outcome.final_ck.tilts = tilts;
  } else if (algo == "random") {
    const baselines::BaselineStats stats =
        baselines::random_policy_baseline(d, norm, cfg.random_configs, cfg.n_users, seed);
    outcome.rows.push_back(single_row(stats.mean));
    // A representative draw, so the checkpoint can be evaluated like any other.
    Rng rng(derive_seed(seed, Stream::exploration));
    JointAction tilts(d.n_cells());
    for (int& t : tilts) t = rng.uniform_int(d.params.n_tilts);
    outcome.final_ck.tilts = tilts;
  } else {
    throw std::invalid_argument("unknown algorithm: " + algo);
  }
  outcome.completed = true;
  return outcome;
}

int cmd_train(const std::string& dep_path, const std::string& graph_path,
              const std::string& norm_path, const std::string& config_path,
              const config::ExperimentConfig& overrides, const std::vector<std::string>& given,
              const std::string& out_dir) {
  config::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(resolve_out(config_path));
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    cfg = config::config_from_json(json::parse(in));
  }
  // Explicit command-line flags win over the config file.
  const auto has = [&](const std::string& flag) {
    return std::find(given.begin(), given.end(), flag) != given.end();
  };
  if (has("--algo")) cfg.algorithm = overrides.algorithm;
  if (has("--seeds")) cfg.seeds = overrides.seeds;
  if (has("--budget")) cfg.budget = overrides.budget;
  if (has("--eval-every")) cfg.eval_every = overrides.eval_every;
  if (has("--eval-drops")) cfg.eval_drops = overrides.eval_drops;
  if (has("--users")) cfg.n_users = overrides.n_users;
  if (cfg.seeds.empty()) throw std::invalid_argument("train: need at least one seed");
  if (!config::algorithm_is_known(cfg.algorithm))
    throw std::invalid_argument("unknown algorithm: " + cfg.algorithm);

  const LoadedDeployment dep = load_deployment(dep_path);
  graph::CoordinationGraph g;
  std::string graph_hash;
  if (config::algorithm_uses_graph(cfg.algorithm)) {
    if (graph_path.empty())
      throw std::invalid_argument("algorithm '" + cfg.algorithm + "' requires --graph");
    const json gj = load_file(graph_path, "graph");
    if (gj.at("deployment_hash") != dep.hash)
      throw std::runtime_error("graph was built from a different deployment (hash mismatch)");
    g = io::graph_from_json(gj);
    graph_hash = io::content_hash(gj);
    if (g.n_nodes != dep.deployment.n_cells())
      throw std::runtime_error("graph node count does not match the deployment");
  }
  const json nj = load_file(norm_path, "normalizer");
  if (nj.at("deployment_hash") != dep.hash)
    throw std::runtime_error("normalizer was calibrated on a different deployment (hash mismatch)");
  const learner::Normalizer norm = io::normalizer_from_json(nj);
  const std::string norm_hash = io::content_hash(nj);
  const std::string run_hash = config::run_hash(cfg, dep.hash, graph_hash, norm_hash);

  const std::string out = resolve_out(out_dir);
  fs::create_directories(out);
  json echo = config::config_to_json(cfg);
  echo["kind"] = "config_echo";
  echo["deployment_hash"] = dep.hash;
  echo["graph_hash"] = graph_hash;
  echo["normalizer_hash"] = norm_hash;
  echo["config_hash"] = run_hash;
  io::write_artifact(out + "/config_echo.json", echo);

  const int n_seeds = static_cast<int>(cfg.seeds.size());
  std::vector<SeedOutcome> outcomes(n_seeds);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic) if (cfg.parallel_seeds)
  for (int k = 0; k < n_seeds; ++k) {
    try {
      outcomes[k] = run_one_seed(cfg, dep.deployment,
                                 config::algorithm_uses_graph(cfg.algorithm) ? &g : nullptr, norm,
                                 cfg.seeds[k]);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  // Metrics CSV: rows merged across seeds on the shared checkpoint cadence.
  std::vector<std::string> header{"algorithm", "step", "epsilon", "mean_eval_reward"};
  for (auto s : cfg.seeds) header.push_back("eval_s" + std::to_string(s));
  for (auto s : cfg.seeds) header.push_back("loss_s" + std::to_string(s));
  for (auto s : cfg.seeds) header.push_back("mp_iters_s" + std::to_string(s));
  std::vector<std::vector<std::string>> rows;
  const std::size_t n_rows = outcomes.empty() ? 0 : outcomes[0].rows.size();
  const bool has_mp = cfg.algorithm == "ps-crl" || cfg.algorithm == "crl";
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::vector<std::string> row{cfg.algorithm, std::to_string(outcomes[0].rows[r].step),
                                 fmt(outcomes[0].rows[r].epsilon)};
    double mean = 0.0;
    for (int k = 0; k < n_seeds; ++k) mean += outcomes[k].rows[r].eval_mean;
    row.push_back(fmt(mean / n_seeds));
    for (int k = 0; k < n_seeds; ++k) row.push_back(fmt(outcomes[k].rows[r].eval_mean));
    for (int k = 0; k < n_seeds; ++k)
      row.push_back(outcomes[k].rows[r].has_loss ? fmt(outcomes[k].rows[r].loss) : "");
    for (int k = 0; k < n_seeds; ++k) row.push_back(has_mp ? fmt(outcomes[k].rows[r].mp_iters) : "");
    rows.push_back(std::move(row));
  }
  write_csv(out + "/metrics.csv", run_hash, header, rows);

  for (int k = 0; k < n_seeds; ++k) {
    const auto finish = [&](io::Checkpoint& ck) {
      ck.algorithm = cfg.algorithm;
      ck.config_hash = run_hash;
      ck.deployment_hash = dep.hash;
      ck.graph_hash = graph_hash;
      ck.normalizer = norm;
      ck.seed = cfg.seeds[k];
    };
    finish(outcomes[k].final_ck);
    io::write_artifact(out + "/checkpoint_final_s" + std::to_string(cfg.seeds[k]) + ".json",
                       io::checkpoint_to_json(outcomes[k].final_ck));
    if (outcomes[k].has_best) {
      finish(outcomes[k].best_ck);
      io::write_artifact(out + "/checkpoint_best_s" + std::to_string(cfg.seeds[k]) + ".json",
                         io::checkpoint_to_json(outcomes[k].best_ck));
    }
  }

  bool all_done = true;
  for (const auto& o : outcomes) all_done = all_done && o.completed;
  std::cout << "train: algorithm " << cfg.algorithm << ", " << n_seeds << " seed(s), wrote "
            << out + "/metrics.csv" << "\n";
  if (!rows.empty()) std::cout << "last checkpoint mean eval reward: " << rows.back()[3] << "\n";
  return all_done ? 0 : 1;
}

// --- eval ---------------------------------------------------------------------

learner::Policy policy_from_checkpoint(const io::Checkpoint& ck, const graph::CoordinationGraph* g,
                                       int mp_max_iters) {
  if (ck.edge_q) {
    if (g == nullptr) throw std::invalid_argument("checkpoint needs a coordination graph");
    return learner::greedy_policy(*ck.edge_q, *g, mp_max_iters);
  }
  if (ck.cell_q) return baselines::dqn_policy(*ck.cell_q);
  if (ck.tilts) return constant_policy(*ck.tilts);
  throw std::invalid_argument("checkpoint carries no policy");
}

int cmd_eval(const std::string& ck_path, const std::string& dep_path,
             const std::string& graph_path, int drops, std::uint64_t seed, int n_users,
             int default_tilt, int mp_max_iters, const std::string& out_dir) {
  const json cj = load_file(ck_path, "checkpoint");
  const io::Checkpoint ck = io::checkpoint_from_json(cj);
  const LoadedDeployment dep = load_deployment(dep_path);
  if (ck.deployment_hash != dep.hash)
    throw std::runtime_error("checkpoint was trained on a different deployment (hash mismatch)");

  graph::CoordinationGraph g;
  const bool needs_graph = ck.edge_q.has_value();
  if (needs_graph) {
    if (graph_path.empty()) throw std::invalid_argument("this checkpoint requires --graph");
    const json gj = load_file(graph_path, "graph");
    if (io::content_hash(gj) != ck.graph_hash)
      throw std::runtime_error("graph does not match the checkpoint (hash mismatch)");
    g = io::graph_from_json(gj);
  }
  if (ck.edge_q && ck.edge_q->n_actions != dep.deployment.params.n_tilts)
    throw std::runtime_error("checkpoint action space does not match the deployment");
  if (ck.cell_q && ck.cell_q->n_cells != dep.deployment.n_cells())
    throw std::runtime_error("checkpoint cell count does not match the deployment");

  const learner::Policy policy =
      policy_from_checkpoint(ck, needs_graph ? &g : nullptr, mp_max_iters);
  const std::vector<learner::EvalDrop> detail = learner::evaluate_detailed(
      dep.deployment, ck.normalizer, policy, drops, seed, n_users, default_tilt);

  double mean = 0.0;
  for (const auto& ed : detail) mean += ed.reward / drops;
  double var = 0.0;
  for (const auto& ed : detail) var += (ed.reward - mean) * (ed.reward - mean) / drops;
  const double stddev = drops > 1 ? std::sqrt(var) : 0.0;

  const std::string out = resolve_out(out_dir);
  fs::create_directories(out);

  std::vector<std::vector<std::string>> eval_rows;
  for (int k = 0; k < drops; ++k) eval_rows.push_back({std::to_string(k), fmt(detail[k].reward)});
  write_csv(out + "/eval.csv", ck.config_hash, {"drop", "reward"}, eval_rows);

  std::vector<std::vector<std::string>> cdf_rows;
  for (int k = 0; k < drops; ++k)
    for (std::size_t u = 0; u < detail[k].user_throughput.size(); ++u)
      cdf_rows.push_back({std::to_string(k), std::to_string(u), fmt(detail[k].user_throughput[u])});
  write_csv(out + "/throughput_cdf.csv", ck.config_hash, {"drop", "user", "throughput_bps"},
            cdf_rows);

  const int n_cells = dep.deployment.n_cells();
  std::vector<double> per_cell(n_cells, 0.0);
  for (const auto& ed : detail)
    for (int c = 0; c < n_cells; ++c) per_cell[c] += ed.cell_rewards[c] / drops;
  json report{{"version", 1},
              {"kind", "eval_report"},
              {"config_hash", ck.config_hash},
              {"algorithm", ck.algorithm},
              {"drops", drops},
              {"mean_reward", mean},
              {"std_reward", stddev},
              {"per_cell_mean_reward", per_cell}};
  json per_drop = json::array();
  for (const auto& ed : detail) per_drop.push_back({{"reward", ed.reward}, {"tilts", ed.action}});
  report["per_drop"] = per_drop;
  io::write_artifact(out + "/report.json", report);

  std::cout << "eval: " << ck.algorithm << " mean reward " << mean << " +- " << stddev << " over "
            << drops << " drops\nwrote " << out << "/report.json\n";
  return 0;
}

// --- bench ----------------------------------------------------------------------

int cmd_bench(const std::string& ck_path, const std::string& dep_path,
              const std::string& topologies_csv, int selections, std::uint64_t seed, int n_users,
              int ref_drops, int default_tilt, int mp_max_iters, const std::string& out_path) {
  const json cj = load_file(ck_path, "checkpoint");
  const io::Checkpoint ck = io::checkpoint_from_json(cj);
  if (!ck.edge_q) throw std::invalid_argument("bench requires an edge value-network checkpoint");
  if (ck.edge_q->mode != learner::QMode::shared)
    throw std::invalid_argument(
        "bench requires a shared-parameters checkpoint (applies to any graph)");
  const LoadedDeployment dep = load_deployment(dep_path);
  if (ck.deployment_hash != dep.hash)
    throw std::runtime_error("checkpoint was trained on a different deployment (hash mismatch)");
  const netsim::Deployment& d = dep.deployment;

  std::vector<std::string> topologies;
  std::stringstream ss(topologies_csv);
  std::string item;
  while (std::getline(ss, item, ',')) topologies.push_back(item);
  if (topologies.empty()) throw std::invalid_argument("bench: no topologies given");

  const graph::GraphParams gp;
  const graph::CouplingMatrix c = graph::coupling_matrix(d, ref_drops, seed, n_users, gp);

  std::vector<std::vector<std::string>> rows;
  for (const std::string& name : topologies) {
    const graph::CoordinationGraph g = graph::build_graph(c, graph::topology_from_name(name), gp);
    std::vector<double> ms(selections);
    double iters = 0.0;
    for (int k = -1; k < selections; ++k) {
      const netsim::UserDrop drop = netsim::drop_users(
          d, n_users, derive_seed(seed, Stream::eval_drop, std::max(k, 0)));
      const netsim::RadioSnapshot snap =
          netsim::compute_snapshot(d, drop, JointAction(d.n_cells(), default_tilt));
      const std::vector<double> obs = ck.normalizer.normalize_observations(
          netsim::all_observations(snap, d.params.empty_cell_obs_db));
      Rng rng(0);
      const auto t0 = std::chrono::steady_clock::now();
      const learner::ActResult acted = learner::act(*ck.edge_q, g, obs, 0.0, rng, mp_max_iters);
      const auto t1 = std::chrono::steady_clock::now();
      if (k < 0) continue;  // warmup selection, untimed
      ms[k] = std::chrono::duration<double, std::milli>(t1 - t0).count();
      iters += acted.diag.iterations;
    }
    std::sort(ms.begin(), ms.end());
    double mean = 0.0;
    for (double v : ms) mean += v / selections;
    const double p95 = ms[static_cast<std::size_t>(0.95 * (selections - 1))];
    rows.push_back({name, fmt(mean), fmt(p95), fmt(iters / selections)});
    std::cout << "bench " << name << ": " << g.n_edges() << " edges, mean " << mean << " ms, p95 "
              << p95 << " ms, mean iterations " << iters / selections << "\n";
  }
  write_csv(resolve_out(out_path), ck.config_hash,
            {"topology", "mean_ms", "p95_ms", "mean_iterations"}, rows);
  std::cout << "wrote " << resolve_out(out_path) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinated antenna-tilt optimization: simulator, graphs, trainers, benchmarks"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate a base-station deployment");
  int stations = 0;
  std::uint64_t gen_seed = 42;
  int cells_per_station = 3;
  double area_per_station = 0.0;
  std::string gen_out;
  gen->add_option("--stations", stations, "number of base stations")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "deployment seed");
  gen->add_option("--cells-per-station", cells_per_station)->check(CLI::PositiveNumber);
  gen->add_option("--area-per-station", area_per_station, "square meters per station");
  gen->add_option("-o,--out", gen_out, "output deployment JSON")->required();

  auto* gr = app.add_subcommand("graph", "Build a coordination graph from a deployment");
  std::string gr_dep, gr_topology = "sparse", gr_out;
  int gr_drops = 3, gr_users = 1000;
  std::uint64_t gr_seed = 7;
  double sparse_offset = -10.0, dense_offset = -20.0;
  gr->add_option("--deployment", gr_dep)->required();
  gr->add_option("--topology", gr_topology, "sparse|dense|tree|complete")
      ->check(CLI::IsMember({"sparse", "dense", "tree", "complete"}));
  gr->add_option("--ref-drops", gr_drops)->check(CLI::PositiveNumber);
  gr->add_option("--users", gr_users)->check(CLI::PositiveNumber);
  gr->add_option("--seed", gr_seed);
  gr->add_option("--sparse-offset-db", sparse_offset, "coupling threshold relative to noise, dB");
  gr->add_option("--dense-offset-db", dense_offset);
  gr->add_option("-o,--out", gr_out)->required();

  auto* cal = app.add_subcommand("calibrate", "Estimate observation/reward normalization");
  std::string cal_dep, cal_out;
  int cal_configs = 1000, cal_users = 1000;
  std::uint64_t cal_seed = 123;
  cal->add_option("--deployment", cal_dep)->required();
  cal->add_option("--configs", cal_configs)->check(CLI::PositiveNumber);
  cal->add_option("--users", cal_users)->check(CLI::PositiveNumber);
  cal->add_option("--seed", cal_seed);
  cal->add_option("-o,--out", cal_out)->required();

  auto* tr = app.add_subcommand("train", "Train a policy (or run a non-learning baseline)");
  std::string tr_dep, tr_graph, tr_norm, tr_config, tr_out;
  config::ExperimentConfig overrides;
  tr->add_option("--deployment", tr_dep)->required();
  tr->add_option("--graph", tr_graph);
  tr->add_option("--norm", tr_norm)->required();
  tr->add_option("--config", tr_config, "experiment config JSON (defaults otherwise)");
  tr->add_option("--algo", overrides.algorithm, "ps-crl|crl|idqn|sdqn|sweep|csweep|random");
  tr->add_option("--seeds", overrides.seeds, "training seeds")->delimiter(',');
  tr->add_option("--budget", overrides.budget)->check(CLI::NonNegativeNumber);
  tr->add_option("--eval-every", overrides.eval_every)->check(CLI::PositiveNumber);
  tr->add_option("--eval-drops", overrides.eval_drops)->check(CLI::PositiveNumber);
  tr->add_option("--users", overrides.n_users)->check(CLI::PositiveNumber);
  tr->add_option("-o,--out", tr_out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint over fresh user drops");
  std::string ev_ck, ev_dep, ev_graph, ev_out;
  int ev_drops = 10, ev_users = 1000, ev_default_tilt = 8, ev_mp_iters = 40;
  std::uint64_t ev_seed = 900001;
  ev->add_option("--checkpoint", ev_ck)->required();
  ev->add_option("--deployment", ev_dep)->required();
  ev->add_option("--graph", ev_graph);
  ev->add_option("--drops", ev_drops)->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--users", ev_users)->check(CLI::PositiveNumber);
  ev->add_option("--default-tilt", ev_default_tilt);
  ev->add_option("--mp-max-iters", ev_mp_iters)->check(CLI::PositiveNumber);
  ev->add_option("-o,--out", ev_out, "output directory")->required();

  auto* be = app.add_subcommand("bench", "Measure action-selection latency per topology");
  std::string be_ck, be_dep, be_topos = "tree,sparse,dense,complete", be_out;
  int be_sel = 30, be_users = 1000, be_drops = 3, be_default_tilt = 8, be_mp_iters = 40;
  std::uint64_t be_seed = 900001;
  be->add_option("--checkpoint", be_ck)->required();
  be->add_option("--deployment", be_dep)->required();
  be->add_option("--topologies", be_topos);
  be->add_option("--selections", be_sel, "action selections per topology")
      ->check(CLI::PositiveNumber);
  be->add_option("--seed", be_seed);
  be->add_option("--users", be_users)->check(CLI::PositiveNumber);
  be->add_option("--ref-drops", be_drops)->check(CLI::PositiveNumber);
  be->add_option("--default-tilt", be_default_tilt);
  be->add_option("--mp-max-iters", be_mp_iters)->check(CLI::PositiveNumber);
  be->add_option("-o,--out", be_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(stations, gen_seed, cells_per_station, area_per_station, gen_out);
    if (gr->parsed())
      return cmd_graph(gr_dep, gr_topology, gr_drops, gr_users, gr_seed, sparse_offset,
                       dense_offset, gr_out);
    if (cal->parsed()) return cmd_calibrate(cal_dep, cal_configs, cal_users, cal_seed, cal_out);
    if (tr->parsed()) {
      std::vector<std::string> given;
      for (const auto* opt : tr->get_options())
        if (opt->count() > 0) given.push_back(opt->get_name());
      return cmd_train(tr_dep, tr_graph, tr_norm, tr_config, overrides, given, tr_out);
    }
    if (ev->parsed())
      return cmd_eval(ev_ck, ev_dep, ev_graph, ev_drops, ev_seed, ev_users, ev_default_tilt,
                      ev_mp_iters, ev_out);
    if (be->parsed())
      return cmd_bench(be_ck, be_dep, be_topos, be_sel, be_seed, be_users, be_drops,
                       be_default_tilt, be_mp_iters, be_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
