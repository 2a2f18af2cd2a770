#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiltnet/io.hpp"
#include "tiltnet/learner.hpp"

namespace tiltnet::config {

// Full description of one experiment run. Every field has an explicit
// default; loading rejects unknown keys so typos cannot silently fall back.
struct ExperimentConfig {
  std::string algorithm = "ps-crl";  // ps-crl | crl | idqn | sdqn | sweep | csweep | random
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int budget = 10000;
  int eval_every = 250;
  int eval_drops = 10;
  std::uint64_t eval_seed = 900001;
  int n_users = 1000;
  int default_tilt = 8;
  int sweep_passes = 1;
  int random_configs = 200;  // sample size for the random baseline
  bool parallel_seeds = true;
  learner::Hyper hyper;
};

bool algorithm_uses_graph(const std::string& algorithm);
bool algorithm_is_known(const std::string& algorithm);

io::json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const io::json& j);

// Hash over the complete config plus the input artifact hashes; identifies a
// run for artifact-mixing checks.
std::string run_hash(const ExperimentConfig& c, const std::string& deployment_hash,
                     const std::string& graph_hash, const std::string& normalizer_hash);

}  // namespace tiltnet::config
