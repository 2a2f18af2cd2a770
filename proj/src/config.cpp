#include "tiltnet/config.hpp"

#include <set>
#include <stdexcept>

namespace tiltnet::config {

bool algorithm_is_known(const std::string& a) {
  static const std::set<std::string> known{"ps-crl", "crl", "idqn", "sdqn",
                                           "sweep",  "csweep", "random"};
  return known.count(a) > 0;
}

bool algorithm_uses_graph(const std::string& a) {
  return a == "ps-crl" || a == "crl" || a == "csweep";
}

io::json config_to_json(const ExperimentConfig& c) {
  return {{"algorithm", c.algorithm},
          {"seeds", c.seeds},
          {"budget", c.budget},
          {"eval_every", c.eval_every},
          {"eval_drops", c.eval_drops},
          {"eval_seed", c.eval_seed},
          {"n_users", c.n_users},
          {"default_tilt", c.default_tilt},
          {"sweep_passes", c.sweep_passes},
          {"random_configs", c.random_configs},
          {"parallel_seeds", c.parallel_seeds},
          {"gamma", c.hyper.gamma},
          {"learning_rate", c.hyper.learning_rate},
          {"epsilon_initial", c.hyper.epsilon_initial},
          {"epsilon_final", c.hyper.epsilon_final},
          {"epsilon_decay_steps", c.hyper.epsilon_decay_steps},
          {"hidden_width", c.hyper.hidden_width},
          {"batch_size", c.hyper.batch_size},
          {"replay_capacity", c.hyper.replay_capacity},
          {"target_update_crl", c.hyper.target_update_crl},
          {"target_update_dqn", c.hyper.target_update_dqn},
          {"mp_max_iters", c.hyper.mp_max_iters},
          {"grad_clip_norm", c.hyper.grad_clip_norm}};
}

ExperimentConfig config_from_json(const io::json& j) {
  ExperimentConfig c;
  const io::json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
    (void)value;
  }
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("algorithm", c.algorithm);
  get("seeds", c.seeds);
  get("budget", c.budget);
  get("eval_every", c.eval_every);
  get("eval_drops", c.eval_drops);
  get("eval_seed", c.eval_seed);
  get("n_users", c.n_users);
  get("default_tilt", c.default_tilt);
  get("sweep_passes", c.sweep_passes);
  get("random_configs", c.random_configs);
  get("parallel_seeds", c.parallel_seeds);
  get("gamma", c.hyper.gamma);
  get("learning_rate", c.hyper.learning_rate);
  get("epsilon_initial", c.hyper.epsilon_initial);
  get("epsilon_final", c.hyper.epsilon_final);
  get("epsilon_decay_steps", c.hyper.epsilon_decay_steps);
  get("hidden_width", c.hyper.hidden_width);
  get("batch_size", c.hyper.batch_size);
  get("replay_capacity", c.hyper.replay_capacity);
  get("target_update_crl", c.hyper.target_update_crl);
  get("target_update_dqn", c.hyper.target_update_dqn);
  get("mp_max_iters", c.hyper.mp_max_iters);
  get("grad_clip_norm", c.hyper.grad_clip_norm);
  if (!algorithm_is_known(c.algorithm))
    throw std::invalid_argument("config: unknown algorithm '" + c.algorithm + "'");
  return c;
}

std::string run_hash(const ExperimentConfig& c, const std::string& deployment_hash,
                     const std::string& graph_hash, const std::string& normalizer_hash) {
  io::json j = config_to_json(c);
  j["deployment_hash"] = deployment_hash;
  j["graph_hash"] = graph_hash;
  j["normalizer_hash"] = normalizer_hash;
  return io::content_hash(j);
}

}  // namespace tiltnet::config
