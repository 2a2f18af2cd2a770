#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "tiltnet/baselines.hpp"
#include "tiltnet/graph.hpp"
#include "tiltnet/learner.hpp"
#include "tiltnet/netsim.hpp"
#include "tiltnet/neural.hpp"

namespace tiltnet::io {

using json = nlohmann::json;

// FNV-1a over the canonical dump, excluding the artifact's own hash field.
std::string content_hash(json j);

// Writes the artifact with its content_hash field filled in.
void write_artifact(const std::string& path, json j);

// Reads, verifies content_hash and the "kind" tag.
json read_artifact(const std::string& path, const std::string& expect_kind);

// Shortest round-trip decimal form; used for CSV output.
std::string format_double(double v);

json deployment_to_json(const netsim::Deployment& d);
netsim::Deployment deployment_from_json(const json& j);

json drop_to_json(const netsim::UserDrop& u);
netsim::UserDrop drop_from_json(const json& j);

json graph_to_json(const graph::CoordinationGraph& g, const std::string& deployment_hash);
graph::CoordinationGraph graph_from_json(const json& j);

json normalizer_to_json(const learner::Normalizer& n, const std::string& deployment_hash,
                        int n_configs, std::uint64_t seed);
learner::Normalizer normalizer_from_json(const json& j);

// Networks serialize as {dims, params} with one flat array in layer order
// (W0 row-major, b0, W1, b1, ...). Optimizer state mirrors the layout.
json mlp_to_json(const neural::Mlp& net);
neural::Mlp mlp_from_json(const json& j);
json adam_to_json(const neural::AdamState& s);
neural::AdamState adam_from_json(const json& j, const neural::Mlp& shape);

// One trained policy of any algorithm, plus the artifact hashes it was
// produced from. Exactly one of edge_q / cell_q / tilts is populated.
struct Checkpoint {
  std::string algorithm;
  std::string config_hash;
  std::string deployment_hash;
  std::string graph_hash;  // empty when the algorithm does not use a graph
  learner::Normalizer normalizer;
  long train_steps = 0;
  std::uint64_t seed = 0;
  std::optional<learner::EdgeQ> edge_q;
  std::optional<baselines::CellQPolicy> cell_q;
  std::optional<JointAction> tilts;
};

json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const json& j);

}  // namespace tiltnet::io
