#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tiltnet/netsim.hpp"

namespace tiltnet::graph {

enum class Topology { sparse, dense, tree, complete };

std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);

struct CoordinationGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // canonical i < j, sorted lexicographically
  std::vector<std::vector<int>> adjacency;
  std::vector<std::vector<int>> components;
  bool connected = false;
  std::string topology = "custom";

  int n_edges() const { return static_cast<int>(edges.size()); }
};

// Symmetric nonnegative coupling scores (mean interference power, watts).
struct CouplingMatrix {
  int n = 0;
  std::vector<double> values;  // n x n row-major, zero diagonal
  double noise_power_w = 0.0;  // receiver noise floor of the producing deployment

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
};

struct GraphParams {
  // Noise-relative thresholds: keep an edge iff the coupling is at least
  // noise_power_w * 10^(offset/10). An interferer well below the receiver
  // noise floor cannot influence anyone's SINR. Sparse and dense graphs also
  // get the spanning-forest edges of the significant couplings, so
  // thresholding never severs components that are physically coupled.
  double sparse_noise_offset_db = -10.0;
  double dense_noise_offset_db = -20.0;
  // Couplings further than this below the noise floor do not count as
  // significant for the connectivity bridging (inactive when noise_power_w
  // is 0, e.g. for synthetic matrices).
  double noise_floor_db = 30.0;
  int reference_tilt = 8;
};

// Mean received interference power at a fixed reference tilt, averaged over
// reference drops and over the users of each cell, then symmetrized with max.
CouplingMatrix coupling_matrix(const netsim::Deployment& d, int reference_drops,
                               std::uint64_t seed, int n_users = 1000,
                               const GraphParams& params = {});

CoordinationGraph build_graph(const CouplingMatrix& c, Topology topology,
                              const GraphParams& params = {});

// Validates, canonicalizes and wires adjacency/components for an explicit
// edge list.
CoordinationGraph graph_from_edges(int n_nodes, std::vector<std::pair<int, int>> edges,
                                   const std::string& topology = "custom");

int neighbor_count(const CoordinationGraph& g, int node);

// Canonical edge lookup; accepts either endpoint order.
std::optional<int> find_edge(const CoordinationGraph& g, int i, int j);

}  // namespace tiltnet::graph
