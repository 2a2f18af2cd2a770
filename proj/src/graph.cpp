#include "tiltnet/graph.hpp"

#include <algorithm>
#include <set>
#include <numeric>
#include <stdexcept>

#include "tiltnet/rng.hpp"

namespace tiltnet::graph {

namespace {

void wire(CoordinationGraph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  for (std::size_t k = 1; k < g.edges.size(); ++k)
    if (g.edges[k] == g.edges[k - 1]) throw std::invalid_argument("graph: duplicate edge");

  g.adjacency.assign(g.n_nodes, {});
  for (const auto& [i, j] : g.edges) {
    if (i < 0 || j < 0 || i >= g.n_nodes || j >= g.n_nodes || i == j)
      throw std::invalid_argument("graph: bad edge endpoints");
    g.adjacency[i].push_back(j);
    g.adjacency[j].push_back(i);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());

  g.components.clear();
  std::vector<int> seen(g.n_nodes, 0);
  for (int start = 0; start < g.n_nodes; ++start) {
    if (seen[start]) continue;
    std::vector<int> comp{start};
    seen[start] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head)
      for (int nb : g.adjacency[comp[head]])
        if (!seen[nb]) {
          seen[nb] = 1;
          comp.push_back(nb);
        }
    std::sort(comp.begin(), comp.end());
    g.components.push_back(std::move(comp));
  }
  g.connected = g.components.size() == 1;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

std::vector<std::pair<int, int>> threshold_edges(const CouplingMatrix& c,
                                                 double noise_offset_db) {
  const double threshold = c.noise_power_w * netsim::db_to_linear(noise_offset_db);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 1; j < c.n; ++j) {
      const double v = c.at(i, j);
      if (v > 0.0 && v >= threshold) edges.push_back({i, j});
    }
  return edges;
}

// Minimum spanning forest under weight 1/coupling; ties broken by edge order.
std::vector<std::pair<int, int>> mst_edges(const CouplingMatrix& c,
                                           std::vector<std::pair<int, int>> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [&](const std::pair<int, int>& a, const std::pair<int, int>& b) {
              const double wa = 1.0 / c.at(a.first, a.second);
              const double wb = 1.0 / c.at(b.first, b.second);
              if (wa != wb) return wa < wb;
              return a < b;
            });
  UnionFind uf(c.n);
  std::vector<std::pair<int, int>> kept;
  for (const auto& e : candidates)
    if (uf.unite(e.first, e.second)) kept.push_back(e);
  return kept;
}

// Thresholded edges plus the spanning-forest edges of the significant
// couplings: components stay connected wherever any significant coupling
// links them, without densifying the rest.
std::vector<std::pair<int, int>> bridged(const CouplingMatrix& c,
                                         std::vector<std::pair<int, int>> edges,
                                         double noise_floor_db) {
  const double floor = c.noise_power_w * netsim::db_to_linear(-noise_floor_db);
  std::vector<std::pair<int, int>> significant;
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 1; j < c.n; ++j)
      if (c.at(i, j) > 0.0 && c.at(i, j) >= floor) significant.push_back({i, j});
  std::set<std::pair<int, int>> have(edges.begin(), edges.end());
  for (const auto& e : mst_edges(c, std::move(significant)))
    if (have.insert(e).second) edges.push_back(e);
  return edges;
}

}  // namespace

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::sparse: return "sparse";
    case Topology::dense: return "dense";
    case Topology::tree: return "tree";
    case Topology::complete: return "complete";
  }
  throw std::logic_error("topology_name: bad enum");
}

Topology topology_from_name(const std::string& name) {
  if (name == "sparse") return Topology::sparse;
  if (name == "dense") return Topology::dense;
  if (name == "tree") return Topology::tree;
  if (name == "complete") return Topology::complete;
  throw std::invalid_argument("unknown topology: " + name);
}

CouplingMatrix coupling_matrix(const netsim::Deployment& d, int reference_drops,
                               std::uint64_t seed, int n_users, const GraphParams& params) {
  if (reference_drops < 1)
    throw std::invalid_argument("coupling_matrix: reference_drops must be >= 1");
  const int n = d.n_cells();
  CouplingMatrix c;
  c.n = n;
  c.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  c.noise_power_w = d.params.noise_power_w;

  std::vector<double> acc(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<long> count(n, 0);
  const JointAction tilts(n, params.reference_tilt);
  const double tx = d.params.antenna.tx_power_w;

  for (int r = 0; r < reference_drops; ++r) {
    const netsim::UserDrop drop = netsim::drop_users(d, n_users, derive_seed(seed, Stream::coupling, r));
    const netsim::RadioSnapshot snap = netsim::compute_snapshot(d, drop, tilts);
    for (int u = 0; u < snap.n_users; ++u) {
      const int i = snap.association[u];
      count[i]++;
      for (int j = 0; j < n; ++j)
        if (j != i) acc[static_cast<std::size_t>(i) * n + j] += tx * snap.pg(j, u);
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i && count[i] > 0)
        c.values[static_cast<std::size_t>(i) * n + j] =
            acc[static_cast<std::size_t>(i) * n + j] / static_cast<double>(count[i]);

  // Symmetrize with max; either direction of influence couples the pair.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = std::max(c.at(i, j), c.at(j, i));
      c.values[static_cast<std::size_t>(i) * n + j] = m;
      c.values[static_cast<std::size_t>(j) * n + i] = m;
    }
  return c;
}

CoordinationGraph build_graph(const CouplingMatrix& c, Topology topology,
                              const GraphParams& params) {
  if (c.n < 1) throw std::invalid_argument("build_graph: empty coupling matrix");
  CoordinationGraph g;
  g.n_nodes = c.n;
  g.topology = topology_name(topology);
  switch (topology) {
    case Topology::complete:
      for (int i = 0; i < c.n; ++i)
        for (int j = i + 1; j < c.n; ++j) g.edges.push_back({i, j});
      break;
    case Topology::sparse:
      g.edges = bridged(c, threshold_edges(c, params.sparse_noise_offset_db),
                        params.noise_floor_db);
      break;
    case Topology::dense:
      g.edges =
          bridged(c, threshold_edges(c, params.dense_noise_offset_db), params.noise_floor_db);
      break;
    case Topology::tree:
      g.edges = mst_edges(c, bridged(c, threshold_edges(c, params.sparse_noise_offset_db),
                                     params.noise_floor_db));
      break;
  }
  wire(g);
  return g;
}

CoordinationGraph graph_from_edges(int n_nodes, std::vector<std::pair<int, int>> edges,
                                   const std::string& topology) {
  CoordinationGraph g;
  g.n_nodes = n_nodes;
  g.topology = topology;
  for (auto& [i, j] : edges)
    if (i > j) std::swap(i, j);
  g.edges = std::move(edges);
  wire(g);
  return g;
}

int neighbor_count(const CoordinationGraph& g, int node) {
  if (node < 0 || node >= g.n_nodes) throw std::invalid_argument("neighbor_count: unknown node id");
  return static_cast<int>(g.adjacency[node].size());
}

std::optional<int> find_edge(const CoordinationGraph& g, int i, int j) {
  if (i > j) std::swap(i, j);
  const std::pair<int, int> key{i, j};
  const auto it = std::lower_bound(g.edges.begin(), g.edges.end(), key);
  if (it == g.edges.end() || *it != key) return std::nullopt;
  return static_cast<int>(it - g.edges.begin());
}

}  // namespace tiltnet::graph
