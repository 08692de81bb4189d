#ifndef FASTPCA_NETWORK_HPP
#define FASTPCA_NETWORK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fastpca/linalg.hpp"

namespace fastpca {

// Undirected graph over nodes 0..M-1, no self-loops. Edges are stored as
// canonical (i < j) pairs in sorted order.
struct Topology {
  int M = 0;
  std::vector<std::pair<int, int>> edges;

  std::vector<int> degrees() const;
  std::vector<std::vector<bool>> adjacency() const;
};

bool is_connected(const Topology& topo);

// Each pair joined independently with probability p; whole graphs are
// resampled (with a derived seed) until connected.
Topology erdos_renyi(int M, double p, std::uint64_t seed);
Topology cycle(int M);     // node i joined to (i +- 1) mod M, M >= 3
Topology complete(int M);
Topology star(int M);      // hub 0

// Symmetric doubly stochastic weight matrix conforming to a graph, with
// beta = max(|lambda_2(W)|, |lambda_M(W)|) < 1 on connected graphs.
struct MixingMatrix {
  Matrix W;
  double beta = 0.0;
};

// Metropolis-Hastings local-degree weights:
//   w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, w_ii absorbs the rest.
MixingMatrix metropolis_weights(const Topology& topo);

// Second-largest eigenvalue magnitude of a symmetric doubly stochastic W.
double beta_of(const Matrix& w);

// Edge-list text format: M on line 1, one "i j" pair per line.
std::string topology_to_edge_list(const Topology& topo);
Topology topology_from_edge_list(const std::string& text);
void save_topology(const Topology& topo, const std::string& path);
Topology load_topology(const std::string& path);

}  // namespace fastpca

#endif
