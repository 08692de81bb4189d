#include "fastpca/network.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "fastpca/errors.hpp"

namespace fastpca {

namespace {

void check_edges(const Topology& topo) {
  for (const auto& [i, j] : topo.edges) {
    if (i < 0 || j < 0 || i >= topo.M || j >= topo.M)
      throw ValidationError("topology: edge endpoint out of range");
    if (i == j) throw ValidationError("topology: self-loop");
  }
}

Topology canonical(int M, std::vector<std::pair<int, int>> edges) {
  for (auto& [i, j] : edges)
    if (i > j) std::swap(i, j);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Topology topo{M, std::move(edges)};
  check_edges(topo);
  return topo;
}

}  // namespace

std::vector<int> Topology::degrees() const {
  std::vector<int> deg(M, 0);
  for (const auto& [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

std::vector<std::vector<bool>> Topology::adjacency() const {
  std::vector<std::vector<bool>> adj(M, std::vector<bool>(M, false));
  for (const auto& [i, j] : edges) adj[i][j] = adj[j][i] = true;
  return adj;
}

bool is_connected(const Topology& topo) {
  if (topo.M < 1) return false;
  std::vector<std::vector<int>> nbrs(topo.M);
  for (const auto& [i, j] : topo.edges) {
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  std::vector<bool> seen(topo.M, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : nbrs[u])
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
  }
  return reached == topo.M;
}

Topology erdos_renyi(int M, double p, std::uint64_t seed) {
  if (M < 1) throw ValidationError("erdos_renyi: M must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) {
    if (p == 0.0 && M == 1) return Topology{1, {}};
    throw ValidationError("erdos_renyi: p must lie in (0, 1]");
  }

  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < M; ++i)
      for (int j = i + 1; j < M; ++j)
        if (rng.next_double() < p) edges.emplace_back(i, j);
    Topology topo{M, std::move(edges)};
    if (is_connected(topo)) return topo;
  }
  throw DiagnosticError(
      "erdos_renyi: no connected sample after " + std::to_string(kMaxAttempts) +
      " attempts (p too small for M?)");
}

Topology cycle(int M) {
  if (M < 3) throw ValidationError("cycle: M must be >= 3");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < M; ++i) edges.emplace_back(i, (i + 1) % M);
  return canonical(M, std::move(edges));
}

Topology complete(int M) {
  if (M < 1) throw ValidationError("complete: M must be >= 1");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j) edges.emplace_back(i, j);
  return Topology{M, std::move(edges)};
}

Topology star(int M) {
  if (M < 1) throw ValidationError("star: M must be >= 1");
  std::vector<std::pair<int, int>> edges;
  for (int leaf = 1; leaf < M; ++leaf) edges.emplace_back(0, leaf);
  return Topology{M, std::move(edges)};
}

MixingMatrix metropolis_weights(const Topology& topo) {
  check_edges(topo);
  if (!is_connected(topo))
    throw ValidationError("metropolis_weights: topology is not connected");

  const auto deg = topo.degrees();
  Matrix w = Matrix::Zero(topo.M, topo.M);
  for (const auto& [i, j] : topo.edges)
    w(i, j) = w(j, i) = 1.0 / (1.0 + std::max(deg[i], deg[j]));
  for (int i = 0; i < topo.M; ++i) w(i, i) = 1.0 - w.row(i).sum();

  MixingMatrix mixing;
  mixing.beta = beta_of(w);
  mixing.W = std::move(w);
  return mixing;
}

double beta_of(const Matrix& w) {
  const int m = static_cast<int>(w.rows());
  if (m < 1 || w.cols() != m) throw ValidationError("beta_of: W must be square");
  if ((w - w.transpose()).norm() > 1e-10 * std::max(1.0, w.norm()))
    throw ValidationError("beta_of: W must be symmetric");
  if (m == 1) return 0.0;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(w);
  if (solver.info() != Eigen::Success)
    throw DiagnosticError("beta_of: eigensolver failed to converge");
  const Vector ev = solver.eigenvalues();  // ascending
  return std::max(std::abs(ev(m - 2)), std::abs(ev(0)));
}

std::string topology_to_edge_list(const Topology& topo) {
  std::ostringstream out;
  out << topo.M << "\n";
  auto sorted = topo.edges;
  for (auto& [i, j] : sorted)
    if (i > j) std::swap(i, j);
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [i, j] : sorted) out << i << " " << j << "\n";
  return out.str();
}

Topology topology_from_edge_list(const std::string& text) {
  std::istringstream in(text);
  int m = 0;
  if (!(in >> m) || m < 1)
    throw FormatError("edge list: missing or invalid node count");
  std::vector<std::pair<int, int>> edges;
  int i, j;
  while (in >> i >> j) edges.emplace_back(i, j);
  if (!in.eof() && in.fail() && !edges.empty())
    throw FormatError("edge list: trailing garbage");
  return canonical(m, std::move(edges));
}

void save_topology(const Topology& topo, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_topology: cannot open " + path);
  out << topology_to_edge_list(topo);
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_topology: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return topology_from_edge_list(buf.str());
}

}  // namespace fastpca
