#ifndef FASTPCA_CONSENSUS_PCA_HPP
#define FASTPCA_CONSENSUS_PCA_HPP

#include <cstdint>
#include <vector>

#include "fastpca/network.hpp"
#include "fastpca/spectra.hpp"

namespace fastpca {

// Per-node iterate: K eigenvector estimates (columns of X) and, for
// tracker-based methods, the pseudo-gradient tracker S of the same shape.
struct NodeState {
  Matrix X;
  Matrix S;
};

// Full simulator state of one distributed run: one NodeState per node,
// the synchronous-round counter and the accumulated communication cost.
struct NetworkState {
  std::vector<NodeState> nodes;
  long iteration = 0;
  long comm_units = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
};

// Communication-cost accounting. One unit = one network-wide exchange of
// d x K matrices. `paper` charges tracker methods 1 unit per outer
// iteration; `payload` charges 2 (X and S are both exchanged).
enum class Accounting { paper, payload };

// Per-run algorithm parameters: the step size, the number of components,
// the consensus-loop depth of the sequential baselines, an iteration cap
// and the seed of the shared initial frame.
struct AlgoConfig {
  double alpha = 1.0;
  int K = 1;
  int t_consensus = 50;
  long max_iters = 1000000;
  std::uint64_t seed = 0;
};

// Pseudo-gradient with Gram-Schmidt deflation, column k:
//   h(x_k) = C x_k - (x_k^T C x_k / |x_k|^2) x_k
//            - sum_{p<k} (x_p^T C x_k / |x_p|^2) x_p
// Every column of X must be nonzero.
Matrix pseudo_gradient(const Matrix& c_local, const Matrix& x);

// Same map for a single vector against a fixed deflation prefix (the
// function whose Lipschitz constant the analysis module probes).
Vector pseudo_gradient_column(const Matrix& c_local, const Vector& v,
                              const Matrix& prefix);

// All nodes start from one shared seeded orthonormal d x K matrix;
// trackers start at S_i = h_i(X_init); comm_units = 0.
NetworkState fastpca_init(const std::vector<DataShard>& shards, int d, int K,
                          std::uint64_t seed);

// One synchronous round:
//   X_i <- 1/2 X_i + sum_j (w_ij/2) X_j + alpha S_i
//   S_i <- 1/2 S_i + sum_j (w_ij/2) S_j + h_i(X_i^new) - h_i(X_i^old)
// Both right-hand sides read the previous iterate. Aborts with a
// diagnostic if any column norm falls below 1e-30.
NetworkState fastpca_step(const NetworkState& state, const MixingMatrix& mixing,
                          double alpha, const std::vector<DataShard>& shards,
                          Accounting accounting = Accounting::paper);

// Generalized Hebbian update direction: C X - X ut(X^T C X), where ut
// keeps the upper triangle including the diagonal.
Matrix gha_update(const Matrix& c_local, const Matrix& x);

// Combine-and-adapt baseline (reconstructed DSA): X_i <- sum_j w_ij X_j
// + alpha * gha_update(C_i, X_i). Mixes with W itself, no tracker.
NetworkState dsa_step(const NetworkState& state, const MixingMatrix& mixing,
                      double alpha, const std::vector<DataShard>& shards);

// Sequential distributed power method: eigenvectors are estimated one at
// a time; every power step averages the local deflated matrix-vector
// products over t_consensus rounds of W before normalizing. Deflation of
// lower-order components uses each node's own converged estimates.
// Holds a reference to the shards, which must outlive the instance.
class SeqDistPm {
 public:
  SeqDistPm(const std::vector<DataShard>& shards, const MixingMatrix& mixing,
            int K, int t_consensus, std::uint64_t seed);

  // One power step for the active component. Charges t_consensus units.
  void outer_step();
  // Freezes the active component's estimates and moves to the next one.
  void advance_component();

  int active_component() const { return active_k_; }
  bool finished() const { return active_k_ >= K_; }
  long comm_units() const { return comm_units_; }
  // Per-node d x K estimate: frozen components, then the live iterate,
  // then untouched init columns.
  std::vector<Matrix> estimates() const;

 private:
  const std::vector<DataShard>& shards_;
  Matrix w_;
  int K_;
  int t_consensus_;
  int d_;
  int M_;
  int active_k_ = 0;
  long comm_units_ = 0;
  Matrix init_;                        // shared d x K start
  std::vector<Matrix> frozen_;         // per node, d x K (filled up to active_k_)
  std::vector<Vector> iterate_;        // per node, current power iterate
  std::vector<Vector> rayleigh_;       // per node, per frozen component
  std::vector<double> last_rayleigh_;  // per node, for the active component
};

struct SeqDistPmResult {
  std::vector<Matrix> estimates;
  long comm_units = 0;
};

// Runs outer_iters power steps per component, K components in sequence.
SeqDistPmResult seq_dist_pm(const std::vector<DataShard>& shards,
                            const MixingMatrix& mixing, int K, int t_consensus,
                            int outer_iters, std::uint64_t seed);

// Centralized orthogonal iteration from a seeded orthonormal start:
// Z <- C Q, Q <- orthonormalize(Z), `iters` times.
Matrix centralized_oi(const Matrix& c, int K, int iters, std::uint64_t seed);

// Centralized auxiliary iterate (test-only; depends on true eigenvectors):
//   x <- x + alpha (C x - (x^T C x / |x|^2) x - sum_p q_p q_p^T C x)
// `eigvec_prefix` holds q_1..q_{k-1} as orthonormal columns.
Vector oracle_krasulina_step(const Matrix& c, const Matrix& eigvec_prefix,
                             const Vector& x, double alpha);

// Streaming reference: x <- x + alpha_t (C_t x - (x^T C_t x / |x|^2) x)
// with C_t = y y^T.
Vector streaming_krasulina_step(const Vector& y, const Vector& x,
                                double alpha_t);

}  // namespace fastpca

#endif
