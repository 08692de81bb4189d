#include "fastpca/consensus_pca.hpp"

#include <cmath>
#include <string>

#include "fastpca/errors.hpp"

namespace fastpca {

namespace {

constexpr double kZeroColumnGuard = 1e-30;

void check_state_shapes(const NetworkState& state,
                        const std::vector<DataShard>& shards,
                        const Matrix& w) {
  const int m = state.node_count();
  if (m == 0) throw ValidationError("network state: no nodes");
  if (static_cast<int>(shards.size()) != m)
    throw ValidationError("network state: shard count != node count");
  if (w.rows() != m || w.cols() != m)
    throw ValidationError("network state: W dimension != node count");
  const auto rows = state.nodes.front().X.rows();
  const auto cols = state.nodes.front().X.cols();
  for (const auto& node : state.nodes)
    if (node.X.rows() != rows || node.X.cols() != cols)
      throw ValidationError("network state: nodes disagree on d or K");
}

void check_column_norms(const Matrix& x, int node_id) {
  for (int k = 0; k < x.cols(); ++k)
    if (x.col(k).norm() < kZeroColumnGuard)
      throw DiagnosticError("degenerate trajectory: column " +
                            std::to_string(k) + " at node " +
                            std::to_string(node_id) +
                            " collapsed below 1e-30");
}

}  // namespace

Matrix pseudo_gradient(const Matrix& c_local, const Matrix& x) {
  if (c_local.rows() != c_local.cols() || c_local.rows() != x.rows())
    throw ValidationError("pseudo_gradient: C must be square and match X");
  const int k_count = static_cast<int>(x.cols());
  for (int k = 0; k < k_count; ++k)
    if (x.col(k).squaredNorm() == 0.0)
      throw ValidationError("pseudo_gradient: column " + std::to_string(k) +
                            " of X is zero");

  const Matrix cx = c_local * x;  // column k is C x_k
  Matrix h(x.rows(), k_count);
  for (int k = 0; k < k_count; ++k) {
    const double rayleigh = x.col(k).dot(cx.col(k)) / x.col(k).squaredNorm();
    h.col(k) = cx.col(k) - rayleigh * x.col(k);
    for (int p = 0; p < k; ++p)
      h.col(k) -=
          (x.col(p).dot(cx.col(k)) / x.col(p).squaredNorm()) * x.col(p);
  }
  return h;
}

Vector pseudo_gradient_column(const Matrix& c_local, const Vector& v,
                              const Matrix& prefix) {
  if (c_local.rows() != c_local.cols() || c_local.rows() != v.size() ||
      (prefix.cols() > 0 && prefix.rows() != v.size()))
    throw ValidationError("pseudo_gradient_column: dimension mismatch");
  if (v.squaredNorm() == 0.0)
    throw ValidationError("pseudo_gradient_column: zero vector");
  const Vector cv = c_local * v;
  Vector h = cv - (v.dot(cv) / v.squaredNorm()) * v;
  for (int p = 0; p < prefix.cols(); ++p)
    h -= (prefix.col(p).dot(cv) / prefix.col(p).squaredNorm()) * prefix.col(p);
  return h;
}

NetworkState fastpca_init(const std::vector<DataShard>& shards, int d, int K,
                          std::uint64_t seed) {
  if (shards.empty()) throw ValidationError("fastpca_init: no shards");
  if (K < 1 || K > d) throw ValidationError("fastpca_init: need 1 <= K <= d");
  for (const auto& s : shards)
    if (s.local_cov.rows() != d || s.local_cov.cols() != d)
      throw ValidationError("fastpca_init: shard covariance is not d x d");

  Rng rng(seed);
  const Matrix x_init = random_orthonormal(d, K, rng);

  NetworkState state;
  state.nodes.reserve(shards.size());
  for (const auto& s : shards)
    state.nodes.push_back({x_init, pseudo_gradient(s.local_cov, x_init)});
  return state;
}

NetworkState fastpca_step(const NetworkState& state, const MixingMatrix& mixing,
                          double alpha, const std::vector<DataShard>& shards,
                          Accounting accounting) {
  if (!(alpha > 0.0)) throw ValidationError("fastpca_step: alpha must be > 0");
  check_state_shapes(state, shards, mixing.W);
  const int m = state.node_count();

  NetworkState next;
  next.nodes.resize(m);
  next.iteration = state.iteration + 1;
  next.comm_units =
      state.comm_units + (accounting == Accounting::payload ? 2 : 1);

  // Subspace update, all right-hand sides from the previous round:
  // X_i <- 1/2 X_i + sum_j (w_ij/2) X_j + alpha S_i
  for (int i = 0; i < m; ++i) {
    Matrix x = 0.5 * state.nodes[i].X + alpha * state.nodes[i].S;
    for (int j = 0; j < m; ++j) {
      const double w = mixing.W(i, j);
      if (w != 0.0) x.noalias() += (0.5 * w) * state.nodes[j].X;
    }
    check_column_norms(x, i);
    next.nodes[i].X = std::move(x);
  }

  // Tracker update:
  // S_i <- 1/2 S_i + sum_j (w_ij/2) S_j + h_i(X_i^new) - h_i(X_i^old)
  for (int i = 0; i < m; ++i) {
    Matrix s = 0.5 * state.nodes[i].S;
    for (int j = 0; j < m; ++j) {
      const double w = mixing.W(i, j);
      if (w != 0.0) s.noalias() += (0.5 * w) * state.nodes[j].S;
    }
    s += pseudo_gradient(shards[i].local_cov, next.nodes[i].X) -
         pseudo_gradient(shards[i].local_cov, state.nodes[i].X);
    next.nodes[i].S = std::move(s);
  }
  return next;
}

Matrix gha_update(const Matrix& c_local, const Matrix& x) {
  const Matrix cx = c_local * x;
  Matrix xtcx = x.transpose() * cx;
  // Keep the upper triangle (with diagonal): column k is deflated against
  // components p <= k only.
  Matrix ut = xtcx.triangularView<Eigen::Upper>();
  return cx - x * ut;
}

NetworkState dsa_step(const NetworkState& state, const MixingMatrix& mixing,
                      double alpha, const std::vector<DataShard>& shards) {
  if (!(alpha > 0.0)) throw ValidationError("dsa_step: alpha must be > 0");
  check_state_shapes(state, shards, mixing.W);
  const int m = state.node_count();

  NetworkState next;
  next.nodes.resize(m);
  next.iteration = state.iteration + 1;
  next.comm_units = state.comm_units + 1;

  for (int i = 0; i < m; ++i) {
    Matrix x = alpha * gha_update(shards[i].local_cov, state.nodes[i].X);
    for (int j = 0; j < m; ++j) {
      const double w = mixing.W(i, j);
      if (w != 0.0) x.noalias() += w * state.nodes[j].X;
    }
    check_column_norms(x, i);
    next.nodes[i].X = std::move(x);
    next.nodes[i].S = state.nodes[i].S;  // unused by DSA
  }
  return next;
}

SeqDistPm::SeqDistPm(const std::vector<DataShard>& shards,
                     const MixingMatrix& mixing, int K, int t_consensus,
                     std::uint64_t seed)
    : shards_(shards),
      w_(mixing.W),
      K_(K),
      t_consensus_(t_consensus),
      d_(shards.empty() ? 0 : static_cast<int>(shards.front().local_cov.rows())),
      M_(static_cast<int>(shards.size())) {
  if (shards.empty()) throw ValidationError("seq_dist_pm: no shards");
  if (K < 1 || K > d_) throw ValidationError("seq_dist_pm: need 1 <= K <= d");
  if (t_consensus < 1)
    throw ValidationError("seq_dist_pm: t_consensus must be >= 1");
  if (w_.rows() != M_ || w_.cols() != M_)
    throw ValidationError("seq_dist_pm: W dimension != node count");

  Rng rng(seed);
  init_ = random_orthonormal(d_, K_, rng);
  frozen_.assign(M_, init_);
  iterate_.assign(M_, init_.col(0));
  rayleigh_.assign(M_, Vector::Zero(K_));
  last_rayleigh_.assign(M_, 0.0);
}

void SeqDistPm::outer_step() {
  if (finished()) throw ValidationError("seq_dist_pm: already finished");

  // Local deflated matrix-vector products. Each node deflates with its
  // own converged estimates; the lambda-hats are Rayleigh quotients of the
  // network-averaged operator, so the deflations sum to the global one.
  Matrix products(d_, M_);
  for (int i = 0; i < M_; ++i) {
    Vector u = shards_[i].local_cov * iterate_[i];
    for (int p = 0; p < active_k_; ++p) {
      const auto q = frozen_[i].col(p);
      u -= rayleigh_[i](p) * q * q.dot(iterate_[i]);
    }
    products.col(i) = u;
  }

  // t_consensus rounds of W-averaging across nodes.
  for (int round = 0; round < t_consensus_; ++round)
    products = products * w_.transpose();
  comm_units_ += t_consensus_;

  for (int i = 0; i < M_; ++i) {
    const Vector v = products.col(i);
    const double norm = v.norm();
    if (norm < kZeroColumnGuard)
      throw DiagnosticError("seq_dist_pm: power iterate collapsed at node " +
                            std::to_string(i));
    last_rayleigh_[i] =
        iterate_[i].dot(v) / iterate_[i].squaredNorm();
    iterate_[i] = v / norm;
  }
}

void SeqDistPm::advance_component() {
  if (finished()) throw ValidationError("seq_dist_pm: already finished");
  for (int i = 0; i < M_; ++i) {
    frozen_[i].col(active_k_) = iterate_[i];
    rayleigh_[i](active_k_) = last_rayleigh_[i];
  }
  ++active_k_;
  if (!finished())
    for (int i = 0; i < M_; ++i) iterate_[i] = init_.col(active_k_);
}

std::vector<Matrix> SeqDistPm::estimates() const {
  std::vector<Matrix> out = frozen_;
  if (!finished())
    for (int i = 0; i < M_; ++i) out[i].col(active_k_) = iterate_[i];
  return out;
}

SeqDistPmResult seq_dist_pm(const std::vector<DataShard>& shards,
                            const MixingMatrix& mixing, int K, int t_consensus,
                            int outer_iters, std::uint64_t seed) {
  if (outer_iters < 1)
    throw ValidationError("seq_dist_pm: outer_iters must be >= 1");
  SeqDistPm pm(shards, mixing, K, t_consensus, seed);
  while (!pm.finished()) {
    for (int step = 0; step < outer_iters; ++step) pm.outer_step();
    pm.advance_component();
  }
  return {pm.estimates(), pm.comm_units()};
}

Matrix centralized_oi(const Matrix& c, int K, int iters, std::uint64_t seed) {
  if (c.rows() != c.cols()) throw ValidationError("centralized_oi: C not square");
  if (K < 1 || K > c.rows())
    throw ValidationError("centralized_oi: need 1 <= K <= d");
  if (iters < 0) throw ValidationError("centralized_oi: negative iters");

  Rng rng(seed);
  Matrix q = random_orthonormal(static_cast<int>(c.rows()), K, rng);
  for (int t = 0; t < iters; ++t) q = orthonormalize(c * q);
  return q;
}

Vector oracle_krasulina_step(const Matrix& c, const Matrix& eigvec_prefix,
                             const Vector& x, double alpha) {
  if (c.rows() != c.cols() || c.rows() != x.size() ||
      (eigvec_prefix.cols() > 0 && eigvec_prefix.rows() != x.size()))
    throw ValidationError("oracle_krasulina_step: dimension mismatch");
  if (x.squaredNorm() == 0.0)
    throw ValidationError("oracle_krasulina_step: zero iterate");
  if (eigvec_prefix.cols() > 0) {
    const Matrix gram = eigvec_prefix.transpose() * eigvec_prefix;
    if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > 1e-8)
      throw ValidationError("oracle_krasulina_step: prefix not orthonormal");
  }
  const Vector cx = c * x;
  Vector update = cx - (x.dot(cx) / x.squaredNorm()) * x;
  for (int p = 0; p < eigvec_prefix.cols(); ++p) {
    const auto q = eigvec_prefix.col(p);
    update -= q * q.dot(cx);
  }
  return x + alpha * update;
}

Vector streaming_krasulina_step(const Vector& y, const Vector& x,
                                double alpha_t) {
  if (x.squaredNorm() == 0.0)
    throw ValidationError("streaming_krasulina_step: zero iterate");
  const double yx = y.dot(x);
  // C_t x with C_t = y y^T is y (y^T x); the Rayleigh term follows.
  const Vector ct_x = y * yx;
  return x + alpha_t * (ct_x - (yx * yx / x.squaredNorm()) * x);
}

}  // namespace fastpca
