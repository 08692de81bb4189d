#include "fastpca/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fastpca/errors.hpp"

namespace fastpca {

double TraceRow::consensus_total() const {
  return consensus_per_k.size() ? consensus_per_k.sum() : 0.0;
}

double TraceRow::tracker_max() const {
  return tracker_per_k.size() ? tracker_per_k.maxCoeff() : 0.0;
}

double TraceRow::dist_max() const {
  return dist_per_k.size() ? dist_per_k.maxCoeff() : 0.0;
}

double angle_error(const std::vector<Matrix>& x_per_node,
                   const Spectrum& truth, int K) {
  if (x_per_node.empty()) throw ValidationError("angle_error: no nodes");
  if (K < 1 || K > truth.dim())
    throw ValidationError("angle_error: need 1 <= K <= d");

  double total = 0.0;
  for (std::size_t i = 0; i < x_per_node.size(); ++i) {
    const Matrix& x = x_per_node[i];
    if (x.cols() < K)
      throw ValidationError("angle_error: node estimate has fewer than K columns");
    for (int k = 0; k < K; ++k) {
      const double norm = x.col(k).norm();
      if (norm == 0.0)
        throw ValidationError("angle_error: zero column " + std::to_string(k) +
                              " at node " + std::to_string(i));
      const double cosine = x.col(k).dot(truth.eigenvectors.col(k)) / norm;
      total += 1.0 - cosine * cosine;
    }
  }
  const double e = total / (static_cast<double>(x_per_node.size()) * K);
  return std::clamp(e, 0.0, 1.0);
}

Vector consensus_error(const std::vector<Matrix>& x_per_node) {
  if (x_per_node.empty()) throw ValidationError("consensus_error: no nodes");
  const int k_count = static_cast<int>(x_per_node.front().cols());
  Matrix mean = Matrix::Zero(x_per_node.front().rows(), k_count);
  for (const auto& x : x_per_node) mean += x;
  mean /= static_cast<double>(x_per_node.size());

  Vector per_k = Vector::Zero(k_count);
  for (const auto& x : x_per_node)
    for (int k = 0; k < k_count; ++k)
      per_k(k) += (x.col(k) - mean.col(k)).squaredNorm();
  return per_k;
}

Vector consensus_error(const NetworkState& state) {
  std::vector<Matrix> xs;
  xs.reserve(state.nodes.size());
  for (const auto& node : state.nodes) xs.push_back(node.X);
  return consensus_error(xs);
}

double TrackerResidual::max_relative() const {
  double worst = 0.0;
  for (int k = 0; k < residual.size(); ++k)
    worst = std::max(worst, residual(k) / (1.0 + g_norm(k)));
  return worst;
}

TrackerResidual tracker_residual(const NetworkState& state,
                                 const std::vector<DataShard>& shards) {
  const int m = state.node_count();
  if (m == 0) throw ValidationError("tracker_residual: no nodes");
  if (static_cast<int>(shards.size()) != m)
    throw ValidationError("tracker_residual: shard count != node count");

  const int k_count = static_cast<int>(state.nodes.front().X.cols());
  Matrix s_bar = Matrix::Zero(state.nodes.front().X.rows(), k_count);
  Matrix g = s_bar;
  for (int i = 0; i < m; ++i) {
    s_bar += state.nodes[i].S;
    g += pseudo_gradient(shards[i].local_cov, state.nodes[i].X);
  }
  s_bar /= static_cast<double>(m);
  g /= static_cast<double>(m);

  TrackerResidual out;
  out.residual.resize(k_count);
  out.g_norm.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    out.residual(k) = (s_bar.col(k) - g.col(k)).norm();
    out.g_norm(k) = g.col(k).norm();
  }
  return out;
}

Vector eigen_coefficients(const Vector& x, const Spectrum& truth) {
  const double norm = x.norm();
  if (norm == 0.0) throw ValidationError("eigen_coefficients: zero vector");
  if (x.size() != truth.dim())
    throw ValidationError("eigen_coefficients: dimension mismatch");
  return truth.eigenvectors.transpose() * (x / norm);
}

DecayReport coefficient_decay_check(const std::vector<Vector>& z_series, int k,
                                    double alpha, const Spectrum& truth,
                                    double tol) {
  const int d = truth.dim();
  if (k < 1 || k > d)
    throw ValidationError("coefficient_decay_check: k out of range");
  const double lambda_1 = truth.eigenvalues(0);
  if (!(alpha > 0.0) || alpha >= 1.0 / lambda_1)
    throw ValidationError(
        "coefficient_decay_check: requires 0 < alpha < 1/lambda_1");
  if (z_series.size() < 2)
    throw ValidationError("coefficient_decay_check: series too short");
  if (z_series.front()(k - 1) == 0.0)
    throw ValidationError(
        "coefficient_decay_check: z_{k,k}^(0) = 0 violates the hypothesis");

  const double lambda_k = truth.eigenvalues(k - 1);
  DecayReport report;
  report.gamma_bound = std::pow(1.0 / (1.0 + alpha * lambda_k), 2);
  report.rho_bound =
      k < d ? std::pow((1.0 + alpha * truth.eigenvalues(k)) /
                           (1.0 + alpha * lambda_k),
                       2)
            : 0.0;

  constexpr double kFloor = 1e-24;
  auto tail_sums = [&](const Vector& z, double& lower, double& upper) {
    lower = 0.0;
    upper = 0.0;
    for (int l = 0; l < k - 1; ++l) lower += z(l) * z(l);
    for (int l = k; l < d; ++l) upper += z(l) * z(l);
  };

  for (std::size_t t = 0; t + 1 < z_series.size(); ++t) {
    double low0, up0, low1, up1;
    tail_sums(z_series[t], low0, up0);
    tail_sums(z_series[t + 1], low1, up1);
    const double zk0 = z_series[t](k - 1) * z_series[t](k - 1);
    const double zk1 = z_series[t + 1](k - 1) * z_series[t + 1](k - 1);
    if (zk0 == 0.0 || zk1 == 0.0) continue;

    // The contraction factors apply to the z_k-normalized sums.
    if (k > 1 && low1 >= kFloor && low0 > 0.0) {
      const double ratio = (low1 / zk1) / (low0 / zk0);
      report.worst_lower_ratio = std::max(report.worst_lower_ratio, ratio);
      ++report.lower_steps;
      if (ratio > report.gamma_bound * (1.0 + tol)) report.lower_ok = false;
    }
    if (k < d && up1 >= kFloor && up0 > 0.0) {
      const double ratio = (up1 / zk1) / (up0 / zk0);
      report.worst_upper_ratio = std::max(report.worst_upper_ratio, ratio);
      ++report.upper_steps;
      if (ratio > report.rho_bound * (1.0 + tol)) report.upper_ok = false;
    }
  }
  return report;
}

double step_size_bound(const std::vector<double>& eigenvalues, int K,
                       double beta) {
  const int d = static_cast<int>(eigenvalues.size());
  if (K < 1 || K >= d)
    throw ValidationError("step_size_bound: need 1 <= K < d");
  if (!(beta >= 0.0 && beta < 1.0))
    throw ValidationError("step_size_bound: beta must lie in [0, 1)");
  const double lambda_1 = eigenvalues[0];
  if (!(lambda_1 > 0.0))
    throw ValidationError("step_size_bound: lambda_1 must be positive");

  double min_gap = lambda_1;
  for (int k = 0; k < K; ++k) {
    const double gap = eigenvalues[k] - eigenvalues[k + 1];
    if (gap < 0.0)
      throw ValidationError("step_size_bound: eigenvalues not descending");
    if (gap == 0.0)
      throw ValidationError("step_size_bound: zero eigengap at k = " +
                            std::to_string(k + 1));
    min_gap = std::min(min_gap, gap);
  }
  const double mix = (1.0 - beta) / (9.0 * lambda_1);
  return min_gap / ((K + 5.0) * (K + 6.0)) * mix * mix;
}

double p_spectral_radius(double alpha, int k, double lambda_k,
                         double lambda_k1, double lambda_1, double beta) {
  if (k < 1) throw ValidationError("p_spectral_radius: k must be >= 1");
  if (!(lambda_1 > 0.0) || lambda_k < 0.0 || lambda_k1 < 0.0 ||
      lambda_k > lambda_1 || lambda_k1 > lambda_k)
    throw ValidationError("p_spectral_radius: need lambda_1 >= lambda_k >= "
                          "lambda_{k+1} >= 0 with lambda_1 > 0");
  if (!(beta >= 0.0 && beta < 1.0))
    throw ValidationError("p_spectral_radius: beta must lie in [0, 1)");
  if (alpha < 0.0) throw ValidationError("p_spectral_radius: negative alpha");

  const double lk = (k + 5.0) * lambda_1;
  const double half = (1.0 + beta) / 2.0;
  const double delta_k = (1.0 + alpha * lambda_k1) / (1.0 + alpha * lambda_k);

  Eigen::Matrix3d p;
  p << half + alpha * lk, lk * (2.0 + alpha * lk), alpha * lk * lk,
       alpha,             half,                    0.0,
       0.0,               alpha * lk,              delta_k;

  Eigen::EigenSolver<Eigen::Matrix3d> solver(p);
  if (solver.info() != Eigen::Success)
    throw DiagnosticError("p_spectral_radius: eigensolver failed");
  double radius = 0.0;
  for (int i = 0; i < 3; ++i)
    radius = std::max(radius, std::abs(solver.eigenvalues()(i)));
  return radius;
}

double lipschitz_probe(const Matrix& c_local, int k, const Matrix& x_prefix,
                       int n_trials, std::uint64_t seed) {
  if (k < 1) throw ValidationError("lipschitz_probe: k must be >= 1");
  if (x_prefix.cols() != k - 1)
    throw ValidationError("lipschitz_probe: prefix must have k-1 columns");
  if (n_trials < 1) throw ValidationError("lipschitz_probe: n_trials < 1");
  const int d = static_cast<int>(c_local.rows());

  Rng rng(seed);
  auto draw_probe = [&]() {
    Vector v(d);
    double norm;
    do {
      for (int i = 0; i < d; ++i) v(i) = rng.gaussian();
      norm = v.norm();
    } while (norm == 0.0);  // gaussian draws are never exactly zero in practice
    return Vector((rng.uniform(0.1, 10.0) / norm) * v);
  };

  double worst = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    Vector v1 = draw_probe();
    Vector v2 = draw_probe();
    while ((v1 - v2).norm() < 1e-12) v2 = draw_probe();
    const double ratio =
        (pseudo_gradient_column(c_local, v1, x_prefix) -
         pseudo_gradient_column(c_local, v2, x_prefix))
            .norm() /
        (v1 - v2).norm();
    worst = std::max(worst, ratio);
  }
  return worst;
}

RateReport rate_fit(const std::vector<double>& error_series) {
  constexpr double kNoiseFloor = 1e-12;
  const int n = static_cast<int>(error_series.size());
  for (double e : error_series)
    if (!std::isfinite(e) || e < 0.0)
      throw ValidationError("rate_fit: series must be finite and non-negative");

  int pre_floor = n;
  for (int i = 0; i < n; ++i)
    if (error_series[i] < kNoiseFloor) {
      pre_floor = i;
      break;
    }
  if (pre_floor < 20)
    throw ValidationError("rate_fit: need at least 20 points above the noise floor");

  const int lo = pre_floor / 10;
  const int hi = std::min(9 * n / 10, pre_floor);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int count = hi - lo;
  for (int i = lo; i < hi; ++i) {
    const double x = static_cast<double>(i);
    const double y = std::log(error_series[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;

  double ss_res = 0, ss_tot = 0;
  const double y_mean = sy / count;
  for (int i = lo; i < hi; ++i) {
    const double y = std::log(error_series[i]);
    const double fit = slope * i + intercept;
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - y_mean) * (y - y_mean);
  }

  RateReport report;
  report.rho_hat = std::exp(slope);
  // Constant series: least squares always has ss_res <= ss_tot, so a
  // degenerate spread in log space means a perfect fit.
  report.r_squared = ss_tot < 1e-18 ? 1.0 : 1.0 - ss_res / ss_tot;
  report.window_begin = lo;
  report.window_end = hi;
  return report;
}

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream out;
  out << "t,comm_units,angle_error,consensus_err,tracker_resid,dist_opt\n";
  for (const auto& row : trace.rows) {
    out << row.t << ',' << row.comm_units << ','
        << format_g17(row.angle_error) << ','
        << format_g17(row.consensus_total()) << ','
        << format_g17(row.tracker_max()) << ','
        << format_g17(row.dist_max()) << '\n';
  }
  return out.str();
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("write_trace_csv: cannot open " + path);
  out << trace_to_csv(trace);
}

}  // namespace fastpca
