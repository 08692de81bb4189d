#ifndef FASTPCA_ANALYSIS_HPP
#define FASTPCA_ANALYSIS_HPP

#include <string>
#include <utility>
#include <vector>

#include "fastpca/consensus_pca.hpp"
#include "fastpca/spectra.hpp"

namespace fastpca {

// One recorded iteration. The per-k vectors may be empty when a quantity
// does not exist for an algorithm (no tracker, single node); aggregates
// then report zero.
struct TraceRow {
  long t = 0;
  long comm_units = 0;
  double angle_error = 0.0;
  Vector consensus_per_k;  // sum_i |x_{i,k} - xbar_k|^2
  Vector tracker_per_k;    // |sbar_k - g_k| / (1 + |g_k|)
  Vector dist_per_k;       // sin angle(xbar_k, q_k)

  double consensus_total() const;
  double tracker_max() const;
  double dist_max() const;
};

struct Trace {
  std::vector<TraceRow> rows;
  // Ordered key/value pairs echoed into the run metadata file.
  std::vector<std::pair<std::string, std::string>> metadata;
};

// Mean angle metric:
//   E = (1/MK) sum_i sum_k (1 - (x_{i,k}^T q_k / |x_{i,k}|)^2)
// Invariant to per-column scaling and sign flips of either argument.
double angle_error(const std::vector<Matrix>& x_per_node,
                   const Spectrum& truth, int K);

// Per-k consensus error sum_i |x_{i,k} - xbar_k|^2 (zero iff all nodes agree).
Vector consensus_error(const std::vector<Matrix>& x_per_node);
Vector consensus_error(const NetworkState& state);

struct TrackerResidual {
  Vector residual;  // per k: |sbar_k - g_k|
  Vector g_norm;    // per k: |g_k|

  double max_relative() const;
};

// Deviation of the average tracker from the average pseudo-gradient,
// which the tracking identity keeps at zero for a correct implementation.
TrackerResidual tracker_residual(const NetworkState& state,
                                 const std::vector<DataShard>& shards);

// Expansion coefficients z_l = q_l^T (x / |x|); sums of squares are 1.
Vector eigen_coefficients(const Vector& x, const Spectrum& truth);

// Per-step contraction check of the eigen-coefficient sums for one
// component of the centralized auxiliary recursion (k is 1-based). The
// checked ratios are the z_k-normalized sums sum_l (z_l / z_k)^2, whose
// one-step decay factors are bounded by
//   gamma_k = (1 / (1 + alpha lambda_k))^2          (l < k)
//   rho_k   = ((1 + alpha lambda_{k+1}) / (1 + alpha lambda_k))^2  (l > k)
struct DecayReport {
  bool lower_ok = true;
  bool upper_ok = true;
  double worst_lower_ratio = 0.0;
  double worst_upper_ratio = 0.0;
  double gamma_bound = 0.0;
  double rho_bound = 0.0;
  int lower_steps = 0;  // steps actually checked (above the 1e-24 floor)
  int upper_steps = 0;
};

DecayReport coefficient_decay_check(const std::vector<Vector>& z_series, int k,
                                    double alpha, const Spectrum& truth,
                                    double tol = 0.05);

// Theoretical step-size bound that guarantees linear convergence:
//   alpha_max = min_k (lambda_k - lambda_{k+1}) / ((K+5)(K+6))
//               * ((1 - beta) / (9 lambda_1))^2
// For K = 1 the denominator is 42.
double step_size_bound(const std::vector<double>& eigenvalues, int K,
                       double beta);

// Spectral radius of the 3x3 error-system matrix
//   [ (1+beta)/2 + a L_k   L_k (2 + a L_k)   a L_k^2 ]
//   [ a                    (1+beta)/2        0       ]
//   [ 0                    a L_k             delta_k ]
// with L_k = (k+5) lambda_1 and delta_k = (1 + a lambda_{k+1}) / (1 + a lambda_k).
double p_spectral_radius(double alpha, int k, double lambda_k,
                         double lambda_k1, double lambda_1, double beta);

// Max observed |h(v1) - h(v2)| / |v1 - v2| over random probe pairs with
// norms in [0.1, 10], for the fixed-prefix pseudo-gradient (k is 1-based,
// x_prefix carries k-1 columns). Bounded by (k+5) lambda_1 when
// |C_i| <= lambda_1.
double lipschitz_probe(const Matrix& c_local, int k, const Matrix& x_prefix,
                       int n_trials, std::uint64_t seed);

// Least-squares line on (t, log e_t) over the mid-range window of the
// series, excluding the plateau below the 1e-12 noise floor.
struct RateReport {
  double rho_hat = 1.0;
  double r_squared = 0.0;
  int window_begin = 0;
  int window_end = 0;  // half-open
};

RateReport rate_fit(const std::vector<double>& error_series);

// CSV with header t,comm_units,angle_error,consensus_err,tracker_resid,dist_opt
// and 17-significant-digit floats.
std::string trace_to_csv(const Trace& trace);
void write_trace_csv(const Trace& trace, const std::string& path);

}  // namespace fastpca

#endif
