#include "fastpca/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "fastpca/errors.hpp"

namespace fastpca {

Spectrum eig_sym(const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() < 1)
    throw ValidationError("eig_sym: input must be square, d >= 1");
  const double scale = std::max(1.0, c.norm());
  if ((c - c.transpose()).norm() > 1e-10 * scale)
    throw ValidationError("eig_sym: input is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (c + c.transpose()));
  if (solver.info() != Eigen::Success)
    throw DiagnosticError("eig_sym: eigensolver failed to converge");

  const int d = static_cast<int>(c.rows());
  Spectrum s;
  s.eigenvalues.resize(d);
  s.eigenvectors.resize(d, d);
  // Eigen returns ascending order; flip to descending.
  for (int l = 0; l < d; ++l) {
    s.eigenvalues(l) = solver.eigenvalues()(d - 1 - l);
    s.eigenvectors.col(l) = solver.eigenvectors().col(d - 1 - l);
  }
  // PSD inputs can round to tiny negatives.
  const double clamp_tol = 1e-12 * std::max(1.0, std::abs(s.eigenvalues(0)));
  for (int l = 0; l < d; ++l)
    if (s.eigenvalues(l) < 0.0 && s.eigenvalues(l) > -clamp_tol)
      s.eigenvalues(l) = 0.0;
  return s;
}

std::vector<double> make_spectrum(const SyntheticSpec& spec) {
  if (spec.d < 2 || spec.K < 1 || spec.K >= spec.d)
    throw ValidationError("make_spectrum: need 1 <= K < d");
  if (!(spec.gap_ratio > 0.0 && spec.gap_ratio < 1.0))
    throw ValidationError("make_spectrum: gap_ratio must lie in (0, 1)");
  if (!(spec.top_value > 0.0))
    throw ValidationError("make_spectrum: top_value must be positive");

  const double step = std::max(spec.gap_ratio, 0.9);
  std::vector<double> lam(spec.d);
  lam[0] = spec.top_value;
  for (int l = 1; l < spec.K; ++l)
    lam[l] = spec.mode == SpectrumMode::repeated ? lam[l - 1]
                                                 : lam[l - 1] * step;
  lam[spec.K] = lam[spec.K - 1] * spec.gap_ratio;  // the controlled gap
  for (int l = spec.K + 1; l < spec.d; ++l) lam[l] = lam[l - 1] * step;
  return lam;
}

Matrix synth_gaussian(const std::vector<double>& eigenvalues,
                      std::uint64_t rotation_seed, int n_samples,
                      std::uint64_t sample_seed) {
  const int d = static_cast<int>(eigenvalues.size());
  if (d < 1) throw ValidationError("synth_gaussian: empty eigenvalue list");
  if (n_samples < 1)
    throw ValidationError("synth_gaussian: need at least one sample");
  for (double v : eigenvalues)
    if (v < 0.0 || !std::isfinite(v))
      throw ValidationError("synth_gaussian: eigenvalues must be finite and >= 0");

  Rng rot_rng(rotation_seed);
  const Matrix q = random_orthonormal(d, d, rot_rng);
  Vector sqrt_lam(d);
  for (int l = 0; l < d; ++l) sqrt_lam(l) = std::sqrt(eigenvalues[l]);

  Rng sample_rng(sample_seed);
  Matrix g = gaussian_matrix(d, n_samples, sample_rng);
  g.array().colwise() *= sqrt_lam.array();
  return q * g;
}

std::vector<ColumnRange> even_partition(int n_columns, int n_parts) {
  if (n_parts < 1 || n_parts > n_columns)
    throw ValidationError("even_partition: need 1 <= parts <= columns");
  std::vector<ColumnRange> out;
  out.reserve(n_parts);
  const int base = n_columns / n_parts;
  const int extra = n_columns % n_parts;
  int begin = 0;
  for (int i = 0; i < n_parts; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

std::vector<DataShard> covariance_shards(const Matrix& samples,
                                         const std::vector<ColumnRange>& partition) {
  const int n = static_cast<int>(samples.cols());
  if (partition.empty())
    throw ValidationError("covariance_shards: empty partition");

  auto sorted = partition;
  std::sort(sorted.begin(), sorted.end());
  int cursor = 0;
  for (const auto& [begin, end] : sorted) {
    if (begin >= end)
      throw ValidationError("covariance_shards: empty partition element");
    if (begin != cursor)
      throw ValidationError("covariance_shards: partition has gaps or overlaps");
    cursor = end;
  }
  if (cursor != n)
    throw ValidationError("covariance_shards: partition does not cover all columns");

  // Global mean first: every shard sees the same centered data.
  const Vector mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - mean;

  std::vector<DataShard> shards;
  shards.reserve(partition.size());
  int node = 0;
  for (const auto& [begin, end] : partition) {
    DataShard s;
    s.node_id = node++;
    s.samples = centered.middleCols(begin, end - begin);
    // Normalized by the global N so that sum_i C_i is the sample covariance.
    s.local_cov = (s.samples * s.samples.transpose()) / static_cast<double>(n);
    shards.push_back(std::move(s));
  }
  return shards;
}

Matrix global_covariance(const std::vector<DataShard>& shards) {
  if (shards.empty())
    throw ValidationError("global_covariance: no shards");
  Matrix c = shards.front().local_cov;
  for (std::size_t i = 1; i < shards.size(); ++i) c += shards[i].local_cov;
  return c;
}

}  // namespace fastpca
