#ifndef FASTPCA_SPECTRA_HPP
#define FASTPCA_SPECTRA_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "fastpca/linalg.hpp"

namespace fastpca {

// Ground-truth eigendecomposition of a covariance matrix. Column l of
// `eigenvectors` pairs with `eigenvalues[l]`; eigenvalues are sorted in
// descending order. This is the oracle every error metric is measured
// against; it is never consumed inside the distributed iterations.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

enum class SpectrumMode { distinct, repeated };

// Recipe for a synthetic covariance spectrum with a controlled eigengap
// gap_ratio = lambda_{K+1} / lambda_K.
struct SyntheticSpec {
  int d = 0;
  int K = 0;
  double gap_ratio = 0.0;
  SpectrumMode mode = SpectrumMode::distinct;
  double top_value = 1.0;
  std::uint64_t seed = 0;
};

// One node's block of samples together with its local covariance
// contribution C_i. Shards are normalized by the GLOBAL sample count so
// that sum_i C_i equals the global sample covariance exactly.
struct DataShard {
  int node_id = 0;
  Matrix samples;    // d x N_i
  Matrix local_cov;  // d x d
};

// Dense symmetric eigendecomposition, eigenvalues sorted descending.
// Input must be symmetric to 1e-10 relative. Eigenvalues of PSD inputs
// that round to tiny negatives are clamped to zero.
Spectrum eig_sym(const Matrix& c);

// Eigenvalue list with lambda_{K+1}/lambda_K == gap_ratio. Distinct mode
// spaces lambda_1..lambda_K geometrically with per-step ratio
// max(gap_ratio, 0.9); repeated mode sets them all equal. The tail decays
// geometrically with the same per-step ratio.
std::vector<double> make_spectrum(const SyntheticSpec& spec);

// d x n zero-mean gaussian samples with covariance Q diag(lambda) Q^T,
// where Q is a seeded random orthonormal matrix. Fully deterministic
// given both seeds.
Matrix synth_gaussian(const std::vector<double>& eigenvalues,
                      std::uint64_t rotation_seed, int n_samples,
                      std::uint64_t sample_seed);

// Half-open column range [begin, end).
using ColumnRange = std::pair<int, int>;

// Splits n columns into n_parts contiguous near-equal ranges.
std::vector<ColumnRange> even_partition(int n_columns, int n_parts);

// Centers the samples by the global mean, then cuts them into shards
// with C_i = (1/N) Y_i Y_i^T (N = total sample count). The partition must
// cover all columns exactly once, with no empty element.
std::vector<DataShard> covariance_shards(const Matrix& samples,
                                         const std::vector<ColumnRange>& partition);

// Sum of the shards' local covariances (the global sample covariance).
Matrix global_covariance(const std::vector<DataShard>& shards);

}  // namespace fastpca

#endif
