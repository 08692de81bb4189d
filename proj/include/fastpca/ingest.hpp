#ifndef FASTPCA_INGEST_HPP
#define FASTPCA_INGEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fastpca/spectra.hpp"

namespace fastpca {

// Loaded dataset, one sample per column, pixels scaled to [0, 1].
struct RawDataset {
  std::string name;
  Matrix samples;  // d x N
  int d = 0;
  long n = 0;
};

// IDX container of unsigned bytes, rank 3 (big-endian magic 0x00000803).
// Pixels are flattened row-major to d = rows * cols and scaled by 1/255.
RawDataset load_idx(const std::string& images_path);

// CIFAR-10 binary batches (1 label byte + 3072 image bytes per record).
// Records are converted to grayscale luminance 0.299 R + 0.587 G + 0.114 B,
// giving d = 1024; labels are read and discarded.
RawDataset load_cifar_bin(const std::vector<std::string>& batch_paths);

// Plain CSV, one sample per row.
RawDataset load_csv(const std::string& path);

enum class ShardStrategy { uniform, contiguous };

// Removes the global mean, optionally permutes columns (uniform strategy),
// then splits into M near-equal shards normalized by the global N.
std::vector<DataShard> shard(const RawDataset& dataset, int M,
                             ShardStrategy strategy, std::uint64_t seed);

}  // namespace fastpca

#endif
