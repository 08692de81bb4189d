#include "fastpca/ingest.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fastpca/errors.hpp"

namespace fastpca {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& bytes,
                          std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size())
    throw FormatError(path + ": truncated header at byte offset " +
                      std::to_string(offset));
  return (std::uint32_t(bytes[offset]) << 24) |
         (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) |
         std::uint32_t(bytes[offset + 3]);
}

}  // namespace

RawDataset load_idx(const std::string& images_path) {
  const auto bytes = read_file(images_path);
  constexpr std::uint32_t kMagicU8Rank3 = 0x00000803;
  const std::uint32_t magic = read_u32_be(bytes, 0, images_path);
  if (magic != kMagicU8Rank3)
    throw FormatError(images_path + ": bad IDX magic 0x" +
                      [&] {
                        std::ostringstream hex;
                        hex << std::hex << magic;
                        return hex.str();
                      }() +
                      " at byte offset 0 (expected 0x00000803)");
  const std::uint32_t n = read_u32_be(bytes, 4, images_path);
  const std::uint32_t rows = read_u32_be(bytes, 8, images_path);
  const std::uint32_t cols = read_u32_be(bytes, 12, images_path);
  const std::size_t expected = std::size_t(16) + std::size_t(n) * rows * cols;
  if (bytes.size() < expected)
    throw FormatError(images_path + ": truncated payload, expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()) +
                      " (short at byte offset " + std::to_string(bytes.size()) +
                      ")");
  if (n == 0 || rows == 0 || cols == 0)
    throw FormatError(images_path + ": zero-sized dimension in header");

  const int d = static_cast<int>(rows * cols);
  RawDataset ds;
  ds.name = images_path;
  ds.d = d;
  ds.n = static_cast<long>(n);
  ds.samples.resize(d, n);
  std::size_t offset = 16;
  for (std::uint32_t t = 0; t < n; ++t)
    for (int px = 0; px < d; ++px)  // row-major within each image
      ds.samples(px, t) = bytes[offset++] / 255.0;
  return ds;
}

RawDataset load_cifar_bin(const std::vector<std::string>& batch_paths) {
  if (batch_paths.empty())
    throw ValidationError("load_cifar_bin: no batch files given");

  constexpr int kRecordBytes = 3073;  // 1 label + 3 x 1024 pixels
  constexpr int kPlane = 1024;

  long total = 0;
  std::vector<std::vector<unsigned char>> files;
  for (const auto& path : batch_paths) {
    auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kRecordBytes != 0)
      throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                        " is not a positive multiple of 3073");
    total += static_cast<long>(bytes.size() / kRecordBytes);
    files.push_back(std::move(bytes));
  }

  RawDataset ds;
  ds.name = batch_paths.front();
  ds.d = kPlane;
  ds.n = total;
  ds.samples.resize(kPlane, total);
  long col = 0;
  for (const auto& bytes : files) {
    const long records = static_cast<long>(bytes.size() / kRecordBytes);
    for (long r = 0; r < records; ++r, ++col) {
      const std::size_t base = std::size_t(r) * kRecordBytes + 1;  // skip label
      for (int px = 0; px < kPlane; ++px) {
        const double red = bytes[base + px];
        const double green = bytes[base + kPlane + px];
        const double blue = bytes[base + 2 * kPlane + px];
        ds.samples(px, col) =
            (0.299 * red + 0.587 * green + 0.114 * blue) / 255.0;
      }
    }
  }
  return ds;
}

RawDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path + ": line " + std::to_string(line_no) +
                          ": cannot parse '" + cell + "' as a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": ragged row (" + std::to_string(row.size()) +
                        " fields, expected " +
                        std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": no samples");

  RawDataset ds;
  ds.name = path;
  ds.d = static_cast<int>(rows.front().size());
  ds.n = static_cast<long>(rows.size());
  ds.samples.resize(ds.d, ds.n);
  for (long t = 0; t < ds.n; ++t)
    for (int i = 0; i < ds.d; ++i) ds.samples(i, t) = rows[t][i];
  return ds;
}

std::vector<DataShard> shard(const RawDataset& dataset, int M,
                             ShardStrategy strategy, std::uint64_t seed) {
  if (M < 1 || static_cast<long>(M) > dataset.n)
    throw ValidationError("shard: need 1 <= M <= N");

  Matrix columns = dataset.samples;
  if (strategy == ShardStrategy::uniform) {
    // Seeded Fisher-Yates permutation of the sample columns.
    std::vector<long> perm(dataset.n);
    std::iota(perm.begin(), perm.end(), 0L);
    Rng rng(seed);
    for (long i = dataset.n - 1; i > 0; --i) {
      const long j = static_cast<long>(
          rng.next_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[i], perm[j]);
    }
    for (long t = 0; t < dataset.n; ++t)
      columns.col(t) = dataset.samples.col(perm[t]);
  }

  return covariance_shards(columns,
                           even_partition(static_cast<int>(dataset.n), M));
}

}  // namespace fastpca
