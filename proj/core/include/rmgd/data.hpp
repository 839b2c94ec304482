#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rmgd/tensor.hpp"

namespace rmgd::data {

/// Immutable train / validation / test splits sharing a feature width.
struct Dataset {
  Batch train;
  Batch validation;
  Batch test;
  std::int64_t num_classes = 0;

  std::size_t m() const noexcept { return train.size(); }
  std::size_t input_dim() const noexcept { return train.features.cols; }
};

void validate(const Dataset& dataset);

/// ceil(m / b): optimizer steps in one epoch, counting the partial last batch.
std::int64_t iterations_per_epoch(std::int64_t m, std::int64_t b);

/// A shuffled visiting order of the m training samples for one epoch.
struct BatchPlan {
  std::uint64_t epoch_seed = 0;
  std::vector<std::size_t> order;
};

/// Fisher-Yates permutation of [0, m) driven by `epoch_seed`.
BatchPlan make_plan(std::size_t m, std::uint64_t epoch_seed);

/// Consecutive windows of the plan's order: ceil(m/b) spans, all of length b
/// except a final partial one of length m mod b when nonzero.
std::vector<std::span<const std::size_t>> batch_indices(const BatchPlan& plan, std::int64_t b);

/// Copies the selected rows of `source` into a new batch.
Batch gather(const Batch& source, std::span<const std::size_t> indices);

/// Materialized form of batch_indices + gather over the training split.
std::vector<Batch> batches(const Dataset& dataset, std::int64_t b, const BatchPlan& plan);

/// Gaussian blobs: `classes` means drawn from N(0, I) in `dim` dimensions,
/// `per_class` samples of mean + spread * N(0, I) each, shuffled and split
/// 80 / 10 / 10 into train / validation / test.
Dataset make_blobs(std::int64_t classes, std::int64_t per_class, std::int64_t dim, double spread,
                   std::uint64_t seed);

/// IDX tensor of unsigned bytes (type code 0x08).
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::uint32_t magic() const noexcept { return 0x00000800u | static_cast<std::uint32_t>(dims.size()); }
  friend bool operator==(const IdxTensor&, const IdxTensor&) = default;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses big-endian IDX bytes. Throws ParseError with the failing offset on
/// a bad magic number or a truncated header or payload.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
IdxTensor read_idx(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor);
void write_idx(const std::filesystem::path& path, const IdxTensor& tensor);

/// n x (rows * cols) matrix with pixels scaled by 1/255. Requires a 3-d tensor.
Matrix idx_images(const IdxTensor& tensor);
/// Requires a 1-d tensor.
std::vector<int> idx_labels(const IdxTensor& tensor);

struct IdxPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

/// MNIST-style dataset: the first `validation_count` training records become
/// the validation split. `limit` truncates the training file first.
Dataset load_idx_dataset(const IdxPaths& paths, std::size_t validation_count,
                         std::optional<std::size_t> limit = std::nullopt);

/// CSV with header x0,...,x{d-1},label and one sample per line.
void write_csv(std::ostream& out, const Batch& split);

}  // namespace rmgd::data
