#include "rmgd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rmgd/error.hpp"
#include "rmgd/rng.hpp"

namespace rmgd::data {

namespace {

void validate_split(const Batch& split, const char* name, std::size_t dim, std::int64_t num_classes) {
  if (split.features.rows != split.labels.size() ||
      split.features.data.size() != split.features.rows * split.features.cols) {
    throw std::invalid_argument(std::string(name) + " split: feature rows do not match labels");
  }
  if (split.features.cols != dim) {
    throw std::invalid_argument(std::string(name) + " split: inconsistent feature width");
  }
  for (int y : split.labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument(std::string(name) + " split: label out of range");
  }
  for (double v : split.features.data) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " split: non-finite feature");
  }
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) | (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) | static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

Batch slice_rows(const Matrix& features, const std::vector<int>& labels, std::size_t begin, std::size_t end) {
  Batch b;
  b.features = Matrix(end - begin, features.cols);
  std::copy(features.data.begin() + static_cast<std::ptrdiff_t>(begin * features.cols),
            features.data.begin() + static_cast<std::ptrdiff_t>(end * features.cols), b.features.data.begin());
  b.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                  labels.begin() + static_cast<std::ptrdiff_t>(end));
  return b;
}

}  // namespace

void validate(const Dataset& dataset) {
  if (dataset.num_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (dataset.train.size() == 0) throw std::invalid_argument("training split is empty");
  if (dataset.validation.size() == 0) throw std::invalid_argument("validation split is empty");
  const std::size_t dim = dataset.input_dim();
  validate_split(dataset.train, "train", dim, dataset.num_classes);
  validate_split(dataset.validation, "validation", dim, dataset.num_classes);
  validate_split(dataset.test, "test", dim, dataset.num_classes);
}

std::int64_t iterations_per_epoch(std::int64_t m, std::int64_t b) {
  if (m < 1 || b < 1) throw std::invalid_argument("iterations_per_epoch needs m >= 1 and b >= 1");
  return (m + b - 1) / b;
}

BatchPlan make_plan(std::size_t m, std::uint64_t epoch_seed) {
  BatchPlan plan{.epoch_seed = epoch_seed, .order = std::vector<std::size_t>(m)};
  for (std::size_t i = 0; i < m; ++i) plan.order[i] = i;
  CounterRng rng(epoch_seed);
  for (std::size_t i = m; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(plan.order[i - 1], plan.order[j]);
  }
  return plan;
}

std::vector<std::span<const std::size_t>> batch_indices(const BatchPlan& plan, std::int64_t b) {
  if (b < 1) throw std::invalid_argument("batch size must be positive");
  const std::size_t m = plan.order.size();
  const auto width = static_cast<std::size_t>(b);
  std::vector<std::span<const std::size_t>> out;
  out.reserve(m == 0 ? 0 : static_cast<std::size_t>(iterations_per_epoch(static_cast<std::int64_t>(m), b)));
  for (std::size_t start = 0; start < m; start += width) {
    out.emplace_back(plan.order.data() + start, std::min(width, m - start));
  }
  return out;
}

Batch gather(const Batch& source, std::span<const std::size_t> indices) {
  const std::size_t cols = source.features.cols;
  Batch b;
  b.features = Matrix(indices.size(), cols);
  b.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = source.features.row(indices[r]);
    std::copy(src.begin(), src.end(), b.features.row(r).begin());
    b.labels[r] = source.labels[indices[r]];
  }
  return b;
}

std::vector<Batch> batches(const Dataset& dataset, std::int64_t b, const BatchPlan& plan) {
  if (plan.order.size() != dataset.m()) throw std::invalid_argument("batch plan does not cover the training split");
  std::vector<Batch> out;
  for (auto idx : batch_indices(plan, b)) out.push_back(gather(dataset.train, idx));
  return out;
}

Dataset make_blobs(std::int64_t classes, std::int64_t per_class, std::int64_t dim, double spread,
                   std::uint64_t seed) {
  if (classes < 2 || per_class < 1 || dim < 1) {
    throw std::invalid_argument("make_blobs needs classes >= 2, per_class >= 1, dim >= 1");
  }
  if (!(spread >= 0.0)) throw std::invalid_argument("make_blobs spread must be non-negative");

  const auto c = static_cast<std::size_t>(classes);
  const auto per = static_cast<std::size_t>(per_class);
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t n = c * per;

  CounterRng centers(derive_seed(seed, streams::kData, 0));
  Matrix means(c, d);
  for (double& v : means.data) v = centers.normal();

  CounterRng noise(derive_seed(seed, streams::kData, 1));
  Matrix features(n, d);
  std::vector<int> labels(n);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t s = 0; s < per; ++s) {
      const std::size_t r = k * per + s;
      labels[r] = static_cast<int>(k);
      for (std::size_t j = 0; j < d; ++j) features(r, j) = means(k, j) + spread * noise.normal();
    }
  }

  const BatchPlan shuffle = make_plan(n, derive_seed(seed, streams::kData, 2));
  Batch all;
  all.features = std::move(features);
  all.labels = std::move(labels);
  Batch shuffled = gather(all, shuffle.order);

  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  Dataset ds;
  ds.num_classes = classes;
  ds.train = slice_rows(shuffled.features, shuffled.labels, 0, n_train);
  ds.validation = slice_rows(shuffled.features, shuffled.labels, n_train, n_train + n_val);
  ds.test = slice_rows(shuffled.features, shuffled.labels, n_train + n_val, n);
  return ds;
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("IDX header truncated", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("IDX magic must start with two zero bytes", 0);
  if (bytes[2] != 0x08) throw ParseError("unsupported IDX element type (only unsigned byte 0x08)", 2);
  const std::size_t ndims = bytes[3];
  if (ndims == 0) throw ParseError("IDX tensor must have at least one dimension", 3);

  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw ParseError("IDX dimension table truncated", bytes.size());

  IdxTensor t;
  long double count = 1;  // wide enough that hostile headers cannot wrap
  for (std::size_t i = 0; i < ndims; ++i) {
    const std::uint32_t dim = read_be32(bytes, 4 + 4 * i);
    t.dims.push_back(dim);
    count *= dim;
  }
  if (static_cast<long double>(bytes.size() - header) < count) {
    throw ParseError("IDX payload truncated: expected " + std::to_string(static_cast<std::uint64_t>(count)) +
                         " bytes after the header", bytes.size());
  }
  const auto payload = static_cast<std::size_t>(count);
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                bytes.begin() + static_cast<std::ptrdiff_t>(header + payload));
  return t;
}

IdxTensor read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IDX file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255) throw std::invalid_argument("IDX tensor needs 1..255 dims");
  std::uint64_t count = 1;
  for (auto d : tensor.dims) count *= d;
  if (count != tensor.data.size()) throw std::invalid_argument("IDX data size does not match dims");

  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * tensor.dims.size() + tensor.data.size());
  append_be32(out, tensor.magic());
  for (auto d : tensor.dims) append_be32(out, d);
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxTensor& tensor) {
  const auto bytes = serialize_idx(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IDX file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Matrix idx_images(const IdxTensor& tensor) {
  if (tensor.magic() != kIdxImageMagic) throw std::invalid_argument("expected a 3-d IDX image tensor");
  const std::size_t n = tensor.dims[0];
  const std::size_t width = static_cast<std::size_t>(tensor.dims[1]) * tensor.dims[2];
  Matrix m(n, width);
  for (std::size_t i = 0; i < tensor.data.size(); ++i) m.data[i] = static_cast<double>(tensor.data[i]) / 255.0;
  return m;
}

std::vector<int> idx_labels(const IdxTensor& tensor) {
  if (tensor.magic() != kIdxLabelMagic) throw std::invalid_argument("expected a 1-d IDX label tensor");
  return {tensor.data.begin(), tensor.data.end()};
}

Dataset load_idx_dataset(const IdxPaths& paths, std::size_t validation_count, std::optional<std::size_t> limit) {
  Matrix train_x = idx_images(read_idx(paths.train_images));
  std::vector<int> train_y = idx_labels(read_idx(paths.train_labels));
  Matrix test_x = idx_images(read_idx(paths.test_images));
  std::vector<int> test_y = idx_labels(read_idx(paths.test_labels));
  if (train_x.rows != train_y.size() || test_x.rows != test_y.size()) {
    throw std::invalid_argument("IDX image and label counts differ");
  }

  std::size_t n = train_y.size();
  if (limit) n = std::min(n, *limit);
  if (validation_count >= n) throw std::invalid_argument("validation split would leave no training data");

  Dataset ds;
  ds.validation = slice_rows(train_x, train_y, 0, validation_count);
  ds.train = slice_rows(train_x, train_y, validation_count, n);
  ds.test = slice_rows(test_x, test_y, 0, test_y.size());
  int max_label = 1;
  for (int y : train_y) max_label = std::max(max_label, y);
  for (int y : test_y) max_label = std::max(max_label, y);
  ds.num_classes = max_label + 1;
  validate(ds);
  return ds;
}

void write_csv(std::ostream& out, const Batch& split) {
  const std::size_t d = split.features.cols;
  for (std::size_t j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "label\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < split.size(); ++r) {
    for (double v : split.features.row(r)) out << v << ',';
    out << split.labels[r] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace rmgd::data
