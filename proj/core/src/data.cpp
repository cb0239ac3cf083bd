#include "mnb/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mnb/rng.hpp"
#include "mnb/serialize.hpp"

namespace mnb {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, std::size_t& offset, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw FormatError(std::string("file truncated while reading ") + what, offset);
  offset += 4;
  return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t n, std::size_t& offset,
                                        const char* what) {
  std::vector<unsigned char> out(n);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(std::string("file truncated while reading ") + what,
                      offset + static_cast<std::size_t>(in.gcount()));
  }
  offset += n;
  return out;
}

}  // namespace

Tensor Dataset::row(std::size_t index) const {
  const std::size_t d = feature_dim();
  Tensor out({1, d});
  std::copy(features.data() + index * d, features.data() + (index + 1) * d, out.data());
  return out;
}

Tensor Dataset::gather(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw std::invalid_argument("cannot gather an empty batch");
  const std::size_t d = feature_dim();
  Tensor out({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy(features.data() + indices[i] * d, features.data() + (indices[i] + 1) * d,
              out.data() + i * d);
  }
  return out;
}

void require_valid_dataset(const Dataset& data) {
  if (data.features.rank() != 2) throw std::invalid_argument("dataset features must be rank 2");
  if (data.features.dim(0) != data.labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.features.dim(0)) +
                                " feature rows but " + std::to_string(data.labels.size()) +
                                " labels");
  }
  for (ClassId label : data.labels) {
    if (label >= data.num_classes) {
      throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(data.num_classes) + ")");
    }
  }
}

void require_dataset_pair(const Dataset& train, const Dataset& test) {
  require_valid_dataset(train);
  require_valid_dataset(test);
  if (train.num_classes != test.num_classes) {
    throw std::invalid_argument("train and test disagree on class count");
  }
  if (train.feature_dim() != test.feature_dim()) {
    throw std::invalid_argument("train and test disagree on feature dim");
  }
  std::vector<bool> in_train(train.num_classes, false), in_test(test.num_classes, false);
  for (ClassId label : train.labels) in_train[label] = true;
  for (ClassId label : test.labels) in_test[label] = true;
  for (std::size_t c = 0; c < train.num_classes; ++c) {
    if (!in_train[c] || !in_test[c]) {
      throw std::invalid_argument("class " + std::to_string(c) +
                                  " is missing from one of the splits");
    }
  }
}

std::pair<Dataset, Dataset> gen_blobs(std::size_t num_classes, std::size_t dim,
                                      std::size_t n_train_per_class, std::size_t n_test_per_class,
                                      double separation, std::uint64_t seed) {
  if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");
  if (dim < 2) throw std::invalid_argument("blob dimension must be at least 2");
  if (num_classes == 0 || n_train_per_class == 0 || n_test_per_class == 0) {
    throw std::invalid_argument("blob counts must be positive");
  }

  SplitRng root(seed);
  SplitRng mean_rng = root.stream("means");

  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
  for (auto& mean : means) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : mean) {
        v = mean_rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (double& v : mean) v *= separation / norm;
  }

  auto make_split = [&](std::size_t per_class, Split split, SplitRng rng) {
    Dataset data;
    data.split = split;
    data.num_classes = num_classes;
    data.features = Tensor({num_classes * per_class, dim});
    data.labels.reserve(num_classes * per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i, ++row) {
        double* out = data.features.data() + row * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] = means[c][d] + rng.normal();
        data.labels.push_back(static_cast<ClassId>(c));
      }
    }
    return data;
  };

  return {make_split(n_train_per_class, Split::kTrain, root.stream("train")),
          make_split(n_test_per_class, Split::kTest, root.stream("test"))};
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("cannot open '" + images_path.string() + "'");
  std::size_t img_offset = 0;
  const std::uint32_t img_magic = read_u32_be(images, img_offset, "image magic");
  if (img_magic != kIdxImagesMagic) {
    throw FormatError("bad IDX image magic " + std::to_string(img_magic), 0);
  }
  const std::uint32_t count = read_u32_be(images, img_offset, "image count");
  const std::uint32_t rows = read_u32_be(images, img_offset, "image rows");
  const std::uint32_t cols = read_u32_be(images, img_offset, "image cols");
  if (count == 0 || rows == 0 || cols == 0) {
    throw FormatError("IDX image header has zero dimension", 4);
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> image_bytes =
      read_payload(images, static_cast<std::size_t>(count) * pixels, img_offset, "image pixels");

  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("cannot open '" + labels_path.string() + "'");
  std::size_t lbl_offset = 0;
  const std::uint32_t lbl_magic = read_u32_be(labels, lbl_offset, "label magic");
  if (lbl_magic != kIdxLabelsMagic) {
    throw FormatError("bad IDX label magic " + std::to_string(lbl_magic), 0);
  }
  const std::uint32_t label_count = read_u32_be(labels, lbl_offset, "label count");
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " != label count " +
                          std::to_string(label_count),
                      4);
  }
  std::vector<unsigned char> label_bytes = read_payload(labels, count, lbl_offset, "labels");

  Dataset data;
  data.split = split;
  data.features = Tensor({count, pixels});
  data.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      data.features.data()[i * pixels + p] = static_cast<double>(image_bytes[i * pixels + p]) / 255.0;
    }
    data.labels.push_back(static_cast<ClassId>(label_bytes[i]));
  }
  data.num_classes =
      static_cast<std::size_t>(*std::max_element(data.labels.begin(), data.labels.end())) + 1;
  require_valid_dataset(data);
  return data;
}

Dataset load_csv(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv file '" + path.string() + "'");
  if (line.rfind("label,", 0) != 0) {
    throw std::runtime_error("csv header must start with 'label,' in '" + path.string() + "'");
  }
  const std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') );

  std::vector<double> values;
  std::vector<ClassId> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',')) continue;
    labels.push_back(static_cast<ClassId>(std::stoul(field)));
    std::size_t fields = 0;
    while (std::getline(ss, field, ',')) {
      values.push_back(std::stod(field));
      ++fields;
    }
    if (fields != dim) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + " has " +
                               std::to_string(fields) + " features, expected " +
                               std::to_string(dim));
    }
  }
  if (labels.empty()) throw std::runtime_error("csv file '" + path.string() + "' has no rows");

  Dataset data;
  data.split = split;
  data.features = Tensor({labels.size(), dim}, std::move(values));
  data.labels = std::move(labels);
  data.num_classes =
      static_cast<std::size_t>(*std::max_element(data.labels.begin(), data.labels.end())) + 1;
  require_valid_dataset(data);
  return data;
}

std::vector<ClassId> class_order(std::size_t num_classes, std::uint64_t seed) {
  std::vector<ClassId> order(num_classes);
  std::iota(order.begin(), order.end(), 0u);
  SplitRng rng(seed);
  rng.shuffle(order);
  return order;
}

}  // namespace mnb
