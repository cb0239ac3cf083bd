#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mnb/classifier.hpp"
#include "mnb/tensor.hpp"

namespace mnb {

enum class Split { kTrain, kTest };

struct Dataset {
  Tensor features;              // [N, D]
  std::vector<ClassId> labels;  // N global class ids in [0, num_classes)
  Split split = Split::kTrain;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.dim(1); }
  /// One [1, D] row view copied out for single-sample forwards.
  Tensor row(std::size_t index) const;
  /// Gathers the given sample rows into a [n, D] batch.
  Tensor gather(const std::vector<std::size_t>& indices) const;
};

void require_valid_dataset(const Dataset& data);
/// Checks the pair covers every class id below num_classes in both splits.
void require_dataset_pair(const Dataset& train, const Dataset& test);

/// Synthetic Gaussian-blob classification data. Class means are drawn on a
/// seeded random unit sphere scaled by `separation`; samples add unit normal
/// noise. Deterministic under the seed; both splits are label-balanced.
std::pair<Dataset, Dataset> gen_blobs(std::size_t num_classes, std::size_t dim,
                                      std::size_t n_train_per_class, std::size_t n_test_per_class,
                                      double separation, std::uint64_t seed);

/// IDX image/label pair (big-endian header, u8 pixels). Pixels are scaled to
/// [0, 1] and images flattened row-major.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split);

/// CSV with header "label,f0,f1,...".
Dataset load_csv(const std::filesystem::path& path, Split split);

/// Seeded Fisher-Yates permutation of [0, num_classes).
std::vector<ClassId> class_order(std::size_t num_classes, std::uint64_t seed);

}  // namespace mnb
