#pragma once

#include <cstdint>
#include <vector>

#include "mnb/tensor.hpp"

namespace mnb {

using ClassId = std::uint32_t;

/// Linear classifier rows with the global class labels they score.
/// Row i of `weight` and entry i of `bias` belong to class_ids[i]; rows are
/// kept in class-introduction order.
struct ClassifierRows {
  Tensor weight;                   // [num_classes, feature_dim]
  Tensor bias;                     // [num_classes]
  std::vector<ClassId> class_ids;  // one per row

  std::size_t num_rows() const { return class_ids.size(); }
  std::size_t feature_dim() const { return weight.dim(1); }
};

void require_valid_classifier(const ClassifierRows& rows);

}  // namespace mnb
