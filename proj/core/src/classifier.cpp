#include "mnb/classifier.hpp"

#include <stdexcept>
#include <unordered_set>

namespace mnb {

void require_valid_classifier(const ClassifierRows& rows) {
  if (rows.weight.rank() != 2 || rows.bias.rank() != 1) {
    throw std::invalid_argument("classifier expects rank-2 weight and rank-1 bias");
  }
  if (rows.weight.dim(0) != rows.class_ids.size() || rows.bias.dim(0) != rows.class_ids.size()) {
    throw std::invalid_argument("classifier row count does not match class id count");
  }
  std::unordered_set<ClassId> seen;
  for (ClassId id : rows.class_ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("duplicate class id " + std::to_string(id) + " in classifier");
    }
  }
}

}  // namespace mnb
