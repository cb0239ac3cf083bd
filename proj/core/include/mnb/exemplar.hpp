#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mnb/data.hpp"
#include "mnb/nn.hpp"

namespace mnb {

enum class ExemplarMethod { kHerding, kRandom };

/// Replay memory: up to `budget` stored train-sample indices per class,
/// covering exactly the classes of completed stages.
struct ExemplarMemory {
  std::size_t budget = 20;
  std::map<ClassId, std::vector<std::size_t>> per_class;

  std::size_t total() const;
  std::vector<ClassId> classes() const;
  /// All stored indices, classes in ascending id order, selection order within.
  std::vector<std::size_t> all_indices() const;
};

/// Picks up to m exemplars from `candidates` (train-dataset indices of one
/// class). Herding greedily minimizes the distance between the class feature
/// mean and the mean of the selected features, with features from EVAL-mode
/// extraction; kRandom draws a seeded uniform sample without replacement.
std::vector<std::size_t> select_exemplars(const Model& model, const Dataset& train,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t m, ExemplarMethod method,
                                          std::uint64_t seed);

}  // namespace mnb
