#pragma once

#include <cstdint>
#include <vector>

#include "mnb/data.hpp"

namespace mnb {

/// Disjoint class partition C_1..C_K with per-stage train/test sample index
/// sets. Stage 1 holds `initial_count` classes; the rest are split across the
/// remaining stages as evenly as possible, earliest stages taking the
/// remainder.
struct TaskSequence {
  std::vector<ClassId> class_order;
  std::size_t initial_count = 0;
  std::size_t num_stages = 0;
  std::vector<std::vector<ClassId>> stage_classes;        // C_1..C_K (index 0 = stage 1)
  std::vector<std::vector<std::size_t>> train_indices;    // per stage, into the train dataset
  std::vector<std::vector<std::size_t>> test_indices;     // per stage, into the test dataset

  const std::vector<ClassId>& classes_of(std::size_t stage) const;  // stage is 1-based
  std::vector<ClassId> seen_up_to(std::size_t stage) const;         // introduction order
};

TaskSequence build_task_sequence(const Dataset& train, const Dataset& test,
                                 std::size_t num_stages, std::uint64_t seed,
                                 double initial_fraction = 0.5);

}  // namespace mnb
