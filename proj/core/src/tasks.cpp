#include "mnb/tasks.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mnb {

const std::vector<ClassId>& TaskSequence::classes_of(std::size_t stage) const {
  if (stage < 1 || stage > num_stages) {
    throw std::out_of_range("stage " + std::to_string(stage) + " outside 1.." +
                            std::to_string(num_stages));
  }
  return stage_classes[stage - 1];
}

std::vector<ClassId> TaskSequence::seen_up_to(std::size_t stage) const {
  std::vector<ClassId> out;
  for (std::size_t k = 1; k <= stage && k <= num_stages; ++k) {
    out.insert(out.end(), stage_classes[k - 1].begin(), stage_classes[k - 1].end());
  }
  return out;
}

TaskSequence build_task_sequence(const Dataset& train, const Dataset& test,
                                 std::size_t num_stages, std::uint64_t seed,
                                 double initial_fraction) {
  require_dataset_pair(train, test);
  const std::size_t num_classes = train.num_classes;
  if (num_stages == 0) throw std::invalid_argument("need at least one stage");
  if (num_stages > num_classes) {
    throw std::invalid_argument("cannot split " + std::to_string(num_classes) + " classes into " +
                                std::to_string(num_stages) + " stages");
  }
  if (!(initial_fraction > 0.0) || initial_fraction > 1.0) {
    throw std::invalid_argument("initial fraction must lie in (0, 1]");
  }

  TaskSequence tasks;
  tasks.num_stages = num_stages;
  tasks.class_order = class_order(num_classes, seed);

  if (num_stages == 1) {
    tasks.initial_count = num_classes;
  } else {
    tasks.initial_count = static_cast<std::size_t>(
        std::llround(initial_fraction * static_cast<double>(num_classes)));
    if (tasks.initial_count == 0) tasks.initial_count = 1;
    if (num_classes - tasks.initial_count < num_stages - 1) {
      throw std::invalid_argument("initial fraction leaves fewer classes than stages");
    }
  }

  tasks.stage_classes.resize(num_stages);
  std::size_t cursor = 0;
  tasks.stage_classes[0].assign(tasks.class_order.begin(),
                                tasks.class_order.begin() + tasks.initial_count);
  cursor = tasks.initial_count;
  if (num_stages > 1) {
    const std::size_t remaining = num_classes - tasks.initial_count;
    const std::size_t per_stage = remaining / (num_stages - 1);
    const std::size_t remainder = remaining % (num_stages - 1);
    for (std::size_t k = 1; k < num_stages; ++k) {
      // remainder classes go to the earliest incremental stages
      const std::size_t take = per_stage + (k - 1 < remainder ? 1 : 0);
      tasks.stage_classes[k].assign(tasks.class_order.begin() + cursor,
                                    tasks.class_order.begin() + cursor + take);
      cursor += take;
    }
  }

  std::unordered_map<ClassId, std::size_t> stage_of;
  for (std::size_t k = 0; k < num_stages; ++k) {
    for (ClassId id : tasks.stage_classes[k]) stage_of[id] = k;
  }

  tasks.train_indices.assign(num_stages, {});
  tasks.test_indices.assign(num_stages, {});
  for (std::size_t i = 0; i < train.size(); ++i) {
    tasks.train_indices[stage_of.at(train.labels[i])].push_back(i);
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    tasks.test_indices[stage_of.at(test.labels[i])].push_back(i);
  }
  return tasks;
}

}  // namespace mnb
