#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mnb/classifier.hpp"
#include "mnb/tensor.hpp"

namespace mnb {

/// Anchor model for one incremental stage: the running average of all
/// finalized extractors so far plus the concatenated classifier rows of every
/// class introduced before this stage.
struct BaseModelState {
  ParameterSet theta;       // averaged extractor parameters
  ClassifierRows phi;       // rows for all previously seen classes
  std::size_t stage_index;  // the stage this base anchors (>= 2)
};

/// Uniform intra-stage checkpoint average together with how many snapshots it
/// contains. count == 0 means no snapshot has been folded in yet.
struct IntraMergeAccumulator {
  ParameterSet theta_avg;
  std::size_t count = 0;
};

/// One fold of the running uniform average after stage k completes:
/// returns ((k-1)/k) * theta_base + (1/k) * theta_k.
/// For k == 1 theta_base may be empty (its coefficient is zero).
ParameterSet uniform_merge_step(const ParameterSet& theta_base, const ParameterSet& theta_k,
                                std::size_t k);

/// Exponential-moving-average fold; alpha in (0, 1) weights the most recent
/// model: (1 - alpha) * theta_base + alpha * theta_k.
ParameterSet ema_merge_step(const ParameterSet& theta_base, const ParameterSet& theta_k,
                            double alpha);

/// Folds one snapshot into the running uniform checkpoint average:
/// theta_avg <- (n * theta_avg + snapshot) / (n + 1).
IntraMergeAccumulator intra_merge_step(const IntraMergeAccumulator& acc,
                                       const ParameterSet& snapshot);

/// Appends the rows of `phi_current` that score `current_class_ids` (in the
/// given order) after the rows of `phi_base`, bitwise. Rows of old classes in
/// phi_current never reach the output. `phi_base` is empty at stage 1.
ClassifierRows concat_classifier(const std::optional<ClassifierRows>& phi_base,
                                 const ClassifierRows& phi_current,
                                 const std::vector<ClassId>& current_class_ids);

struct Displacement {
  ParameterSet delta;  // theta - theta_base over shared_names
  double norm = 0.0;   // global L2 over all delta entries concatenated
};

Displacement displacement(const ParameterSet& theta, const ParameterSet& theta_base,
                          const std::vector<std::string>& shared_names);

/// Projects theta onto the L2 ball of radius `radius` centered at theta_base,
/// over the shared coordinates only: when the displacement norm exceeds the
/// radius the shared parameters become theta_base + radius * delta / ||delta||;
/// otherwise theta is returned unchanged. Entries outside shared_names are
/// never touched.
ParameterSet bound_update(const ParameterSet& theta, const ParameterSet& theta_base,
                          const std::vector<std::string>& shared_names, double radius);

}  // namespace mnb
