#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "mnb/classifier.hpp"
#include "mnb/tensor.hpp"

namespace mnb {

/// Evaluation record taken after one stage: per-class accuracy on every class
/// seen so far, plus the raw predictions it was computed from.
struct StageEval {
  std::size_t stage_index = 0;               // 1-based
  std::vector<ClassId> new_classes;          // classes introduced this stage
  std::vector<ClassId> seen_classes;         // introduction order
  std::map<ClassId, double> per_class_acc;
  double overall_acc = 0.0;                  // on all seen classes
  double new_acc = 0.0;                      // restricted to new_classes

  // raw predictions, one per evaluated test sample
  std::vector<std::size_t> sample_indices;
  std::vector<ClassId> true_labels;
  std::vector<ClassId> predicted_labels;
};

struct MetricsLog {
  std::vector<StageEval> stages;                     // stage 1..K in order
  std::vector<std::vector<double>> update_vectors;   // flat extractor displacement per stage

  std::size_t num_stages() const { return stages.size(); }
  void require_complete() const;  // contiguous stages starting at 1
};

/// Mean over stages of the overall accuracy on all classes seen so far.
double average_incremental_accuracy(const MetricsLog& log);

/// Mean over classes introduced before the final stage of
/// (accuracy at introduction - accuracy at the final stage). Zero when no
/// class qualifies. Higher is worse.
double forgetting(const MetricsLog& log);

/// Mean over stages of the accuracy restricted to that stage's new classes.
double average_new_accuracy(const MetricsLog& log);

/// Pairwise cosine similarities; rows for zero vectors are 0 off-diagonal and
/// 1 on the diagonal.
std::vector<std::vector<double>> task_update_cosine_matrix(
    const std::vector<std::vector<double>>& update_vectors);

/// Linear centered kernel alignment between two representation matrices of
/// the same samples: ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) with
/// column-centered Xc, Yc. All-constant input yields 0.
double linear_cka(const Tensor& x, const Tensor& y);

// ---- CSV emission ----------------------------------------------------------

std::string format_double(double value);  // round-trip exact, byte-stable

/// One row per stage (stage, seen_classes, overall_acc, new_acc) followed by
/// summary rows avg_inc_acc, forgetting, avg_new_acc.
void write_metrics_csv(std::ostream& out, const MetricsLog& log);

void write_matrix_csv(std::ostream& out, const std::vector<std::vector<double>>& matrix);

}  // namespace mnb
