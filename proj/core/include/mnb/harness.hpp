#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mnb/data.hpp"
#include "mnb/exemplar.hpp"
#include "mnb/metrics.hpp"
#include "mnb/nn.hpp"
#include "mnb/tasks.hpp"
#include "mnb/weightspace.hpp"

namespace mnb {

/// How running statistics are refreshed after the intra-stage merge replaces
/// the live weights: kOurs keeps the running stats inherited from training and
/// forwards one epoch on top of them; kReset restarts from mean 0 / var 1
/// before the forwarding epoch; kNoChange leaves the model untouched.
enum class BnStrategy { kOurs, kReset, kNoChange };

struct StageConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t intra_period = 1;   // epochs between checkpoint merges (e_a)
  std::size_t bound_period = 15;  // epochs between displacement checks (e_b)
  double bound_radius = 10.0;     // displacement budget (B)
  BnStrategy bn_strategy = BnStrategy::kOurs;
  bool enable_inter = true;
  bool enable_intra = true;
  bool enable_bound = true;
  std::optional<double> ema_alpha;  // replaces the uniform inter-task fold when set
};

struct HarnessConfig {
  StageConfig stage;
  std::vector<std::size_t> hidden_dims{64, 64};
  bool use_batch_norm = true;
  double bn_momentum = 0.1;
  std::size_t memory_per_class = 20;
  ExemplarMethod exemplar_method = ExemplarMethod::kHerding;
};

/// Everything live during one incremental stage.
struct StageState {
  std::size_t stage_index = 0;  // k, 1-based
  Model model;
  std::optional<BaseModelState> base;  // anchor for init and bounding; engaged iff k >= 2
  IntraMergeAccumulator accumulator;
  MomentumState momentum;
  ExemplarMemory memory;  // exemplars of stages 1..k-1 until finalize, then 1..k
  std::optional<BaseModelState> next_base;  // produced by finalize when inter-merging
  bool finalized = false;
};

struct StageReport {
  std::size_t stage_index = 0;
  std::vector<double> epoch_mean_loss;
  std::vector<double> bounded_displacements;  // shared-subset norm after each bound hook
  std::size_t intra_merges = 0;
  std::size_t bound_checks = 0;
};

/// Refreshes BN running statistics for `model` by forwarding one epoch of the
/// given samples in seeded shuffled order, per the strategy. A model without
/// BN layers is returned unchanged under every strategy.
void recompute_bn_stats(Model& model, const Dataset& train,
                        const std::vector<std::size_t>& data_indices, BnStrategy strategy,
                        std::size_t batch_size, SplitRng rng);

/// Drives class-incremental training over a task sequence: stage
/// initialization from the merged base model, the epoch loop with bounding
/// and intra-merge hooks, exemplar-memory upkeep and evaluation.
class CilHarness {
 public:
  CilHarness(const Dataset* train, const Dataset* test, TaskSequence tasks, HarnessConfig config,
             std::uint64_t seed);

  /// Fresh seeded model for k == 1; for k >= 2 the model starts from the
  /// stage anchor (the folded base model, or the previous final model when
  /// inter-merging is off) and the classifier grows rows for the new classes.
  StageState init_stage(std::size_t k, const StageState* prev) const;

  /// Epoch loop only: shuffled minibatch SGD with the bounding hook (from
  /// stage 2) and the intra-merge hook at their configured periods; when both
  /// fire in one epoch the bound applies first so merged snapshots stay
  /// inside the ball.
  StageReport train_stage(StageState& state);

  /// Swaps in the intra-merged weights, refreshes BN statistics, selects
  /// exemplars for the new classes and folds the next stage's base model.
  void finalize_stage(StageState& state);

  /// train_stage followed by finalize_stage.
  StageReport run_stage(StageState& state);

  /// Current-stage training pool: the stage's own train samples plus all
  /// stored exemplars.
  std::vector<std::size_t> stage_data_indices(const StageState& state) const;

  /// EVAL-mode accuracy on the test samples of every class seen by `stage`.
  StageEval evaluate(const Model& model, std::size_t stage) const;

  /// Displacement of the model from its anchor over the shared subset
  /// (extractor plus previously seen classifier rows).
  Displacement shared_displacement(const StageState& state) const;

  const TaskSequence& tasks() const { return tasks_; }
  const HarnessConfig& config() const { return config_; }
  const Dataset& train_data() const { return *train_; }
  const Dataset& test_data() const { return *test_; }

 private:
  void apply_bound(StageState& state, StageReport* report) const;

  const Dataset* train_;
  const Dataset* test_;
  TaskSequence tasks_;
  HarnessConfig config_;
  SplitRng root_;
};

}  // namespace mnb
