#include "mnb/harness.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace mnb {

namespace {

constexpr std::size_t kEvalBatch = 256;

std::string stage_tag(std::size_t k) { return "stage" + std::to_string(k); }

std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& indices,
                                            std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t stop = std::min(indices.size(), start + batch_size);
    out.emplace_back(indices.begin() + start, indices.begin() + stop);
  }
  return out;
}

Tensor slice_rows(const Tensor& t, std::size_t rows) {
  if (t.rank() == 2) {
    Tensor out({rows, t.dim(1)});
    std::copy(t.data(), t.data() + rows * t.dim(1), out.data());
    return out;
  }
  Tensor out({rows});
  std::copy(t.data(), t.data() + rows, out.data());
  return out;
}

// Bounded coordinate view: every extractor entry plus the head rows of
// previously seen classes. New-class rows are never part of the displacement.
ParameterSet shared_view(const ParameterSet& extractor, const Tensor& head_weight,
                         const Tensor& head_bias, std::size_t old_rows) {
  ParameterSet out = extractor;
  out.add("head.weight", slice_rows(head_weight, old_rows));
  out.add("head.bias", slice_rows(head_bias, old_rows));
  return out;
}

std::vector<ClassId> labels_for(const Dataset& data, const std::vector<std::size_t>& indices) {
  std::vector<ClassId> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.labels[i]);
  return out;
}

}  // namespace

void recompute_bn_stats(Model& model, const Dataset& train,
                        const std::vector<std::size_t>& data_indices, BnStrategy strategy,
                        std::size_t batch_size, SplitRng rng) {
  if (strategy == BnStrategy::kNoChange) return;
  if (!model.has_batch_norm()) return;
  if (data_indices.empty()) {
    throw std::invalid_argument("batchnorm recomputation needs at least one sample");
  }
  if (strategy == BnStrategy::kReset) model.reset_bn_stats();

  std::vector<std::size_t> order = data_indices;
  rng.shuffle(order);
  for (const auto& batch_indices : chunk(order, batch_size)) {
    forward(model, train.gather(batch_indices), ForwardMode::kTrain);
  }
}

CilHarness::CilHarness(const Dataset* train, const Dataset* test, TaskSequence tasks,
                       HarnessConfig config, std::uint64_t seed)
    : train_(train), test_(test), tasks_(std::move(tasks)), config_(std::move(config)), root_(seed) {
  if (train_ == nullptr || test_ == nullptr) {
    throw std::invalid_argument("harness needs train and test datasets");
  }
  require_dataset_pair(*train_, *test_);
  if (config_.stage.intra_period < 1 || config_.stage.bound_period < 1) {
    throw std::invalid_argument("merge and bound periods must be >= 1");
  }
  if (!(config_.stage.bound_radius > 0.0)) {
    throw std::invalid_argument("bound radius must be positive");
  }
  if (config_.stage.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

StageState CilHarness::init_stage(std::size_t k, const StageState* prev) const {
  if (k < 1 || k > tasks_.num_stages) {
    throw std::invalid_argument("stage " + std::to_string(k) + " outside the task sequence");
  }
  if (k == 1) {
    if (prev != nullptr) throw std::invalid_argument("stage 1 takes no previous state");
    std::vector<LayerSpec> layers;
    std::size_t dim = train_->feature_dim();
    for (std::size_t h : config_.hidden_dims) {
      layers.push_back(DenseLayer{dim, h});
      if (config_.use_batch_norm) layers.push_back(BatchNormLayer{h});
      layers.push_back(ReluLayer{});
      dim = h;
    }
    if (layers.empty()) {
      throw std::invalid_argument("model needs at least one hidden layer");
    }
    SplitRng init_rng = root_.stream("init").stream(stage_tag(1));
    Model model(std::move(layers), tasks_.classes_of(1), init_rng, config_.bn_momentum);
    MomentumState momentum = MomentumState::zeros_like(model.trainable_params());
    return StageState{1,
                      std::move(model),
                      std::nullopt,
                      IntraMergeAccumulator{},
                      std::move(momentum),
                      ExemplarMemory{config_.memory_per_class, {}},
                      std::nullopt,
                      false};
  }

  if (prev == nullptr) {
    throw std::invalid_argument("stage " + std::to_string(k) + " needs the previous stage state");
  }
  if (prev->stage_index != k - 1 || !prev->finalized) {
    throw std::invalid_argument("previous stage state must be the finalized stage " +
                                std::to_string(k - 1));
  }

  BaseModelState anchor;
  if (config_.stage.enable_inter) {
    if (!prev->next_base) {
      throw std::invalid_argument("previous stage did not produce a base model");
    }
    anchor = *prev->next_base;
  } else {
    // Without inter-task merging the stage is anchored at the previous final
    // model itself.
    anchor = BaseModelState{prev->model.extractor_params(), prev->model.head(), k};
  }

  Model model = prev->model;  // carries architecture and BN running stats
  model.set_extractor_params(anchor.theta);
  model.set_head(anchor.phi);
  SplitRng expand_rng = root_.stream("init").stream(stage_tag(k));
  model = expand_classifier(model, tasks_.classes_of(k), expand_rng);

  MomentumState momentum = MomentumState::zeros_like(model.trainable_params());
  return StageState{k,
                    std::move(model),
                    std::move(anchor),
                    IntraMergeAccumulator{},
                    std::move(momentum),
                    prev->memory,
                    std::nullopt,
                    false};
}

std::vector<std::size_t> CilHarness::stage_data_indices(const StageState& state) const {
  std::vector<std::size_t> indices = tasks_.train_indices[state.stage_index - 1];
  const std::vector<std::size_t> replay = state.memory.all_indices();
  indices.insert(indices.end(), replay.begin(), replay.end());
  return indices;
}

void CilHarness::apply_bound(StageState& state, StageReport* report) const {
  const BaseModelState& base = *state.base;
  const std::size_t old_rows = base.phi.num_rows();
  ParameterSet current =
      shared_view(state.model.extractor_params(), state.model.head_weight(),
                  state.model.head_bias(), old_rows);
  ParameterSet anchor = shared_view(base.theta, base.phi.weight, base.phi.bias, old_rows);
  ParameterSet bounded = bound_update(current, anchor, current.names(), config_.stage.bound_radius);

  ParameterSet extractor = state.model.extractor_params();
  for (std::size_t i = 0; i < extractor.size(); ++i) {
    extractor.tensor_at(i) = bounded.entry(i).tensor;
  }
  state.model.set_extractor_params(std::move(extractor));

  ClassifierRows head = state.model.head();
  const Tensor& w = bounded.at("head.weight");
  const Tensor& b = bounded.at("head.bias");
  std::copy(w.values().begin(), w.values().end(), head.weight.values().begin());
  std::copy(b.values().begin(), b.values().end(), head.bias.values().begin());
  state.model.set_head(std::move(head));

  if (report != nullptr) {
    report->bound_checks += 1;
    report->bounded_displacements.push_back(shared_displacement(state).norm);
  }
}

Displacement CilHarness::shared_displacement(const StageState& state) const {
  if (!state.base) throw std::invalid_argument("stage has no anchor to measure against");
  const std::size_t old_rows = state.base->phi.num_rows();
  ParameterSet current =
      shared_view(state.model.extractor_params(), state.model.head_weight(),
                  state.model.head_bias(), old_rows);
  ParameterSet anchor =
      shared_view(state.base->theta, state.base->phi.weight, state.base->phi.bias, old_rows);
  return displacement(current, anchor, current.names());
}

StageReport CilHarness::train_stage(StageState& state) {
  if (state.finalized) throw std::invalid_argument("stage state is already finalized");
  const StageConfig& cfg = config_.stage;
  StageReport report;
  report.stage_index = state.stage_index;
  if (cfg.epochs == 0) return report;

  const std::vector<std::size_t> pool = stage_data_indices(state);
  if (pool.empty()) throw std::invalid_argument("stage has no training data");

  SplitRng shuffle_rng = root_.stream("shuffle").stream(stage_tag(state.stage_index));
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = pool;
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (const auto& batch_indices : chunk(order, cfg.batch_size)) {
      const Tensor batch = train_->gather(batch_indices);
      const std::vector<ClassId> labels = labels_for(*train_, batch_indices);
      BackwardResult result = backward(state.model, batch, labels);
      ParameterSet params = state.model.trainable_params();
      sgd_step(params, result.grads, state.momentum, cfg.lr, cfg.momentum);
      state.model.set_trainable_params(params);
      loss_sum += result.loss;
      ++batches;
    }
    report.epoch_mean_loss.push_back(loss_sum / static_cast<double>(batches));

    // Bound before merging so intra-merge snapshots are feasible points.
    if (state.stage_index >= 2 && cfg.enable_bound && epoch % cfg.bound_period == 0) {
      apply_bound(state, &report);
    }
    if (cfg.enable_intra && epoch % cfg.intra_period == 0) {
      state.accumulator = intra_merge_step(state.accumulator, state.model.trainable_params());
      report.intra_merges += 1;
    }
  }
  return report;
}

void CilHarness::finalize_stage(StageState& state) {
  if (state.finalized) throw std::invalid_argument("stage state is already finalized");
  const StageConfig& cfg = config_.stage;
  const std::size_t k = state.stage_index;

  if (cfg.enable_intra && state.accumulator.count > 0) {
    state.model.set_trainable_params(state.accumulator.theta_avg);
    recompute_bn_stats(state.model, *train_, stage_data_indices(state), cfg.bn_strategy,
                       cfg.batch_size, root_.stream("shuffle").stream("bn" + std::to_string(k)));
  }

  state.memory.budget = config_.memory_per_class;
  for (ClassId id : tasks_.classes_of(k)) {
    std::vector<std::size_t> candidates;
    for (std::size_t i : tasks_.train_indices[k - 1]) {
      if (train_->labels[i] == id) candidates.push_back(i);
    }
    const std::uint64_t seed =
        root_.stream("data").stream("exemplar-" + stage_tag(k) + "-class" + std::to_string(id))
            .seed();
    state.memory.per_class[id] = select_exemplars(state.model, *train_, candidates,
                                                  config_.memory_per_class,
                                                  config_.exemplar_method, seed);
  }

  if (cfg.enable_inter) {
    BaseModelState next;
    next.stage_index = k + 1;
    const ParameterSet& theta_k = state.model.extractor_params();
    if (k == 1) {
      next.theta = theta_k;  // the k = 1 fold has coefficient zero on the base
      next.phi = concat_classifier(std::nullopt, state.model.head(), tasks_.classes_of(1));
    } else if (cfg.ema_alpha) {
      next.theta = ema_merge_step(state.base->theta, theta_k, *cfg.ema_alpha);
      next.phi = concat_classifier(state.base->phi, state.model.head(), tasks_.classes_of(k));
    } else {
      next.theta = uniform_merge_step(state.base->theta, theta_k, k);
      next.phi = concat_classifier(state.base->phi, state.model.head(), tasks_.classes_of(k));
    }
    state.next_base = std::move(next);
  }
  state.finalized = true;
}

StageReport CilHarness::run_stage(StageState& state) {
  StageReport report = train_stage(state);
  finalize_stage(state);
  return report;
}

StageEval CilHarness::evaluate(const Model& model, std::size_t stage) const {
  StageEval eval;
  eval.stage_index = stage;
  eval.new_classes = tasks_.classes_of(stage);
  eval.seen_classes = tasks_.seen_up_to(stage);

  std::vector<std::size_t> indices;
  for (std::size_t k = 1; k <= stage; ++k) {
    const auto& stage_test = tasks_.test_indices[k - 1];
    indices.insert(indices.end(), stage_test.begin(), stage_test.end());
  }

  std::map<ClassId, std::size_t> total, correct;
  for (ClassId id : eval.seen_classes) total[id] = correct[id] = 0;

  for (const auto& batch_indices : chunk(indices, kEvalBatch)) {
    const Tensor logits = forward_eval(model, test_->gather(batch_indices)).logits;
    for (std::size_t r = 0; r < batch_indices.size(); ++r) {
      const double* row = logits.data() + r * logits.dim(1);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.dim(1); ++c) {
        if (row[c] > row[best]) best = c;
      }
      const ClassId truth = test_->labels[batch_indices[r]];
      const ClassId predicted = model.class_ids()[best];
      total[truth] += 1;
      if (predicted == truth) correct[truth] += 1;
      eval.sample_indices.push_back(batch_indices[r]);
      eval.true_labels.push_back(truth);
      eval.predicted_labels.push_back(predicted);
    }
  }

  std::size_t seen_total = 0, seen_correct = 0, new_total = 0, new_correct = 0;
  const std::unordered_set<ClassId> new_set(eval.new_classes.begin(), eval.new_classes.end());
  for (ClassId id : eval.seen_classes) {
    eval.per_class_acc[id] =
        static_cast<double>(correct[id]) / static_cast<double>(total[id]);
    seen_total += total[id];
    seen_correct += correct[id];
    if (new_set.count(id) != 0) {
      new_total += total[id];
      new_correct += correct[id];
    }
  }
  eval.overall_acc = static_cast<double>(seen_correct) / static_cast<double>(seen_total);
  eval.new_acc = static_cast<double>(new_correct) / static_cast<double>(new_total);
  return eval;
}

}  // namespace mnb
