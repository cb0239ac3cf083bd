#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mnb/classifier.hpp"
#include "mnb/rng.hpp"
#include "mnb/tensor.hpp"

namespace mnb {

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
};

struct BatchNormLayer {
  std::size_t dim = 0;
};

struct ReluLayer {};

using LayerSpec = std::variant<DenseLayer, BatchNormLayer, ReluLayer>;

struct BatchNormStats {
  Tensor running_mean;  // [dim]
  Tensor running_var;   // [dim], entries > 0
};

inline constexpr double kBnEpsilon = 1e-8;

enum class ForwardMode {
  kTrain,             // batch statistics; running stats advance one momentum step
  kTrainFrozenStats,  // batch statistics; running stats untouched (gradient checks)
  kEval,              // running statistics; pure function of (model, batch)
};

/// MLP feature extractor (Dense / BatchNorm / ReLU stack) with a growable
/// linear softmax head. Head rows are ordered by class introduction.
///
/// Extractor parameters are named "fe.<layer>.weight|bias|scale|shift"; the
/// head contributes "head.weight" ([num_classes, feature_dim]) and
/// "head.bias" ([num_classes]).
class Model {
 public:
  /// Fresh model with seeded uniform(-1/sqrt(fan_in)) dense init; BN starts at
  /// scale 1 / shift 0 with running mean 0 / var 1.
  Model(std::vector<LayerSpec> extractor, std::vector<ClassId> class_ids, SplitRng& rng,
        double bn_momentum = 0.1);

  static Model from_parts(std::vector<LayerSpec> extractor, ParameterSet extractor_params,
                          Tensor head_weight, Tensor head_bias, std::vector<ClassId> class_ids,
                          std::vector<BatchNormStats> bn_stats, double bn_momentum);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return class_ids_.size(); }

  const std::vector<LayerSpec>& extractor_layers() const { return layers_; }
  const std::vector<ClassId>& class_ids() const { return class_ids_; }
  bool knows_class(ClassId id) const;
  std::size_t class_row(ClassId id) const;  // std::domain_error when unseen

  const ParameterSet& extractor_params() const { return extractor_; }
  void set_extractor_params(ParameterSet params);

  const Tensor& head_weight() const { return head_weight_; }
  const Tensor& head_bias() const { return head_bias_; }
  ClassifierRows head() const;
  void set_head(ClassifierRows rows);

  /// Extractor entries followed by head.weight / head.bias; the currency for
  /// SGD, checkpoint averaging and bounding.
  ParameterSet trainable_params() const;
  void set_trainable_params(const ParameterSet& params);

  bool has_batch_norm() const { return !bn_stats_.empty(); }
  /// One entry per BatchNorm layer, in layer order.
  const std::vector<BatchNormStats>& bn_stats() const { return bn_stats_; }
  std::vector<BatchNormStats>& bn_stats() { return bn_stats_; }
  /// Extractor layer indices that are BatchNorm, parallel to bn_stats().
  const std::vector<std::size_t>& bn_layer_indices() const { return bn_layers_; }
  double bn_momentum() const { return bn_momentum_; }
  void reset_bn_stats();  // mean 0 / var 1

 private:
  Model() = default;
  void compute_dims();

  std::vector<LayerSpec> layers_;
  ParameterSet extractor_;
  Tensor head_weight_;
  Tensor head_bias_;
  std::vector<ClassId> class_ids_;
  std::vector<BatchNormStats> bn_stats_;
  std::vector<std::size_t> bn_layers_;
  double bn_momentum_ = 0.1;
  std::size_t input_dim_ = 0;
  std::size_t feature_dim_ = 0;
};

std::string dense_weight_name(std::size_t layer);
std::string dense_bias_name(std::size_t layer);
std::string bn_scale_name(std::size_t layer);
std::string bn_shift_name(std::size_t layer);

struct ForwardResult {
  Tensor features;  // [batch, feature_dim]
  Tensor logits;    // [batch, num_classes]
};

ForwardResult forward(Model& model, const Tensor& batch, ForwardMode mode);
ForwardResult forward_eval(const Model& model, const Tensor& batch);

/// Mean softmax cross-entropy given per-sample target row indices.
double softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& target_rows);

struct BackwardResult {
  ParameterSet grads;  // shape-compatible with model.trainable_params()
  double loss = 0.0;
};

/// Backprop of the mean cross-entropy loss under TRAIN-mode forward
/// semantics. Labels are global class ids and must be known to the model.
BackwardResult backward(Model& model, const Tensor& batch, const std::vector<ClassId>& labels,
                        ForwardMode mode = ForwardMode::kTrain);

struct MomentumState {
  ParameterSet buffers;

  static MomentumState zeros_like(const ParameterSet& params);
};

/// v <- momentum * v + grads; params <- params - lr * v
void sgd_step(ParameterSet& params, const ParameterSet& grads, MomentumState& momentum, double lr,
              double momentum_coef);

/// Appends seeded uniform(-s, s) rows (s = 1/sqrt(feature_dim)) for the new
/// classes; existing rows are preserved bitwise.
Model expand_classifier(const Model& model, const std::vector<ClassId>& new_class_ids,
                        SplitRng& rng);

}  // namespace mnb
