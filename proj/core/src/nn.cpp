#include "mnb/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mnb {

namespace {

// y[B,out] = x[B,in] * w[out,in]^T + b[out]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  Tensor y({batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc;
    }
  }
  return y;
}

// grad[out,in] = dy[B,out]^T * x[B,in]
Tensor matmul_tn(const Tensor& dy, const Tensor& x) {
  const std::size_t batch = dy.dim(0), out = dy.dim(1), in = x.dim(1);
  Tensor g({out, in});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* dyr = dy.data() + r * out;
    const double* xr = x.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      double* go = g.data() + o * in;
      const double d = dyr[o];
      for (std::size_t i = 0; i < in; ++i) go[i] += d * xr[i];
    }
  }
  return g;
}

// dx[B,in] = dy[B,out] * w[out,in]
Tensor matmul_nn(const Tensor& dy, const Tensor& w) {
  const std::size_t batch = dy.dim(0), out = dy.dim(1), in = w.dim(1);
  Tensor dx({batch, in});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* dyr = dy.data() + r * out;
    double* dxr = dx.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      const double d = dyr[o];
      for (std::size_t i = 0; i < in; ++i) dxr[i] += d * wo[i];
    }
  }
  return dx;
}

Tensor column_sums(const Tensor& x) {
  const std::size_t batch = x.dim(0), cols = x.dim(1);
  Tensor s({cols});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s[c] += xr[c];
  }
  return s;
}

struct BnTrace {
  Tensor xhat;                   // [B, dim]
  std::vector<double> inv_std;   // [dim]
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased (1/B)
};

struct ExtractorTrace {
  std::vector<Tensor> layer_inputs;  // input seen by each layer
  std::vector<BnTrace> bn;           // one per BatchNorm layer, in layer order
  Tensor features;
};

ExtractorTrace run_extractor(const Model& model, const Tensor& batch, bool use_batch_stats) {
  if (batch.rank() != 2) {
    throw std::invalid_argument("forward expects a rank-2 [batch, features] tensor");
  }
  if (batch.dim(1) != model.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(batch.dim(1)) +
                                " features but layer fe.0 expects " +
                                std::to_string(model.input_dim()));
  }
  ExtractorTrace trace;
  const auto& layers = model.extractor_layers();
  trace.layer_inputs.reserve(layers.size());

  Tensor current = batch;
  std::size_t bn_index = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    trace.layer_inputs.push_back(current);
    if (const auto* dense = std::get_if<DenseLayer>(&layers[l])) {
      current = affine(current, model.extractor_params().at(dense_weight_name(l)),
                       model.extractor_params().at(dense_bias_name(l)));
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layers[l])) {
      const std::size_t batch_n = current.dim(0), dim = bn->dim;
      const Tensor& scale = model.extractor_params().at(bn_scale_name(l));
      const Tensor& shift = model.extractor_params().at(bn_shift_name(l));
      BnTrace bt;
      bt.inv_std.resize(dim);
      bt.batch_mean.resize(dim);
      bt.batch_var.resize(dim);
      if (use_batch_stats) {
        for (std::size_t d = 0; d < dim; ++d) {
          double mean = 0.0;
          for (std::size_t r = 0; r < batch_n; ++r) mean += current.at(r, d);
          mean /= static_cast<double>(batch_n);
          double var = 0.0;
          for (std::size_t r = 0; r < batch_n; ++r) {
            const double diff = current.at(r, d) - mean;
            var += diff * diff;
          }
          var /= static_cast<double>(batch_n);
          bt.batch_mean[d] = mean;
          bt.batch_var[d] = var;
          bt.inv_std[d] = 1.0 / std::sqrt(var + kBnEpsilon);
        }
      } else {
        const BatchNormStats& stats = model.bn_stats()[bn_index];
        for (std::size_t d = 0; d < dim; ++d) {
          bt.batch_mean[d] = stats.running_mean[d];
          bt.batch_var[d] = stats.running_var[d];
          bt.inv_std[d] = 1.0 / std::sqrt(stats.running_var[d] + kBnEpsilon);
        }
      }
      bt.xhat = Tensor({batch_n, dim});
      Tensor out({batch_n, dim});
      for (std::size_t r = 0; r < batch_n; ++r) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double xh = (current.at(r, d) - bt.batch_mean[d]) * bt.inv_std[d];
          bt.xhat.at(r, d) = xh;
          out.at(r, d) = scale[d] * xh + shift[d];
        }
      }
      trace.bn.push_back(std::move(bt));
      ++bn_index;
      current = std::move(out);
    } else {
      Tensor out = current;
      for (double& v : out.values()) v = std::max(0.0, v);
      current = std::move(out);
    }
  }
  trace.features = std::move(current);
  return trace;
}

void apply_running_updates(Model& model, const ExtractorTrace& trace) {
  const double m = model.bn_momentum();
  auto& stats = model.bn_stats();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const BnTrace& bt = trace.bn[i];
    Tensor& mean = stats[i].running_mean;
    Tensor& var = stats[i].running_var;
    for (std::size_t d = 0; d < mean.size(); ++d) {
      mean[d] = (1.0 - m) * mean[d] + m * bt.batch_mean[d];
      var[d] = (1.0 - m) * var[d] + m * bt.batch_var[d];
    }
  }
}

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor p({batch, classes});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* zr = logits.data() + r * classes;
    double zmax = zr[0];
    for (std::size_t c = 1; c < classes; ++c) zmax = std::max(zmax, zr[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(zr[c] - zmax);
    for (std::size_t c = 0; c < classes; ++c) {
      p.at(r, c) = std::exp(zr[c] - zmax) / denom;
    }
  }
  return p;
}

}  // namespace

std::string dense_weight_name(std::size_t layer) { return "fe." + std::to_string(layer) + ".weight"; }
std::string dense_bias_name(std::size_t layer) { return "fe." + std::to_string(layer) + ".bias"; }
std::string bn_scale_name(std::size_t layer) { return "fe." + std::to_string(layer) + ".scale"; }
std::string bn_shift_name(std::size_t layer) { return "fe." + std::to_string(layer) + ".shift"; }

void Model::compute_dims() {
  if (layers_.empty()) throw std::invalid_argument("extractor needs at least one layer");
  bool dim_known = false;
  std::size_t dim = 0;
  bn_layers_.clear();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (const auto* dense = std::get_if<DenseLayer>(&layers_[l])) {
      if (dense->in_dim == 0 || dense->out_dim == 0) {
        throw std::invalid_argument("dense layer fe." + std::to_string(l) +
                                    " has zero dimension");
      }
      if (dim_known && dim != dense->in_dim) {
        throw std::invalid_argument("dense layer fe." + std::to_string(l) + " expects " +
                                    std::to_string(dense->in_dim) + " inputs but receives " +
                                    std::to_string(dim));
      }
      if (!dim_known) {
        input_dim_ = dense->in_dim;
        dim_known = true;
      }
      dim = dense->out_dim;
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layers_[l])) {
      if (bn->dim == 0) {
        throw std::invalid_argument("batchnorm layer fe." + std::to_string(l) +
                                    " has zero dimension");
      }
      if (dim_known && dim != bn->dim) {
        throw std::invalid_argument("batchnorm layer fe." + std::to_string(l) + " expects " +
                                    std::to_string(bn->dim) + " features but receives " +
                                    std::to_string(dim));
      }
      if (!dim_known) {
        input_dim_ = bn->dim;
        dim_known = true;
        dim = bn->dim;
      }
      bn_layers_.push_back(l);
    } else {
      if (!dim_known) {
        throw std::invalid_argument("extractor cannot start with a ReLU layer");
      }
    }
  }
  feature_dim_ = dim;
}

Model::Model(std::vector<LayerSpec> extractor, std::vector<ClassId> class_ids, SplitRng& rng,
             double bn_momentum)
    : layers_(std::move(extractor)), class_ids_(std::move(class_ids)), bn_momentum_(bn_momentum) {
  if (class_ids_.empty()) throw std::invalid_argument("model needs at least one class");
  if (bn_momentum_ <= 0.0 || bn_momentum_ > 1.0) {
    throw std::invalid_argument("bn momentum must be in (0, 1]");
  }
  std::unordered_set<ClassId> unique(class_ids_.begin(), class_ids_.end());
  if (unique.size() != class_ids_.size()) {
    throw std::invalid_argument("duplicate class ids in model");
  }
  compute_dims();

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (const auto* dense = std::get_if<DenseLayer>(&layers_[l])) {
      const double s = 1.0 / std::sqrt(static_cast<double>(dense->in_dim));
      Tensor w({dense->out_dim, dense->in_dim});
      for (double& v : w.values()) v = rng.uniform(-s, s);
      Tensor b({dense->out_dim});
      for (double& v : b.values()) v = rng.uniform(-s, s);
      extractor_.add(dense_weight_name(l), std::move(w));
      extractor_.add(dense_bias_name(l), std::move(b));
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layers_[l])) {
      extractor_.add(bn_scale_name(l), Tensor::full({bn->dim}, 1.0));
      extractor_.add(bn_shift_name(l), Tensor({bn->dim}));
      bn_stats_.push_back(BatchNormStats{Tensor({bn->dim}), Tensor::full({bn->dim}, 1.0)});
    }
  }

  const double s = 1.0 / std::sqrt(static_cast<double>(feature_dim_));
  head_weight_ = Tensor({class_ids_.size(), feature_dim_});
  for (double& v : head_weight_.values()) v = rng.uniform(-s, s);
  head_bias_ = Tensor({class_ids_.size()});
  for (double& v : head_bias_.values()) v = rng.uniform(-s, s);
}

Model Model::from_parts(std::vector<LayerSpec> extractor, ParameterSet extractor_params,
                        Tensor head_weight, Tensor head_bias, std::vector<ClassId> class_ids,
                        std::vector<BatchNormStats> bn_stats, double bn_momentum) {
  Model m;
  m.layers_ = std::move(extractor);
  m.class_ids_ = std::move(class_ids);
  m.bn_momentum_ = bn_momentum;
  if (m.class_ids_.empty()) throw std::invalid_argument("model needs at least one class");
  if (bn_momentum <= 0.0 || bn_momentum > 1.0) {
    throw std::invalid_argument("bn momentum must be in (0, 1]");
  }
  m.compute_dims();

  // Rebuild the canonical parameter layout so entry order and shapes are
  // validated against the architecture.
  ParameterSet expected;
  std::size_t bn_count = 0;
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    if (const auto* dense = std::get_if<DenseLayer>(&m.layers_[l])) {
      expected.add(dense_weight_name(l), Tensor({dense->out_dim, dense->in_dim}));
      expected.add(dense_bias_name(l), Tensor({dense->out_dim}));
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&m.layers_[l])) {
      expected.add(bn_scale_name(l), Tensor({bn->dim}));
      expected.add(bn_shift_name(l), Tensor({bn->dim}));
      ++bn_count;
    }
  }
  require_shape_compatible(expected, extractor_params, "model extractor");
  m.extractor_ = std::move(extractor_params);

  if (head_weight.rank() != 2 || head_weight.dim(0) != m.class_ids_.size() ||
      head_weight.dim(1) != m.feature_dim_) {
    throw std::invalid_argument("head weight shape does not match classes x feature_dim");
  }
  if (head_bias.rank() != 1 || head_bias.dim(0) != m.class_ids_.size()) {
    throw std::invalid_argument("head bias shape does not match class count");
  }
  m.head_weight_ = std::move(head_weight);
  m.head_bias_ = std::move(head_bias);

  if (bn_stats.size() != bn_count) {
    throw std::invalid_argument("expected " + std::to_string(bn_count) +
                                " batchnorm stat entries, got " + std::to_string(bn_stats.size()));
  }
  for (std::size_t i = 0; i < bn_stats.size(); ++i) {
    const auto* bn = std::get_if<BatchNormLayer>(&m.layers_[m.bn_layers_[i]]);
    if (bn_stats[i].running_mean.shape() != std::vector<std::size_t>{bn->dim} ||
        bn_stats[i].running_var.shape() != std::vector<std::size_t>{bn->dim}) {
      throw std::invalid_argument("batchnorm stats shape mismatch at layer fe." +
                                  std::to_string(m.bn_layers_[i]));
    }
    for (double v : bn_stats[i].running_var.values()) {
      if (!(v > 0.0)) throw std::invalid_argument("batchnorm running variance must be positive");
    }
  }
  m.bn_stats_ = std::move(bn_stats);

  std::unordered_set<ClassId> unique(m.class_ids_.begin(), m.class_ids_.end());
  if (unique.size() != m.class_ids_.size()) {
    throw std::invalid_argument("duplicate class ids in model");
  }
  return m;
}

bool Model::knows_class(ClassId id) const {
  return std::find(class_ids_.begin(), class_ids_.end(), id) != class_ids_.end();
}

std::size_t Model::class_row(ClassId id) const {
  for (std::size_t i = 0; i < class_ids_.size(); ++i) {
    if (class_ids_[i] == id) return i;
  }
  throw std::domain_error("class id " + std::to_string(id) + " is unknown to this model");
}

void Model::set_extractor_params(ParameterSet params) {
  require_shape_compatible(extractor_, params, "set_extractor_params");
  extractor_ = std::move(params);
}

ClassifierRows Model::head() const { return ClassifierRows{head_weight_, head_bias_, class_ids_}; }

void Model::set_head(ClassifierRows rows) {
  require_valid_classifier(rows);
  if (rows.feature_dim() != feature_dim_) {
    throw std::invalid_argument("classifier feature dim does not match extractor output");
  }
  head_weight_ = std::move(rows.weight);
  head_bias_ = std::move(rows.bias);
  class_ids_ = std::move(rows.class_ids);
}

ParameterSet Model::trainable_params() const {
  ParameterSet out = extractor_;
  out.add("head.weight", head_weight_);
  out.add("head.bias", head_bias_);
  return out;
}

void Model::set_trainable_params(const ParameterSet& params) {
  require_shape_compatible(trainable_params(), params, "set_trainable_params");
  for (std::size_t i = 0; i < extractor_.size(); ++i) {
    extractor_.tensor_at(i) = params.entry(i).tensor;
  }
  head_weight_ = params.at("head.weight");
  head_bias_ = params.at("head.bias");
}

void Model::reset_bn_stats() {
  for (BatchNormStats& s : bn_stats_) {
    s.running_mean = Tensor(s.running_mean.shape());
    s.running_var = Tensor::full(s.running_var.shape(), 1.0);
  }
}

ForwardResult forward(Model& model, const Tensor& batch, ForwardMode mode) {
  if (mode == ForwardMode::kEval) return forward_eval(model, batch);
  ExtractorTrace trace = run_extractor(model, batch, /*use_batch_stats=*/true);
  if (mode == ForwardMode::kTrain) apply_running_updates(model, trace);
  Tensor logits = affine(trace.features, model.head_weight(), model.head_bias());
  return ForwardResult{std::move(trace.features), std::move(logits)};
}

ForwardResult forward_eval(const Model& model, const Tensor& batch) {
  ExtractorTrace trace = run_extractor(model, batch, /*use_batch_stats=*/false);
  Tensor logits = affine(trace.features, model.head_weight(), model.head_bias());
  return ForwardResult{std::move(trace.features), std::move(logits)};
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& target_rows) {
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (target_rows.size() != batch) {
    throw std::invalid_argument("one target row per batch sample required");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* zr = logits.data() + r * classes;
    double zmax = zr[0];
    for (std::size_t c = 1; c < classes; ++c) zmax = std::max(zmax, zr[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(zr[c] - zmax);
    total += std::log(denom) + zmax - zr[target_rows[r]];
  }
  return total / static_cast<double>(batch);
}

BackwardResult backward(Model& model, const Tensor& batch, const std::vector<ClassId>& labels,
                        ForwardMode mode) {
  if (mode == ForwardMode::kEval) {
    throw std::invalid_argument("backward requires TRAIN-mode forward semantics");
  }
  if (labels.size() != batch.dim(0)) {
    throw std::invalid_argument("one label per batch sample required");
  }
  std::vector<std::size_t> rows(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) rows[i] = model.class_row(labels[i]);

  ExtractorTrace trace = run_extractor(model, batch, /*use_batch_stats=*/true);
  if (mode == ForwardMode::kTrain) apply_running_updates(model, trace);

  const Tensor& features = trace.features;
  Tensor logits = affine(features, model.head_weight(), model.head_bias());
  const double loss = softmax_cross_entropy(logits, rows);

  const std::size_t batch_n = batch.dim(0);
  Tensor dlogits = softmax_rows(logits);
  for (std::size_t r = 0; r < batch_n; ++r) dlogits.at(r, rows[r]) -= 1.0;
  for (double& v : dlogits.values()) v /= static_cast<double>(batch_n);

  Tensor d_head_w = matmul_tn(dlogits, features);
  Tensor d_head_b = column_sums(dlogits);
  Tensor dcurrent = matmul_nn(dlogits, model.head_weight());

  const auto& layers = model.extractor_layers();
  ParameterSet layer_grads;  // gathered in reverse, re-emitted in layer order
  std::size_t bn_index = trace.bn.size();
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Tensor& input = trace.layer_inputs[li];
    if (std::holds_alternative<DenseLayer>(layers[li])) {
      Tensor dw = matmul_tn(dcurrent, input);
      Tensor db = column_sums(dcurrent);
      dcurrent = matmul_nn(dcurrent, model.extractor_params().at(dense_weight_name(li)));
      layer_grads.add(dense_weight_name(li), std::move(dw));
      layer_grads.add(dense_bias_name(li), std::move(db));
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layers[li])) {
      --bn_index;
      const BnTrace& bt = trace.bn[bn_index];
      const Tensor& scale = model.extractor_params().at(bn_scale_name(li));
      const std::size_t dim = bn->dim;
      Tensor dscale({dim});
      Tensor dshift({dim});
      Tensor dxhat({batch_n, dim});
      for (std::size_t r = 0; r < batch_n; ++r) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double dy = dcurrent.at(r, d);
          dscale[d] += dy * bt.xhat.at(r, d);
          dshift[d] += dy;
          dxhat.at(r, d) = dy * scale[d];
        }
      }
      // Full batch-statistics backward:
      // dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
      Tensor dx({batch_n, dim});
      for (std::size_t d = 0; d < dim; ++d) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t r = 0; r < batch_n; ++r) {
          sum_dxhat += dxhat.at(r, d);
          sum_dxhat_xhat += dxhat.at(r, d) * bt.xhat.at(r, d);
        }
        const double mean_dxhat = sum_dxhat / static_cast<double>(batch_n);
        const double mean_dxhat_xhat = sum_dxhat_xhat / static_cast<double>(batch_n);
        for (std::size_t r = 0; r < batch_n; ++r) {
          dx.at(r, d) =
              bt.inv_std[d] * (dxhat.at(r, d) - mean_dxhat - bt.xhat.at(r, d) * mean_dxhat_xhat);
        }
      }
      dcurrent = std::move(dx);
      layer_grads.add(bn_scale_name(li), std::move(dscale));
      layer_grads.add(bn_shift_name(li), std::move(dshift));
    } else {
      for (std::size_t i = 0; i < dcurrent.size(); ++i) {
        if (input.values()[i] <= 0.0) dcurrent[i] = 0.0;
      }
    }
  }

  ParameterSet grads;
  for (const auto& entry : model.extractor_params().entries()) {
    grads.add(entry.name, layer_grads.at(entry.name));
  }
  grads.add("head.weight", std::move(d_head_w));
  grads.add("head.bias", std::move(d_head_b));
  return BackwardResult{std::move(grads), loss};
}

MomentumState MomentumState::zeros_like(const ParameterSet& params) {
  MomentumState state;
  for (const auto& entry : params.entries()) {
    state.buffers.add(entry.name, Tensor(entry.tensor.shape()));
  }
  return state;
}

void sgd_step(ParameterSet& params, const ParameterSet& grads, MomentumState& momentum, double lr,
              double momentum_coef) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (momentum_coef < 0.0 || momentum_coef >= 1.0) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  require_shape_compatible(params, grads, "sgd_step grads");
  require_shape_compatible(params, momentum.buffers, "sgd_step momentum");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.tensor_at(i);
    const Tensor& g = grads.entry(i).tensor;
    Tensor& v = momentum.buffers.tensor_at(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum_coef * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

Model expand_classifier(const Model& model, const std::vector<ClassId>& new_class_ids,
                        SplitRng& rng) {
  Model out = model;
  if (new_class_ids.empty()) return out;
  std::unordered_set<ClassId> incoming;
  for (ClassId id : new_class_ids) {
    if (model.knows_class(id)) {
      throw std::invalid_argument("class id " + std::to_string(id) + " already present");
    }
    if (!incoming.insert(id).second) {
      throw std::invalid_argument("class id " + std::to_string(id) + " repeated in expansion");
    }
  }

  const std::size_t old_rows = model.num_classes();
  const std::size_t new_rows = old_rows + new_class_ids.size();
  const std::size_t fdim = model.feature_dim();
  const double s = 1.0 / std::sqrt(static_cast<double>(fdim));

  Tensor weight({new_rows, fdim});
  std::copy(model.head_weight().values().begin(), model.head_weight().values().end(),
            weight.values().begin());
  for (std::size_t i = old_rows * fdim; i < weight.size(); ++i) weight[i] = rng.uniform(-s, s);

  Tensor bias({new_rows});
  std::copy(model.head_bias().values().begin(), model.head_bias().values().end(),
            bias.values().begin());
  for (std::size_t i = old_rows; i < new_rows; ++i) bias[i] = rng.uniform(-s, s);

  std::vector<ClassId> ids = model.class_ids();
  ids.insert(ids.end(), new_class_ids.begin(), new_class_ids.end());
  out.set_head(ClassifierRows{std::move(weight), std::move(bias), std::move(ids)});
  return out;
}

}  // namespace mnb
