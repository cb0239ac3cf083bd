#include "mnb/weightspace.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mnb {

namespace {

ParameterSet lincomb(double a, const ParameterSet& x, double b, const ParameterSet& y) {
  ParameterSet out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Tensor& xt = x.entry(i).tensor;
    const Tensor& yt = y.entry(i).tensor;
    Tensor t(xt.shape());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = a * xt[j] + b * yt[j];
    out.add(x.entry(i).name, std::move(t));
  }
  return out;
}

ParameterSet copy_of(const ParameterSet& x) { return x; }

const Tensor& shared_entry(const ParameterSet& set, const std::string& name,
                           const char* which) {
  if (!set.has(name)) {
    throw std::invalid_argument(std::string("shared name '") + name + "' missing from " + which);
  }
  return set.at(name);
}

}  // namespace

ParameterSet uniform_merge_step(const ParameterSet& theta_base, const ParameterSet& theta_k,
                                std::size_t k) {
  if (k < 1) throw std::invalid_argument("merge stage index must be >= 1");
  if (k == 1 && theta_base.empty()) return copy_of(theta_k);
  require_shape_compatible(theta_base, theta_k, "uniform_merge_step");
  const double dk = static_cast<double>(k);
  return lincomb((dk - 1.0) / dk, theta_base, 1.0 / dk, theta_k);
}

ParameterSet ema_merge_step(const ParameterSet& theta_base, const ParameterSet& theta_k,
                            double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("ema smoothing factor must lie in (0, 1)");
  }
  require_shape_compatible(theta_base, theta_k, "ema_merge_step");
  return lincomb(1.0 - alpha, theta_base, alpha, theta_k);
}

IntraMergeAccumulator intra_merge_step(const IntraMergeAccumulator& acc,
                                       const ParameterSet& snapshot) {
  IntraMergeAccumulator next;
  if (acc.count == 0) {
    next.theta_avg = copy_of(snapshot);
    next.count = 1;
    return next;
  }
  require_shape_compatible(acc.theta_avg, snapshot, "intra_merge_step");
  const double n = static_cast<double>(acc.count);
  next.theta_avg = lincomb(n / (n + 1.0), acc.theta_avg, 1.0 / (n + 1.0), snapshot);
  next.count = acc.count + 1;
  return next;
}

ClassifierRows concat_classifier(const std::optional<ClassifierRows>& phi_base,
                                 const ClassifierRows& phi_current,
                                 const std::vector<ClassId>& current_class_ids) {
  require_valid_classifier(phi_current);
  if (current_class_ids.empty()) {
    throw std::invalid_argument("concat_classifier needs at least one current class");
  }

  std::unordered_set<ClassId> base_ids;
  std::size_t base_rows = 0;
  std::size_t fdim = phi_current.feature_dim();
  if (phi_base) {
    require_valid_classifier(*phi_base);
    if (phi_base->feature_dim() != fdim) {
      throw std::invalid_argument("classifier feature dims differ between base and current");
    }
    base_rows = phi_base->num_rows();
    base_ids.insert(phi_base->class_ids.begin(), phi_base->class_ids.end());
  }

  ClassifierRows out;
  out.weight = Tensor({base_rows + current_class_ids.size(), fdim});
  out.bias = Tensor({base_rows + current_class_ids.size()});
  out.class_ids.reserve(base_rows + current_class_ids.size());

  if (phi_base) {
    std::copy(phi_base->weight.values().begin(), phi_base->weight.values().end(),
              out.weight.values().begin());
    std::copy(phi_base->bias.values().begin(), phi_base->bias.values().end(),
              out.bias.values().begin());
    out.class_ids = phi_base->class_ids;
  }

  for (std::size_t i = 0; i < current_class_ids.size(); ++i) {
    const ClassId id = current_class_ids[i];
    if (base_ids.count(id) != 0) {
      throw std::invalid_argument("class id " + std::to_string(id) +
                                  " already present in base classifier");
    }
    std::size_t src_row = phi_current.num_rows();
    for (std::size_t r = 0; r < phi_current.num_rows(); ++r) {
      if (phi_current.class_ids[r] == id) {
        src_row = r;
        break;
      }
    }
    if (src_row == phi_current.num_rows()) {
      throw std::invalid_argument("class id " + std::to_string(id) +
                                  " missing from current classifier");
    }
    const std::size_t dst_row = base_rows + i;
    for (std::size_t c = 0; c < fdim; ++c) {
      out.weight.at(dst_row, c) = phi_current.weight.at(src_row, c);
    }
    out.bias[dst_row] = phi_current.bias[src_row];
    out.class_ids.push_back(id);
  }
  require_valid_classifier(out);
  return out;
}

Displacement displacement(const ParameterSet& theta, const ParameterSet& theta_base,
                          const std::vector<std::string>& shared_names) {
  Displacement out;
  double sq = 0.0;
  for (const std::string& name : shared_names) {
    const Tensor& a = shared_entry(theta, name, "theta");
    const Tensor& b = shared_entry(theta_base, name, "theta_base");
    if (!a.same_shape(b)) {
      throw std::invalid_argument("shared name '" + name + "' has mismatched shapes");
    }
    Tensor d(a.shape());
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] = a[j] - b[j];
      sq += d[j] * d[j];
    }
    out.delta.add(name, std::move(d));
  }
  out.norm = std::sqrt(sq);
  return out;
}

ParameterSet bound_update(const ParameterSet& theta, const ParameterSet& theta_base,
                          const std::vector<std::string>& shared_names, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bounding radius must be positive");
  Displacement disp = displacement(theta, theta_base, shared_names);
  if (disp.norm <= radius) return copy_of(theta);

  const double scale = radius / disp.norm;
  ParameterSet out;
  for (const auto& entry : theta.entries()) {
    if (disp.delta.has(entry.name)) {
      const Tensor& base = theta_base.at(entry.name);
      const Tensor& d = disp.delta.at(entry.name);
      Tensor t(entry.tensor.shape());
      for (std::size_t j = 0; j < t.size(); ++j) t[j] = base[j] + scale * d[j];
      out.add(entry.name, std::move(t));
    } else {
      out.add(entry.name, entry.tensor);
    }
  }
  return out;
}

}  // namespace mnb
