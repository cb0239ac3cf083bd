#include "mnb/exemplar.hpp"

#include <cmath>
#include <limits>

namespace mnb {

std::size_t ExemplarMemory::total() const {
  std::size_t n = 0;
  for (const auto& [id, indices] : per_class) n += indices.size();
  return n;
}

std::vector<ClassId> ExemplarMemory::classes() const {
  std::vector<ClassId> out;
  out.reserve(per_class.size());
  for (const auto& [id, indices] : per_class) out.push_back(id);
  return out;
}

std::vector<std::size_t> ExemplarMemory::all_indices() const {
  std::vector<std::size_t> out;
  out.reserve(total());
  for (const auto& [id, indices] : per_class) {
    out.insert(out.end(), indices.begin(), indices.end());
  }
  return out;
}

std::vector<std::size_t> select_exemplars(const Model& model, const Dataset& train,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t m, ExemplarMethod method,
                                          std::uint64_t seed) {
  if (candidates.empty() || m == 0) return {};
  const std::size_t take = std::min(m, candidates.size());

  if (method == ExemplarMethod::kRandom) {
    std::vector<std::size_t> pool = candidates;
    SplitRng rng(seed);
    rng.shuffle(pool);
    pool.resize(take);
    return pool;
  }

  const Tensor features = forward_eval(model, train.gather(candidates)).features;
  const std::size_t n = candidates.size();
  const std::size_t fdim = features.dim(1);

  std::vector<double> class_mean(fdim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < fdim; ++d) class_mean[d] += features.at(i, d);
  }
  for (double& v : class_mean) v /= static_cast<double>(n);

  std::vector<std::size_t> selected;
  std::vector<bool> used(n, false);
  std::vector<double> selected_sum(fdim, 0.0);
  for (std::size_t step = 1; step <= take; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      double dist_sq = 0.0;
      for (std::size_t d = 0; d < fdim; ++d) {
        const double diff =
            class_mean[d] - (selected_sum[d] + features.at(i, d)) / static_cast<double>(step);
        dist_sq += diff * diff;
      }
      if (dist_sq < best) {  // ties resolve to the earliest candidate
        best = dist_sq;
        best_i = i;
      }
    }
    used[best_i] = true;
    selected.push_back(candidates[best_i]);
    for (std::size_t d = 0; d < fdim; ++d) selected_sum[d] += features.at(best_i, d);
  }
  return selected;
}

}  // namespace mnb
