#include "mnb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mnb {

void MetricsLog::require_complete() const {
  if (stages.empty()) throw std::invalid_argument("metrics log is empty");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].stage_index != i + 1) {
      throw std::invalid_argument("metrics log is missing stage " + std::to_string(i + 1));
    }
  }
}

double average_incremental_accuracy(const MetricsLog& log) {
  log.require_complete();
  double sum = 0.0;
  for (const StageEval& stage : log.stages) sum += stage.overall_acc;
  return sum / static_cast<double>(log.stages.size());
}

double forgetting(const MetricsLog& log) {
  log.require_complete();
  const StageEval& last = log.stages.back();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < log.stages.size(); ++k) {
    for (ClassId id : log.stages[k].new_classes) {
      sum += log.stages[k].per_class_acc.at(id) - last.per_class_acc.at(id);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double average_new_accuracy(const MetricsLog& log) {
  log.require_complete();
  double sum = 0.0;
  for (const StageEval& stage : log.stages) sum += stage.new_acc;
  return sum / static_cast<double>(log.stages.size());
}

std::vector<std::vector<double>> task_update_cosine_matrix(
    const std::vector<std::vector<double>>& update_vectors) {
  const std::size_t k = update_vectors.size();
  for (const auto& u : update_vectors) {
    if (u.size() != update_vectors.front().size()) {
      throw std::invalid_argument("update vectors must share one dimension");
    }
  }
  std::vector<double> norms(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double sq = 0.0;
    for (double v : update_vectors[i]) sq += v * v;
    norms[i] = std::sqrt(sq);
  }
  std::vector<std::vector<double>> out(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    out[i][i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < update_vectors[i].size(); ++d) {
        dot += update_vectors[i][d] * update_vectors[j][d];
      }
      out[i][j] = out[j][i] = dot / (norms[i] * norms[j]);
    }
  }
  return out;
}

namespace {

// Column-centered copy.
Tensor center_columns(const Tensor& x) {
  const std::size_t n = x.dim(0), f = x.dim(1);
  Tensor out = x;
  for (std::size_t c = 0; c < f; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x.at(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) out.at(r, c) -= mean;
  }
  return out;
}

// ||A^T B||_F^2 for column-centered matrices with matching row counts.
double cross_norm_sq(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0), fa = a.dim(1), fb = b.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < fa; ++i) {
    for (std::size_t j = 0; j < fb; ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r) dot += a.at(r, i) * b.at(r, j);
      total += dot * dot;
    }
  }
  return total;
}

}  // namespace

double linear_cka(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2) throw std::invalid_argument("linear_cka expects matrices");
  if (x.dim(0) != y.dim(0)) {
    throw std::invalid_argument("linear_cka inputs must pair the same samples");
  }
  if (x.dim(0) < 2) throw std::invalid_argument("linear_cka needs at least two samples");

  const Tensor xc = center_columns(x);
  const Tensor yc = center_columns(y);
  const double xx = std::sqrt(cross_norm_sq(xc, xc));
  const double yy = std::sqrt(cross_norm_sq(yc, yc));
  if (xx == 0.0 || yy == 0.0) return 0.0;
  const double value = cross_norm_sq(xc, yc) / (xx * yy);
  return std::clamp(value, 0.0, 1.0);
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  log.require_complete();
  out << "stage,seen_classes,overall_acc,new_acc\n";
  for (const StageEval& stage : log.stages) {
    out << stage.stage_index << ',' << stage.seen_classes.size() << ','
        << format_double(stage.overall_acc) << ',' << format_double(stage.new_acc) << '\n';
  }
  out << "avg_inc_acc," << format_double(average_incremental_accuracy(log)) << '\n';
  out << "forgetting," << format_double(forgetting(log)) << '\n';
  out << "avg_new_acc," << format_double(average_new_accuracy(log)) << '\n';
}

void write_matrix_csv(std::ostream& out, const std::vector<std::vector<double>>& matrix) {
  for (const auto& row : matrix) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

}  // namespace mnb
