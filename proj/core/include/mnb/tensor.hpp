#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mnb {

/// Dense row-major tensor of 64-bit reals. Rank 0 is a scalar (one element).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor full(std::vector<std::size_t> shape, double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // rank-2 access
  double& at(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

/// Ordered collection of uniquely named tensors. Entry order is part of the
/// value: merging, SGD and serialization all walk entries in insertion order.
/// Two sets are shape-compatible iff their name sequences and per-name shapes
/// are identical.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  ParameterSet() = default;

  void add(std::string name, Tensor tensor);  // throws on duplicate name
  bool has(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  Tensor& tensor_at(std::size_t i) { return entries_.at(i).tensor; }

  std::vector<std::string> names() const;
  std::size_t total_size() const;          // sum of entry element counts
  std::vector<double> flatten() const;     // all values concatenated in entry order

 private:
  std::vector<Entry> entries_;
};

bool shape_compatible(const ParameterSet& a, const ParameterSet& b);
void require_shape_compatible(const ParameterSet& a, const ParameterSet& b,
                              std::string_view context);

}  // namespace mnb
