#include "mnb/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mnb {

namespace {

void require_valid_shape(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw std::invalid_argument("tensor dimensions must be positive, got shape " +
                                  shape_to_string(shape));
    }
  }
}

}  // namespace

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  require_valid_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require_valid_shape(shape_);
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_to_string(shape_));
  }
  if (!all_finite()) {
    throw std::invalid_argument("tensor entries must be finite");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = value;
  return t;
}

double& Tensor::at(std::size_t row, std::size_t col) {
  if (rank() != 2) throw std::invalid_argument("Tensor::at(row, col) requires rank 2");
  return data_[row * shape_[1] + col];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw std::invalid_argument("Tensor::at(row, col) requires rank 2");
  return data_[row * shape_[1] + col];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ParameterSet::add(std::string name, Tensor tensor) {
  if (has(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

bool ParameterSet::has(std::string_view name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

const Tensor& ParameterSet::at(std::string_view name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

Tensor& ParameterSet::at(std::string_view name) {
  for (Entry& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.name);
  return out;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  out.reserve(total_size());
  for (const Entry& e : entries_) {
    out.insert(out.end(), e.tensor.values().begin(), e.tensor.values().end());
  }
  return out;
}

bool shape_compatible(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.entry(i).name != b.entry(i).name) return false;
    if (!a.entry(i).tensor.same_shape(b.entry(i).tensor)) return false;
  }
  return true;
}

void require_shape_compatible(const ParameterSet& a, const ParameterSet& b,
                              std::string_view context) {
  if (!shape_compatible(a, b)) {
    throw std::invalid_argument(std::string(context) +
                                ": parameter sets are not shape-compatible");
  }
}

}  // namespace mnb
