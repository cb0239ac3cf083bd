#pragma once

// Independent reference implementations the test suites check the library
// against. Everything here recomputes results from first principles and must
// not call into the code paths under test (finite differences excepted, which
// probe the public loss surface).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mnb/nn.hpp"
#include "mnb/tensor.hpp"

namespace oracles {

/// Naive per-sample forward pass over the same weights; batch statistics when
/// `batch_stats` is set, running statistics otherwise.
mnb::Tensor reference_logits(const mnb::Model& model, const mnb::Tensor& batch, bool batch_stats);

/// Frozen-stats training loss at the model's current parameters.
double frozen_loss(mnb::Model& model, const mnb::Tensor& batch,
                   const std::vector<mnb::ClassId>& labels);

/// Central finite differences of the frozen-stats loss wrt every trainable
/// parameter.
mnb::ParameterSet fd_gradients(mnb::Model& model, const mnb::Tensor& batch,
                               const std::vector<mnb::ClassId>& labels, double step);

/// Elementwise arithmetic mean of the given parameter sets.
mnb::ParameterSet offline_mean(const std::vector<mnb::ParameterSet>& sets);

double flat_l2(const mnb::ParameterSet& params);
double flat_l2_diff(const mnb::ParameterSet& a, const mnb::ParameterSet& b);
double max_abs_diff(const mnb::ParameterSet& a, const mnb::ParameterSet& b);
bool bitwise_equal(const mnb::Tensor& a, const mnb::Tensor& b);
bool bitwise_equal(const mnb::ParameterSet& a, const mnb::ParameterSet& b);

/// Greedy herding on a feature matrix: returns positions into the candidate
/// list, recomputing the partial means from scratch at every step.
std::vector<std::size_t> brute_force_herding(const mnb::Tensor& features, std::size_t m);

/// Linear CKA via explicit Gram matrices and double-loop HSIC sums.
double gram_cka(const mnb::Tensor& x, const mnb::Tensor& y);

/// Random shape-compatible parameter set for property tests.
mnb::ParameterSet random_parameter_set(std::uint64_t seed, double scale = 1.0);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace oracles
