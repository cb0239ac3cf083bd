#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "mnb/nn.hpp"
#include "mnb/tensor.hpp"

namespace mnb {

/// Malformed checkpoint; `offset()` is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Checkpoint container: magic "MNBW", u16 version = 1, u32 entry count, then
// per entry u16 name length + name, u8 dtype (0 = f64), u8 rank, rank x u32
// dims and a row-major f64 payload. All integers little-endian. Model files
// continue with a classifier block (u32 count + u32 class ids) and a
// batchnorm-stats block in the same entry encoding.

void save_parameter_set(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameter_set(const std::filesystem::path& path);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// True when the checkpoint carries the trailing model blocks.
bool is_model_checkpoint(const std::filesystem::path& path);

}  // namespace mnb
