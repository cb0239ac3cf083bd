#include "mnb/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace mnb {

namespace {

constexpr unsigned char kMagic[4] = {0x4D, 0x4E, 0x42, 0x57};  // "MNBW"
constexpr std::uint16_t kVersion = 1;
constexpr unsigned char kDtypeF64 = 0;

constexpr const char* kArchEntry = "__layers__";
constexpr double kArchDense = 0.0;
constexpr double kArchBatchNorm = 1.0;
constexpr double kArchRelu = 2.0;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<unsigned char>(v & 0xFF));
    buf_.push_back(static_cast<unsigned char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      buf_.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFF));
    }
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }

  void entry(const std::string& name, const Tensor& tensor) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("tensor name too long for checkpoint format");
    }
    if (tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw std::invalid_argument("tensor rank too large for checkpoint format");
    }
    u16(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    u8(kDtypeF64);
    u8(static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("tensor dimension too large for checkpoint format");
      }
      u32(static_cast<std::uint32_t>(d));
    }
    for (double v : tensor.values()) f64(v);
  }

  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw std::runtime_error("short write to '" + path.string() + "'");
  }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == buf_.size(); }

  std::uint8_t u8() {
    need(1, "value");
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint16_t u16() {
    need(2, "value");
    std::uint16_t v = static_cast<std::uint16_t>(
        static_cast<unsigned char>(buf_[pos_]) |
        (static_cast<unsigned char>(buf_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4, "value");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8, "tensor payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s(reinterpret_cast<const char*>(buf_.data()) + pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(what, pos_); }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > buf_.size()) {
      throw FormatError(std::string("file truncated while reading ") + what, pos_);
    }
  }

  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void write_header(ByteWriter& w, std::size_t entry_count) {
  w.bytes(kMagic, sizeof(kMagic));
  w.u16(kVersion);
  if (entry_count > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("too many entries for checkpoint format");
  }
  w.u32(static_cast<std::uint32_t>(entry_count));
}

std::uint32_t read_header(ByteReader& r) {
  const std::size_t magic_pos = r.pos();
  unsigned char magic[4];
  for (unsigned char& c : magic) c = r.u8();
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad magic, not an MNBW checkpoint", magic_pos);
  }
  const std::size_t version_pos = r.pos();
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_pos);
  }
  return r.u32();
}

ParameterSet read_entries(ByteReader& r, std::uint32_t count) {
  ParameterSet out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const std::size_t dtype_pos = r.pos();
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF64) {
      throw FormatError("unsupported dtype " + std::to_string(dtype) + " for entry '" + name + "'",
                        dtype_pos);
    }
    const std::uint8_t rank = r.u8();
    std::vector<std::size_t> shape(rank);
    for (std::uint8_t d = 0; d < rank; ++d) shape[d] = r.u32();
    const std::size_t payload_pos = r.pos();
    std::vector<double> data(shape_product(shape));
    for (double& v : data) v = r.f64();
    try {
      out.add(std::move(name), Tensor(std::move(shape), std::move(data)));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), payload_pos);
    }
  }
  return out;
}

Tensor encode_arch(const std::vector<LayerSpec>& layers) {
  std::vector<double> codes;
  for (const LayerSpec& spec : layers) {
    if (const auto* dense = std::get_if<DenseLayer>(&spec)) {
      codes.push_back(kArchDense);
      codes.push_back(static_cast<double>(dense->in_dim));
      codes.push_back(static_cast<double>(dense->out_dim));
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&spec)) {
      codes.push_back(kArchBatchNorm);
      codes.push_back(static_cast<double>(bn->dim));
    } else {
      codes.push_back(kArchRelu);
    }
  }
  const std::size_t count = codes.size();
  return Tensor({count}, std::move(codes));
}

std::vector<LayerSpec> decode_arch(const Tensor& arch, std::size_t file_offset) {
  std::vector<LayerSpec> layers;
  const auto& codes = arch.values();
  std::size_t i = 0;
  auto take = [&](const char* what) {
    if (i >= codes.size()) {
      throw FormatError(std::string("architecture entry truncated, expected ") + what,
                        file_offset);
    }
    const double v = codes[i++];
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw FormatError("architecture entry holds a non-integer code", file_offset);
    }
    return static_cast<std::size_t>(v);
  };
  while (i < codes.size()) {
    const std::size_t code = take("layer code");
    if (code == static_cast<std::size_t>(kArchDense)) {
      const std::size_t in = take("dense input dim");
      const std::size_t out = take("dense output dim");
      layers.push_back(DenseLayer{in, out});
    } else if (code == static_cast<std::size_t>(kArchBatchNorm)) {
      layers.push_back(BatchNormLayer{take("batchnorm dim")});
    } else if (code == static_cast<std::size_t>(kArchRelu)) {
      layers.push_back(ReluLayer{});
    } else {
      throw FormatError("unknown layer code " + std::to_string(code), file_offset);
    }
  }
  return layers;
}

std::string bn_mean_name(std::size_t layer) {
  return "bn." + std::to_string(layer) + ".running_mean";
}
std::string bn_var_name(std::size_t layer) { return "bn." + std::to_string(layer) + ".running_var"; }

}  // namespace

void save_parameter_set(const ParameterSet& params, const std::filesystem::path& path) {
  ByteWriter w;
  write_header(w, params.size());
  for (const auto& entry : params.entries()) w.entry(entry.name, entry.tensor);
  w.flush(path);
}

ParameterSet load_parameter_set(const std::filesystem::path& path) {
  ByteReader r(path);
  const std::uint32_t count = read_header(r);
  ParameterSet out = read_entries(r, count);
  if (!r.at_end()) r.fail("trailing bytes after parameter entries");
  return out;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  ByteWriter w;
  write_header(w, 1 + model.extractor_params().size() + 2);
  w.entry(kArchEntry, encode_arch(model.extractor_layers()));
  for (const auto& entry : model.extractor_params().entries()) w.entry(entry.name, entry.tensor);
  w.entry("head.weight", model.head_weight());
  w.entry("head.bias", model.head_bias());

  // classifier block
  w.u32(static_cast<std::uint32_t>(model.class_ids().size()));
  for (ClassId id : model.class_ids()) w.u32(id);

  // batchnorm-stats block, entry encoding
  w.u32(static_cast<std::uint32_t>(1 + 2 * model.bn_stats().size()));
  w.entry("bn.momentum", Tensor::scalar(model.bn_momentum()));
  for (std::size_t i = 0; i < model.bn_stats().size(); ++i) {
    const std::size_t layer = model.bn_layer_indices()[i];
    w.entry(bn_mean_name(layer), model.bn_stats()[i].running_mean);
    w.entry(bn_var_name(layer), model.bn_stats()[i].running_var);
  }
  w.flush(path);
}

Model load_model(const std::filesystem::path& path) {
  ByteReader r(path);
  const std::uint32_t count = read_header(r);
  if (count < 3) r.fail("model checkpoint needs architecture, extractor and head entries");
  const std::size_t arch_pos = r.pos();
  ParameterSet entries = read_entries(r, count);
  if (entries.entry(0).name != kArchEntry) {
    throw FormatError("first entry of a model checkpoint must be the architecture", arch_pos);
  }
  std::vector<LayerSpec> layers = decode_arch(entries.entry(0).tensor, arch_pos);

  const std::size_t ids_pos = r.pos();
  const std::uint32_t num_ids = r.u32();
  std::vector<ClassId> class_ids(num_ids);
  for (ClassId& id : class_ids) id = r.u32();

  const std::size_t bn_pos = r.pos();
  const std::uint32_t bn_count = r.u32();
  ParameterSet bn_entries = read_entries(r, bn_count);
  if (!r.at_end()) r.fail("trailing bytes after batchnorm block");

  if (entries.size() < 3 || entries.entry(entries.size() - 2).name != "head.weight" ||
      entries.entry(entries.size() - 1).name != "head.bias") {
    throw FormatError("model checkpoint must end with head.weight and head.bias entries",
                      ids_pos);
  }
  ParameterSet extractor;
  for (std::size_t i = 1; i + 2 < entries.size(); ++i) {
    extractor.add(entries.entry(i).name, entries.entry(i).tensor);
  }

  if (!bn_entries.has("bn.momentum")) {
    throw FormatError("batchnorm block is missing bn.momentum", bn_pos);
  }
  const Tensor& momentum_entry = bn_entries.at("bn.momentum");
  if (momentum_entry.size() != 1) {
    throw FormatError("bn.momentum must hold a single value", bn_pos);
  }

  std::vector<BatchNormStats> bn_stats;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!std::holds_alternative<BatchNormLayer>(layers[l])) continue;
    if (!bn_entries.has(bn_mean_name(l)) || !bn_entries.has(bn_var_name(l))) {
      throw FormatError("batchnorm block is missing stats for layer fe." + std::to_string(l),
                        bn_pos);
    }
    bn_stats.push_back(BatchNormStats{bn_entries.at(bn_mean_name(l)), bn_entries.at(bn_var_name(l))});
  }
  if (bn_entries.size() != 1 + 2 * bn_stats.size()) {
    throw FormatError("batchnorm block has unexpected entries", bn_pos);
  }

  try {
    return Model::from_parts(std::move(layers), std::move(extractor),
                             entries.at("head.weight"), entries.at("head.bias"),
                             std::move(class_ids), std::move(bn_stats), momentum_entry[0]);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent model checkpoint: ") + e.what(), ids_pos);
  }
}

bool is_model_checkpoint(const std::filesystem::path& path) {
  ByteReader r(path);
  const std::uint32_t count = read_header(r);
  if (count == 0) return false;
  const std::uint16_t name_len = r.u16();
  return r.str(name_len) == kArchEntry;
}

}  // namespace mnb
