#include "mnb/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mnb/metrics.hpp"

namespace mnb {

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + value + "'");
  }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a real number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string field;
  while (std::getline(ss, field, ',')) {
    field = trim(field);
    if (field.empty()) continue;
    out.push_back(parse_size(key, field));
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(MethodPreset method) {
  switch (method) {
    case MethodPreset::kFinetune: return "FINETUNE";
    case MethodPreset::kMnb: return "MNB";
    case MethodPreset::kMnbNoInter: return "MNB_NO_INTER";
    case MethodPreset::kMnbNoIntra: return "MNB_NO_INTRA";
    case MethodPreset::kMnbNoBound: return "MNB_NO_BOUND";
    case MethodPreset::kMnbEma: return "MNB_EMA";
  }
  return "MNB";
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kBlobs: return "blobs";
    case DatasetKind::kIdx: return "idx";
    case DatasetKind::kCsv: return "csv";
  }
  return "blobs";
}

std::string to_string(BnStrategy strategy) {
  switch (strategy) {
    case BnStrategy::kOurs: return "OURS";
    case BnStrategy::kReset: return "RESET";
    case BnStrategy::kNoChange: return "NOCHANGE";
  }
  return "OURS";
}

std::string to_string(ExemplarMethod method) {
  return method == ExemplarMethod::kHerding ? "HERDING" : "RANDOM";
}

MethodPreset method_from_string(const std::string& text) {
  if (text == "FINETUNE") return MethodPreset::kFinetune;
  if (text == "MNB") return MethodPreset::kMnb;
  if (text == "MNB_NO_INTER") return MethodPreset::kMnbNoInter;
  if (text == "MNB_NO_INTRA") return MethodPreset::kMnbNoIntra;
  if (text == "MNB_NO_BOUND") return MethodPreset::kMnbNoBound;
  if (text == "MNB_EMA") return MethodPreset::kMnbEma;
  throw ConfigError("key 'method': unknown preset '" + text + "'");
}

DatasetKind dataset_from_string(const std::string& text) {
  if (text == "blobs") return DatasetKind::kBlobs;
  if (text == "idx") return DatasetKind::kIdx;
  if (text == "csv") return DatasetKind::kCsv;
  throw ConfigError("key 'dataset': unknown kind '" + text + "'");
}

BnStrategy bn_strategy_from_string(const std::string& text) {
  if (text == "OURS") return BnStrategy::kOurs;
  if (text == "RESET") return BnStrategy::kReset;
  if (text == "NOCHANGE") return BnStrategy::kNoChange;
  throw ConfigError("key 'bn_strategy': unknown strategy '" + text + "'");
}

ExemplarMethod exemplar_method_from_string(const std::string& text) {
  if (text == "HERDING") return ExemplarMethod::kHerding;
  if (text == "RANDOM") return ExemplarMethod::kRandom;
  throw ConfigError("key 'exemplar_method': unknown method '" + text + "'");
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "dataset") {
    config.dataset = dataset_from_string(value);
  } else if (key == "num_classes") {
    config.num_classes = parse_size(key, value);
  } else if (key == "blob_dim") {
    config.blob_dim = parse_size(key, value);
  } else if (key == "blob_train_per_class") {
    config.blob_train_per_class = parse_size(key, value);
  } else if (key == "blob_test_per_class") {
    config.blob_test_per_class = parse_size(key, value);
  } else if (key == "blob_separation") {
    config.blob_separation = parse_double(key, value);
  } else if (key == "idx_train_images") {
    config.idx_train_images = value;
  } else if (key == "idx_train_labels") {
    config.idx_train_labels = value;
  } else if (key == "idx_test_images") {
    config.idx_test_images = value;
  } else if (key == "idx_test_labels") {
    config.idx_test_labels = value;
  } else if (key == "csv_train") {
    config.csv_train = value;
  } else if (key == "csv_test") {
    config.csv_test = value;
  } else if (key == "stages") {
    config.stages = parse_size(key, value);
  } else if (key == "initial_fraction") {
    config.initial_fraction = parse_double(key, value);
  } else if (key == "hidden_dims") {
    config.hidden_dims = parse_size_list(key, value);
  } else if (key == "use_bn") {
    config.use_bn = parse_bool(key, value);
  } else if (key == "bn_momentum") {
    config.bn_momentum = parse_double(key, value);
  } else if (key == "seed") {
    config.seed = parse_u64(key, value);
  } else if (key == "epochs") {
    config.epochs = parse_size(key, value);
  } else if (key == "batch_size") {
    config.batch_size = parse_size(key, value);
  } else if (key == "lr") {
    config.lr = parse_double(key, value);
  } else if (key == "momentum") {
    config.momentum = parse_double(key, value);
  } else if (key == "method") {
    config.method = method_from_string(value);
  } else if (key == "e_a") {
    config.intra_period = parse_size(key, value);
  } else if (key == "e_b") {
    config.bound_period = parse_size(key, value);
  } else if (key == "B") {
    config.bound_radius = parse_double(key, value);
  } else if (key == "ema_alpha") {
    if (value == "none" || value.empty()) {
      config.ema_alpha.reset();
    } else {
      config.ema_alpha = parse_double(key, value);
    }
  } else if (key == "bn_strategy") {
    config.bn_strategy = bn_strategy_from_string(value);
  } else if (key == "memory_per_class") {
    config.memory_per_class = parse_size(key, value);
  } else if (key == "exemplar_method") {
    config.exemplar_method = exemplar_method_from_string(value);
  } else if (key == "cka_baselines") {
    config.cka_baselines = parse_size_list(key, value);
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value: '" + text +
                        "'");
    }
    apply_override(config, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return config;
}

void validate_config(const ExperimentConfig& config) {
  if (config.stages < 1) throw ConfigError("key 'stages': need at least one stage");
  if (!(config.initial_fraction > 0.0) || config.initial_fraction > 1.0) {
    throw ConfigError("key 'initial_fraction': must lie in (0, 1]");
  }
  if (config.hidden_dims.empty()) throw ConfigError("key 'hidden_dims': need at least one layer");
  for (std::size_t h : config.hidden_dims) {
    if (h == 0) throw ConfigError("key 'hidden_dims': layer widths must be positive");
  }
  if (!(config.bn_momentum > 0.0) || config.bn_momentum > 1.0) {
    throw ConfigError("key 'bn_momentum': must lie in (0, 1]");
  }
  if (config.batch_size < 1) throw ConfigError("key 'batch_size': must be >= 1");
  if (!(config.lr > 0.0)) throw ConfigError("key 'lr': must be positive");
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw ConfigError("key 'momentum': must lie in [0, 1)");
  }
  if (config.intra_period < 1) throw ConfigError("key 'e_a': must be >= 1");
  if (config.bound_period < 1) throw ConfigError("key 'e_b': must be >= 1");
  if (!(config.bound_radius > 0.0)) throw ConfigError("key 'B': must be positive");
  if (config.ema_alpha && (!(*config.ema_alpha > 0.0) || !(*config.ema_alpha < 1.0))) {
    throw ConfigError("key 'ema_alpha': must lie in (0, 1)");
  }
  if (config.dataset == DatasetKind::kBlobs) {
    if (config.num_classes < 1) throw ConfigError("key 'num_classes': must be >= 1");
    if (config.blob_dim < 2) throw ConfigError("key 'blob_dim': must be >= 2");
    if (config.blob_train_per_class < 1 || config.blob_test_per_class < 1) {
      throw ConfigError("key 'blob_train_per_class'/'blob_test_per_class': must be >= 1");
    }
    if (!(config.blob_separation > 0.0)) {
      throw ConfigError("key 'blob_separation': must be positive");
    }
    if (config.stages > config.num_classes) {
      throw ConfigError("key 'stages': more stages than classes");
    }
  } else if (config.dataset == DatasetKind::kIdx) {
    if (config.idx_train_images.empty() || config.idx_train_labels.empty() ||
        config.idx_test_images.empty() || config.idx_test_labels.empty()) {
      throw ConfigError("key 'idx_*': all four idx paths are required for dataset=idx");
    }
  } else {
    if (config.csv_train.empty() || config.csv_test.empty()) {
      throw ConfigError("key 'csv_train'/'csv_test': both paths are required for dataset=csv");
    }
  }
  for (std::size_t b : config.cka_baselines) {
    if (b < 1 || b > config.stages) {
      throw ConfigError("key 'cka_baselines': stage " + std::to_string(b) + " outside 1.." +
                        std::to_string(config.stages));
    }
  }
}

ExperimentConfig resolved(const ExperimentConfig& config) {
  ExperimentConfig out = config;
  if (out.method == MethodPreset::kMnbEma && !out.ema_alpha) {
    out.ema_alpha = 0.9;
  }
  if (out.cka_baselines.empty()) {
    out.cka_baselines.push_back(1);
    const std::size_t mid = (out.stages + 1) / 2;
    if (mid != 1) out.cka_baselines.push_back(mid);
  }
  std::sort(out.cka_baselines.begin(), out.cka_baselines.end());
  out.cka_baselines.erase(std::unique(out.cka_baselines.begin(), out.cka_baselines.end()),
                          out.cka_baselines.end());
  return out;
}

StageConfig stage_config_of(const ExperimentConfig& config) {
  StageConfig stage;
  stage.epochs = config.epochs;
  stage.batch_size = config.batch_size;
  stage.lr = config.lr;
  stage.momentum = config.momentum;
  stage.intra_period = config.intra_period;
  stage.bound_period = config.bound_period;
  stage.bound_radius = config.bound_radius;
  stage.bn_strategy = config.bn_strategy;
  stage.ema_alpha = config.ema_alpha;
  switch (config.method) {
    case MethodPreset::kFinetune:
      stage.enable_inter = stage.enable_intra = stage.enable_bound = false;
      break;
    case MethodPreset::kMnb:
    case MethodPreset::kMnbEma:
      stage.enable_inter = stage.enable_intra = stage.enable_bound = true;
      break;
    case MethodPreset::kMnbNoInter:
      stage.enable_inter = false;
      stage.enable_intra = stage.enable_bound = true;
      break;
    case MethodPreset::kMnbNoIntra:
      stage.enable_intra = false;
      stage.enable_inter = stage.enable_bound = true;
      break;
    case MethodPreset::kMnbNoBound:
      stage.enable_bound = false;
      stage.enable_inter = stage.enable_intra = true;
      break;
  }
  return stage;
}

HarnessConfig harness_config_of(const ExperimentConfig& config) {
  HarnessConfig out;
  out.stage = stage_config_of(config);
  out.hidden_dims = config.hidden_dims;
  out.use_batch_norm = config.use_bn;
  out.bn_momentum = config.bn_momentum;
  out.memory_per_class = config.memory_per_class;
  out.exemplar_method = config.exemplar_method;
  return out;
}

std::string echo_config(const ExperimentConfig& config) {
  const ExperimentConfig cfg = resolved(config);
  std::map<std::string, std::string> kv;
  kv["dataset"] = to_string(cfg.dataset);
  kv["num_classes"] = std::to_string(cfg.num_classes);
  kv["blob_dim"] = std::to_string(cfg.blob_dim);
  kv["blob_train_per_class"] = std::to_string(cfg.blob_train_per_class);
  kv["blob_test_per_class"] = std::to_string(cfg.blob_test_per_class);
  kv["blob_separation"] = format_double(cfg.blob_separation);
  kv["idx_train_images"] = cfg.idx_train_images;
  kv["idx_train_labels"] = cfg.idx_train_labels;
  kv["idx_test_images"] = cfg.idx_test_images;
  kv["idx_test_labels"] = cfg.idx_test_labels;
  kv["csv_train"] = cfg.csv_train;
  kv["csv_test"] = cfg.csv_test;
  kv["stages"] = std::to_string(cfg.stages);
  kv["initial_fraction"] = format_double(cfg.initial_fraction);
  kv["hidden_dims"] = join_sizes(cfg.hidden_dims);
  kv["use_bn"] = cfg.use_bn ? "true" : "false";
  kv["bn_momentum"] = format_double(cfg.bn_momentum);
  kv["seed"] = std::to_string(cfg.seed);
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["lr"] = format_double(cfg.lr);
  kv["momentum"] = format_double(cfg.momentum);
  kv["method"] = to_string(cfg.method);
  kv["e_a"] = std::to_string(cfg.intra_period);
  kv["e_b"] = std::to_string(cfg.bound_period);
  kv["B"] = format_double(cfg.bound_radius);
  kv["ema_alpha"] = cfg.ema_alpha ? format_double(*cfg.ema_alpha) : "none";
  kv["bn_strategy"] = to_string(cfg.bn_strategy);
  kv["memory_per_class"] = std::to_string(cfg.memory_per_class);
  kv["exemplar_method"] = to_string(cfg.exemplar_method);
  kv["cka_baselines"] = join_sizes(cfg.cka_baselines);
  kv["out_dir"] = cfg.out_dir;

  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace mnb
