// Experiment runner for the merge-and-bound incremental-learning harness.
//
//   mnb run --config base.cfg [--key value ...]
//   mnb sweep --config base.cfg --axis e_b --values 5,10,15
//   mnb inspect-ckpt out/stage_3.mnbw
//
// Any config key can be overridden on the command line. MNB_OUT overrides the
// output directory. Exit codes: 0 ok, 1 config error, 2 runtime error.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mnb/config.hpp"
#include "mnb/experiment.hpp"
#include "mnb/metrics.hpp"
#include "mnb/serialize.hpp"

namespace {

void apply_cli_overrides(mnb::ExperimentConfig& config, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size();) {
    std::string token = extras[i];
    if (token.rfind("--", 0) != 0) {
      throw mnb::ConfigError("expected --key, got '" + token + "'");
    }
    token = token.substr(2);
    const auto eq = token.find('=');
    if (eq != std::string::npos) {
      mnb::apply_override(config, token.substr(0, eq), token.substr(eq + 1));
      ++i;
    } else {
      if (i + 1 >= extras.size()) {
        throw mnb::ConfigError("key '" + token + "' is missing a value");
      }
      mnb::apply_override(config, token, extras[i + 1]);
      i += 2;
    }
  }
}

mnb::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& extras) {
  mnb::ExperimentConfig config = mnb::parse_config_file(path);
  apply_cli_overrides(config, extras);
  if (const char* out = std::getenv("MNB_OUT"); out != nullptr && *out != '\0') {
    config.out_dir = out;
  }
  mnb::validate_config(mnb::resolved(config));
  return config;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

void print_summary(const mnb::RunResult& result) {
  for (const mnb::StageEval& stage : result.log.stages) {
    std::cout << "stage " << stage.stage_index << ": seen " << stage.seen_classes.size()
              << " classes, overall " << mnb::format_double(stage.overall_acc) << ", new "
              << mnb::format_double(stage.new_acc) << '\n';
  }
  std::cout << "avg_inc_acc " << mnb::format_double(result.avg_inc_acc) << '\n'
            << "forgetting " << mnb::format_double(result.forgetting) << '\n'
            << "avg_new_acc " << mnb::format_double(result.avg_new_acc) << '\n';
  if (!result.out_dir.empty()) {
    std::cout << "artifacts in " << result.out_dir.string() << '\n';
  }
}

double tensor_l2(const mnb::Tensor& t) {
  double sq = 0.0;
  for (double v : t.values()) sq += v * v;
  return std::sqrt(sq);
}

void print_entries(const mnb::ParameterSet& params) {
  for (const auto& entry : params.entries()) {
    std::cout << "  " << entry.name << "  " << mnb::shape_to_string(entry.tensor.shape())
              << "  l2=" << mnb::format_double(tensor_l2(entry.tensor)) << '\n';
  }
}

int inspect_checkpoint(const std::string& path) {
  if (mnb::is_model_checkpoint(path)) {
    const mnb::Model model = mnb::load_model(path);
    std::cout << "model checkpoint: " << model.input_dim() << " -> " << model.feature_dim()
              << " features, " << model.num_classes() << " classes\n";
    std::cout << "class_ids:";
    for (mnb::ClassId id : model.class_ids()) std::cout << ' ' << id;
    std::cout << '\n';
    print_entries(model.extractor_params());
    std::cout << "  head.weight  " << mnb::shape_to_string(model.head_weight().shape())
              << "  l2=" << mnb::format_double(tensor_l2(model.head_weight())) << '\n';
    std::cout << "  head.bias  " << mnb::shape_to_string(model.head_bias().shape())
              << "  l2=" << mnb::format_double(tensor_l2(model.head_bias())) << '\n';
    for (std::size_t i = 0; i < model.bn_stats().size(); ++i) {
      const std::size_t layer = model.bn_layer_indices()[i];
      std::cout << "  bn." << layer << ".running_mean  l2="
                << mnb::format_double(tensor_l2(model.bn_stats()[i].running_mean)) << '\n';
      std::cout << "  bn." << layer << ".running_var  l2="
                << mnb::format_double(tensor_l2(model.bn_stats()[i].running_var)) << '\n';
    }
  } else {
    const mnb::ParameterSet params = mnb::load_parameter_set(path);
    std::cout << "parameter-set checkpoint, " << params.size() << " entries\n";
    print_entries(params);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"merge-and-bound class-incremental training harness"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "execute one experiment");
  run_cmd->add_option("--config", config_path, "key=value config file")->required();
  run_cmd->allow_extras();

  std::string sweep_config, axis, values_text;
  auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per axis value");
  sweep_cmd->add_option("--config", sweep_config, "key=value config file")->required();
  sweep_cmd->add_option("--axis", axis, "one of ema_alpha, e_a, e_b, B, bn_strategy, method")
      ->required();
  sweep_cmd->add_option("--values", values_text, "comma-separated values")->required();
  sweep_cmd->allow_extras();

  std::string ckpt_path;
  auto* inspect_cmd = app.add_subcommand("inspect-ckpt", "print tensor names, shapes and norms");
  inspect_cmd->add_option("path", ckpt_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const mnb::ExperimentConfig config = load_config(config_path, run_cmd->remaining());
      print_summary(mnb::run_experiment(config));
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const mnb::ExperimentConfig config = load_config(sweep_config, sweep_cmd->remaining());
      const auto cells = mnb::run_sweep(config, axis, split_values(values_text));
      for (const auto& cell : cells) {
        std::cout << axis << '=' << cell.value << ": forgetting "
                  << mnb::format_double(cell.result.forgetting) << ", avg_new_acc "
                  << mnb::format_double(cell.result.avg_new_acc) << ", avg_inc_acc "
                  << mnb::format_double(cell.result.avg_inc_acc) << '\n';
      }
      return 0;
    }
    return inspect_checkpoint(ckpt_path);
  } catch (const mnb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
