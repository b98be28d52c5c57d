#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "hideseek_cli/commands.hpp"

namespace {

using namespace hideseek;
using namespace hideseek::cli;

int report(const Error& e) {
  std::cerr << error_json(e).dump() << "\n";
  return exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermark purging experiments: training, attacks, evaluation and ablations."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  const std::map<std::string_view, std::string> about = {
      {"train-hsn", "train the masked-autoencoder purger"},
      {"train-masker", "train the HS+ masking network"},
      {"train-generator", "train the HS+ pixel generator"},
      {"embed", "watermark a dataset and write its key"},
      {"attack", "purge watermarked images and score the result"},
      {"evaluate", "score an existing image set against references"},
      {"ablate-masking", "sweep mask strategy and ratio for the HSN attack"},
      {"ablate-losses", "retrain the masker with loss terms switched off"},
      {"ablate-order", "compare HS+ reconstruction orders on shared masks"},
      {"verify-theorem", "check the ordering theorem on random instances"},
      {"synth", "write a synthetic PNG dataset"},
  };
  for (std::string_view name : kConfigCommands) {
    auto* sub = app.add_subcommand(std::string(name), about.at(name));
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  }
  std::string manifest_path;
  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded command and compare its CSV outputs");
  replay_cmd->add_option("manifest", manifest_path, "manifest.json of the recorded run")->required();
  replay_cmd->add_option("-o,--output-dir", replay_dir, "where to write the replayed artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("invalid_config", e.what(), "command line").dump() << "\n";
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();

  if (command == "replay") {
    try {
      std::optional<std::filesystem::path> dir;
      if (!replay_dir.empty()) dir = replay_dir;
      const ReplayOutcome r = replay(manifest_path, dir, std::cout);
      if (!r.mismatched.empty()) {
        std::string list;
        for (const auto& m : r.mismatched) list += (list.empty() ? "" : ",") + m;
        return report(Error(ErrorCode::kCorruptData, "replayed CSV outputs differ from the recorded run", list));
      }
      std::cout << "replay identical: " << r.compared << "/" << r.compared << " csv files\n";
      std::cout << "manifest: " << r.manifest.string() << "\n";
      return 0;
    } catch (const Error& e) {
      return report(e);
    } catch (const std::exception& e) {
      std::cerr << error_json("internal", e.what(), command).dump() << "\n";
      return 1;
    }
  }

  ExperimentConfig config;
  try {
    config = load_config(config_path);
    apply_environment(config);
  } catch (const Error& e) {
    std::cerr << error_json(to_string(e.code()), e.what(), e.context()).dump() << "\n";
    return 2;
  }
  try {
    const auto manifest = run_command(command, config, std::cout);
    std::cout << "manifest: " << manifest.string() << "\n";
    return 0;
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what(), command).dump() << "\n";
    return 1;
  }
}
