#pragma once

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hideseek/error.hpp"
#include "hideseek/metrics.hpp"
#include "hideseek_cli/config.hpp"

namespace hideseek::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

/// Commands that take an experiment config.
inline constexpr std::string_view kConfigCommands[] = {
    "train-hsn",      "train-masker",  "train-generator", "embed",          "attack", "evaluate",
    "ablate-masking", "ablate-losses", "ablate-order",    "verify-theorem", "synth",
};

bool is_config_command(std::string_view name);

/// FNV-1a 64 over the file bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// Owns the output directory of one command run and the manifest that
/// describes it. Every artifact a command writes goes through `record`.
class RunContext {
 public:
  RunContext(std::string command, ExperimentConfig config);

  [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::string& command() const noexcept { return command_; }
  [[nodiscard]] std::filesystem::path path(const std::string& relative) const;

  /// Creates parent directories; call `record` after writing.
  std::filesystem::path prepare(const std::string& relative) const;
  void record(const std::string& relative);
  void record_input(const std::string& role, const std::filesystem::path& path);
  void set_summary(nlohmann::json summary) { summary_ = std::move(summary); }

  /// Writes manifest.json and returns its path.
  std::filesystem::path finish();

 private:
  std::string command_;
  ExperimentConfig config_;
  nlohmann::json outputs_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json summary_ = nlohmann::json::object();
};

/// Mean metrics over a set of per-image reports.
struct Aggregate {
  std::size_t images = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double lpips = 0.0;
  std::optional<double> bit_accuracy;
  std::optional<double> inverse_distance;
  double detection_rate = 0.0;
};

Aggregate aggregate(std::span<const MetricReport> reports);

/// Runs one config command and returns the path of its manifest. Progress and
/// a one-line result go to `out`.
std::filesystem::path run_command(std::string_view command, const ExperimentConfig& config, std::ostream& out);

struct ReplayOutcome {
  std::filesystem::path manifest;
  std::size_t compared = 0;
  std::vector<std::string> mismatched;  // relative CSV paths
};

/// Re-runs the command recorded in `manifest` into `output_dir` (default: the
/// original directory with a "-replay" suffix) and compares every CSV by
/// content hash.
ReplayOutcome replay(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& output_dir,
                     std::ostream& out);

/// {"code", "message", "context"}.
nlohmann::json error_json(std::string_view code, std::string_view message, std::string_view context);
nlohmann::json error_json(const Error& e);

/// 2 for configuration problems, 1 for everything else.
int exit_code_for(const Error& e);

}  // namespace hideseek::cli
