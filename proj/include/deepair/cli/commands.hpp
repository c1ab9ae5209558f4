#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace deepair::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One JSON document drives every command. Top-level keys:
//   seed          global seed; sections without their own seed inherit it
//   output_dir    where artifacts go (relative paths resolve against the
//                 config file's directory)
//   data_dir      synthetic/preprocessed data (default <output_dir>/data)
//   synth, preprocess, train, evaluate, estimate_map, forecast, saliency,
//   seasonal_maps: per-command sections
struct RunConfig {
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path output_dir;
  std::filesystem::path data_dir;
  std::uint64_t seed = 0;

  const nlohmann::json& section(const std::string& name) const;
};

RunConfig load_run_config(const std::filesystem::path& file);
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

const std::vector<std::string>& command_names();

// Runs one command; exceptions become exit codes with a message on `err`.
int run_command(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& err);

// The individual commands throw on failure.
void cmd_synth(const RunConfig& config, std::ostream& out);
void cmd_preprocess(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_evaluate(const RunConfig& config, std::ostream& out);
void cmd_estimate_map(const RunConfig& config, std::ostream& out);
void cmd_forecast(const RunConfig& config, std::ostream& out);
void cmd_saliency(const RunConfig& config, std::ostream& out);
void cmd_seasonal_maps(const RunConfig& config, std::ostream& out);

// Format stamps of every file the tool writes, one per line.
std::string version_text();

}  // namespace deepair::cli
