#include <iostream>

#include <CLI11.hpp>

#include "deepair/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"deepair: grid pre-processing, training, estimation, forecasting and saliency for urban air quality"};
  std::string stamps = deepair::cli::version_text();
  stamps.pop_back();
  app.set_version_flag("--version", stamps);
  std::string config_path;
  std::string command;
  app.add_option("command", command, "Pipeline step")
      ->required()
      ->check(CLI::IsMember(deepair::cli::command_names()));
  app.add_option("-c,--config", config_path, "JSON run config")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : deepair::cli::kConfigError;
  }
  deepair::cli::RunConfig config;
  try {
    config = deepair::cli::load_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return deepair::cli::kConfigError;
  }
  return deepair::cli::run_command(command, config, std::cout, std::cerr);
}
