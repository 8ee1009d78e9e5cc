#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tsel/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tsel: fixed-b blockwise empirical likelihood experiments"};
  std::string config_path;
  tsel::cli::RunOptions options;
  bool no_metadata = false;
  app.add_option("--config", config_path, "TOML run configuration")->required();
  app.add_option("--out", options.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", options.threads, "worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--no-metadata", no_metadata, "omit the timestamp line");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 1);
  }
  options.metadata = !no_metadata;
  options.base_dir = std::filesystem::path(config_path).parent_path().string();

  tsel::cli::RunConfig config;
  try {
    config = tsel::cli::load_config(config_path);
  } catch (const tsel::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return tsel::cli::run(config, options);
}
