#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dealerpred/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace dealerpred;

  CLI::App app{"Dealer trading-behaviour prediction on synthetic OTC market data"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> checkpoint;

  const std::vector<std::pair<std::string, std::string>> help{
      {"gen", "generate, clean and encode the synthetic market"},
      {"cluster", "cluster dealers on training-interval activity"},
      {"train", "train one model per dealer group"},
      {"eval", "score trained checkpoints on the test windows"},
      {"compare", "train and score all eight models"},
      {"stats", "per-layer activation moments of Transformer checkpoints"},
  };
  for (const auto& [name, description] : help) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "override [run] output_dir");
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_option("--threads", threads, "override [run] threads");
    if (name == "stats") sub->add_option("--checkpoint", checkpoint, "checkpoint stem (without extension)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kUsageError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  cli::RunConfig config;
  try {
    config = cli::parse_config_file(config_path);
    if (output_dir) config.output_dir = *output_dir;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kUsageError;
  }

  cli::CommandOptions options;
  if (checkpoint) options.checkpoint = *checkpoint;
  return cli::run_command(command, config, options);
}
