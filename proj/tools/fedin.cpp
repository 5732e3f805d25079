#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fedin/cli/commands.hpp"
#include "fedin/cli/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"FEDIN dual-branch CTR model: experiments and checks"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  for (const auto& name : fedin::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file (defaults apply to missing keys)");
    sub->add_option("--set", overrides, "Override, dotted.key=value (repeatable)")->take_all();
    sub->add_option("--out", out_dir, "Output directory")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::optional<std::string> seed_env;
    if (const char* s = std::getenv("FEDIN_SEED")) seed_env = s;
    const fedin::ExperimentConfig cfg = fedin::resolve_config(fedin::load_config(config_path, overrides, seed_env));
    return fedin::run_command(command, cfg, out_dir, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "fedin " << command << ": " << e.what() << std::endl;
    return fedin::exit_code_for(e);
  }
}
