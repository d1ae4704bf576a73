// binaria: rotating star equilibria and their audits.
#include <iostream>

#include "CLI11.hpp"
#include "binaria/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rotating single- and binary-star equilibria with property audits"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool deterministic = false;
  bool verbose = false;

  const std::pair<const char*, const char*> commands[] = {
      {"single-star", "non-rotating star of a given mass, compared against Lane-Emden"},
      {"binary", "two-ball rotating binary at mass fraction m and angular momentum J"},
      {"wasserstein", "W-infinity distance between two atom clouds and its lemma properties"},
      {"rearrange", "bounded rearrangement of a spiked density"},
      {"audit", "invariant suites of every module"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_flag("--deterministic", deterministic, "single thread, no timing fields in the report");
    sub->add_flag("--verbose", verbose, "print the iteration trace to stderr");
  }

  CLI11_PARSE(app, argc, argv);
  const auto scenario = binaria::scenario_from_string(app.get_subcommands().front()->get_name());

  binaria::RunConfig config;
  try {
    config = config_path.empty() ? binaria::parse_config_text("", "<defaults>", scenario)
                                 : binaria::parse_config(config_path, scenario);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (deterministic) config.deterministic = true;
    binaria::validate(config);
  } catch (const binaria::ConfigurationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  binaria::RunOptions options;
  options.verbose = verbose;
  options.out = &std::cout;
  options.log = &std::cerr;
  try {
    return binaria::run(config, options);
  } catch (const std::exception& e) {
    // only reachable when the report itself cannot be written
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
