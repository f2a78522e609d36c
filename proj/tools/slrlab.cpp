// slrlab: validate, run, compare, envelope and plot experiments with
// multiplicative stochastic step sizes.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "slrlab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"slrlab - stochastic step-size experiments"};
  app.require_subcommand(1);

  std::string config, config_a, config_b, out, in, tcase;

  auto* validate = app.add_subcommand("validate", "check step-size and factor conditions for a config");
  validate->add_option("--config", config, "experiment config")->required();

  auto* run = app.add_subcommand("run", "run a config over one or more seeds, write trajectory CSVs");
  run->add_option("--config", config, "experiment config")->required();
  run->add_option("--out", out, "output directory (default: out_dir from the config)");

  auto* compare = app.add_subcommand("compare", "paired multi-seed comparison of two configs");
  compare->add_option("--config-a", config_a, "first config")->required();
  compare->add_option("--config-b", config_b, "second config")->required();
  compare->add_option("--out", out, "output directory (default: out_dir from config a)");

  auto* envelope = app.add_subcommand("envelope", "rate envelope and little-o diagnostic for one case");
  envelope->add_option("--config", config, "experiment config")->required();
  envelope->add_option("--case", tcase, "1.1a, 1.1b, 1.2 or baseline")->required();
  envelope->add_option("--out", out, "output directory (default: out_dir from the config)");

  auto* plot = app.add_subcommand("plot", "render trajectory CSVs to SVG");
  plot->add_option("--in", in, "output directory or CSV file")->required();
  plot->add_option("--out", out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return slrlab::kExitValidation;
  }

  const auto out_dir = out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
  if (*validate) return slrlab::cmd_validate(config, std::cout, std::cerr);
  if (*run) return slrlab::cmd_run(config, out_dir, std::cout, std::cerr);
  if (*compare) return slrlab::cmd_compare(config_a, config_b, out_dir, std::cout, std::cerr);
  if (*envelope) return slrlab::cmd_envelope(config, tcase, out_dir, std::cout, std::cerr);
  if (*plot) return slrlab::cmd_plot(in, out, std::cout, std::cerr);
  return slrlab::kExitValidation;
}
