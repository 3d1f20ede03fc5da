#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "adpred/commands.hpp"
#include "adpred/error.hpp"

namespace {

using Command = void (*)(const adpred::RunConfig&, std::ostream&);

struct Subcommand {
  CLI::App* app = nullptr;
  Command run = nullptr;
  std::string config_file;
  bool dump = false;
  std::map<std::string, std::optional<std::string>> overrides;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adpred: click and install prediction for tabular ad logs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> seed;
  std::optional<std::string> deterministic;
  app.add_option("--seed", seed, "seed for every random stream");
  app.add_option("--deterministic", deterministic, "true | false");

  const std::pair<const char*, Command> commands[] = {
      {"prepare", adpred::cmd_prepare},   {"train", adpred::cmd_train},
      {"predict", adpred::cmd_predict},   {"evaluate", adpred::cmd_evaluate},
      {"synth", adpred::cmd_synth},
  };
  const char* descriptions[] = {
      "fit the preprocessing pipeline on a training table",
      "train with early stopping, then retrain on all labeled rows",
      "write submission probabilities for a test table",
      "score predictions against labels, or a model on the train/validation split",
      "generate a synthetic labeled dataset",
  };

  std::vector<Subcommand> subs(std::size(commands));
  for (std::size_t i = 0; i < subs.size(); ++i) {
    auto& sub = subs[i];
    sub.run = commands[i].second;
    sub.app = app.add_subcommand(commands[i].first, descriptions[i]);
    sub.app->add_option("--config", sub.config_file, "key = value configuration file");
    sub.app->add_flag("--dump-config", sub.dump, "print the effective configuration and exit");
    for (const auto& key : adpred::config_keys()) {
      if (key.name == "seed" || key.name == "deterministic") continue;
      sub.app->add_option("--" + key.name, sub.overrides[key.name], key.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (auto& sub : subs) {
    if (!sub.app->parsed()) continue;
    try {
      adpred::RunConfig config;
      if (!sub.config_file.empty()) adpred::apply_config_file(config, sub.config_file);
      // Command-line values win over the config file, in key-table order.
      for (const auto& [name, value] : sub.overrides) {
        if (value) adpred::set_config_value(config, name, *value);
      }
      if (seed) adpred::set_config_value(config, "seed", *seed);
      if (deterministic) adpred::set_config_value(config, "deterministic", *deterministic);
      if (sub.dump) {
        std::cout << adpred::dump_config(config);
        return 0;
      }
      sub.run(config, std::cout);
      return 0;
    } catch (const adpred::Error& e) {
      std::cerr << fmt::format("error: {}: {}\n", adpred::to_string(e.kind()), e.what());
      return e.kind() == adpred::ErrorKind::usage ? 2 : 1;
    } catch (const std::exception& e) {
      std::cerr << fmt::format("error: internal: {}\n", e.what());
      return 1;
    }
  }
  return 2;
}
