// bykov: command-line front end. Options are registered from the key tables
// in bykov/cli.hpp so --help, config files and validation share one source.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "bykov/cli.hpp"
#include "bykov/error.hpp"

namespace cli = bykov::cli;

int main(int argc, char** argv) {
  CLI::App app{"Return map of a perturbed Bykov attractor: fixed points, bifurcation surfaces, scans"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Sub {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::string config;
    bool hint = false;
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : cli::subcommands()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, cli::describe(name));
    s.app->add_option("--config", s.config, "key=value file; flags override its entries");
    for (const auto& k : cli::keys_for(name)) {
      if (k.name == "gnuplot-hint") {
        s.app->add_flag("--gnuplot-hint", s.hint, k.help);
        continue;
      }
      std::string help = k.help;
      if (k.required) help += " [required]";
      else if (!k.fallback.empty()) help += " [default: " + k.fallback + "]";
      s.app->add_option("--" + k.name, s.values[k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    cli::RunConfig cfg;
    cfg.subcommand = name;
    try {
      if (!s.config.empty()) cfg.values = cli::read_config_file(s.config);
    } catch (const bykov::IoError& e) {
      cli::write_error_record(std::cerr, "io", e.what());
      return 4;
    } catch (const std::exception& e) {
      cli::write_error_record(std::cerr, "validation", e.what());
      return 2;
    }
    for (const auto& [key, value] : s.values) {
      if (s.app->get_option("--" + key)->count() > 0) cfg.values[key] = value;
    }
    cfg.gnuplot_hint = s.hint;
    return cli::run(cfg, std::cout, std::cerr);
  }
  return 1;
}
