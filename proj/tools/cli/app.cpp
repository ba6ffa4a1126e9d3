#include <CLI11.hpp>
#include <algorithm>
#include <iostream>
#include <map>

#include "advml/error.hpp"
#include "advml/io.hpp"
#include "commands.hpp"
#include "registry.hpp"

namespace advml::cli {

namespace {

const std::vector<std::string> kCommands = {"gen-data", "train", "attack", "poison", "eval", "report", "serve-oracle"};

const char* describe(const std::string& cmd) {
  if (cmd == "gen-data") return "generate a synthetic dataset (or import a 0-255 file) and split it";
  if (cmd == "train") return "train an MLP or SVM and write the model with metrics";
  if (cmd == "attack") return "run a registered attack over the test set";
  if (cmd == "poison") return "poison a training set and compare clean and poisoned victims";
  if (cmd == "eval") return "evaluate a model, optionally against a backdoor trigger";
  if (cmd == "report") return "combine attack runs into one comparison table";
  return "serve a model over the JSON oracle protocol";
}

std::string selector_key(const std::string& cmd) {
  if (cmd == "attack") return "name";
  if (cmd == "poison") return "strategy";
  return "";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"advml: adversarial attacks and data poisoning on small models"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::string> config_path;
  std::vector<std::string> report_runs;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;

  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd, describe(cmd));
    subs[cmd] = sub;
    sub->add_option("--config", config_path[cmd], "key=value file; flags override it");
    for (const auto& spec : command_flag_specs(cmd)) {
      std::string help = spec.help;
      if (!spec.default_value.empty()) help += " (default " + spec.default_value + ")";
      options[cmd][spec.name] = sub->add_option("--" + spec.name, flag_values[cmd][spec.name], help);
    }
    if (cmd == "report") sub->add_option("runs", report_runs, "attack run directories");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // help() delegates to the selected subcommand.
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  std::string cmd;
  for (const auto& c : kCommands) {
    if (subs[c]->parsed()) cmd = c;
  }

  try {
    std::map<std::string, std::string> given;
    for (const auto& [name, opt] : options[cmd]) {
      if (opt->count() > 0) given[name] = flag_values[cmd][name];
    }
    std::map<std::string, std::string> file;
    if (!config_path[cmd].empty()) {
      try {
        file = parse_config_text(read_text_file(config_path[cmd]));
      } catch (const advml::Error& e) {
        throw UsageError(std::string("cannot read config: ") + e.what());
      }
    }
    std::string selector;
    if (const std::string key = selector_key(cmd); !key.empty()) {
      if (given.count(key)) {
        selector = given[key];
      } else if (file.count(key)) {
        selector = file[key];
      } else {
        throw UsageError("--" + key + " is required");
      }
    }
    const RunConfig config = resolve_config(cmd, command_specs(cmd, selector), file, given);
    if (cmd == "gen-data") cmd_gen_data(config, out);
    if (cmd == "train") cmd_train(config, out);
    if (cmd == "attack") cmd_attack(config, out);
    if (cmd == "poison") cmd_poison(config, out);
    if (cmd == "eval") cmd_eval(config, out);
    if (cmd == "serve-oracle") cmd_serve_oracle(config, out);
    if (cmd == "report") return cmd_report(config, report_runs, out, err);
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    if (cmd == "attack" && std::string(e.what()).find("unknown attack") != std::string::npos) {
      err << registry_listing();
    }
    return kUsage;
  } catch (const InvalidInput& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace advml::cli
