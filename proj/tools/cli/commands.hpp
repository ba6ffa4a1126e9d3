#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace advml::cli {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2 };

// Options of a command; attack and poison add the options of the chosen
// attack or strategy.
std::vector<OptionSpec> command_specs(const std::string& command, const std::string& selector = "");
// Every option a command may take, for flag declaration.
std::vector<OptionSpec> command_flag_specs(const std::string& command);

void cmd_gen_data(const RunConfig& c, std::ostream& out);
void cmd_train(const RunConfig& c, std::ostream& out);
void cmd_attack(const RunConfig& c, std::ostream& out);
void cmd_poison(const RunConfig& c, std::ostream& out);
void cmd_eval(const RunConfig& c, std::ostream& out);
// Returns the exit code: unreadable run directories are skipped but make it
// nonzero.
int cmd_report(const RunConfig& c, const std::vector<std::string>& runs, std::ostream& out, std::ostream& err);
void cmd_serve_oracle(const RunConfig& c, std::ostream& out);

// Whole command line without the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advml::cli
