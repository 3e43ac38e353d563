#pragma once

#include "manifest.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace exlab::cli {

struct CommandSpec {
    std::string name;
    std::string help;
    std::vector<OptionSpec> options;
    std::string positional;  // name of a positional argument, if any
};

const std::vector<CommandSpec>& command_specs();
const CommandSpec& command_spec(const std::string& name);

struct RunContext {
    std::string out_dir = ".";
    unsigned threads = 1;
    std::ostream* log = nullptr;
};

// Writes the command's CSV files and manifest into ctx.out_dir. Returns 0 when
// every verdict passes and 1 otherwise; errors propagate as exceptions.
int run_command(const Params& p, const RunContext& ctx);

}  // namespace exlab::cli
