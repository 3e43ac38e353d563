#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <set>

using namespace exlab;
using namespace exlab::cli;

namespace {

struct Globals {
    std::string config;
    std::string seed;
    std::string out = ".";
    std::string threads = "1";
};

// CLI flags override the [run] section of --config, which overrides the fallbacks.
Params assemble(const CommandSpec& spec, const std::map<std::string, CLI::Option*>& opts,
                const std::map<std::string, std::string>& given, const Globals& g) {
    Params p;
    p.command = spec.name;
    std::set<std::string> known = {"seed"};
    for (const auto& o : spec.options) {
        p.values[o.name] = o.fallback;
        known.insert(o.name);
    }
    p.values["seed"] = "1";

    if (!g.config.empty()) {
        KeyValueFile file = KeyValueFile::load(g.config);
        if (file.has_section("run")) {
            for (const auto& [k, v] : file.section("run")) {
                if (k == "command") continue;
                if (!known.count(k)) throw ConfigError(k, "[run] key '" + k + "' is not an option of " + spec.name);
                p.values[k] = v;
            }
        }
        if (file.has_section("model")) p.model = file;
    }
    if (!g.seed.empty()) p.values["seed"] = g.seed;
    for (const auto& [name, opt] : opts)
        if (opt->count() > 0) p.values[name] = given.at(name);
    parse_u64(p.values["seed"], "seed");
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exlab: extinction criteria for switching stochastic systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Globals g;
    app.add_option("--config", g.config, "key = value file with a [run] section and/or a model definition");
    app.add_option("--seed", g.seed, "master seed (u64, default 1)");
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads: n or auto")->capture_default_str();

    std::map<std::string, std::map<std::string, std::string>> storage;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    for (const auto& spec : command_specs()) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->fallthrough();
        auto& store = storage[spec.name];
        for (const auto& o : spec.options) {
            std::string help = o.help;
            if (!o.fallback.empty()) help += " [" + o.fallback + "]";
            // the positional argument may also be given as a flag
            const std::string flags = o.name == spec.positional ? o.name + ",--" + o.name : "--" + o.name;
            options[spec.name][o.name] = sub->add_option(flags, store[o.name], help);
        }
    }
    std::string manifest_path;
    CLI::App* replay = app.add_subcommand("replay", "rerun a command from its manifest.txt");
    replay->fallthrough();
    replay->add_option("manifest", manifest_path, "manifest file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunContext ctx;
        ctx.out_dir = g.out;
        ctx.threads = parse_threads(g.threads);
        ctx.log = &std::cout;
        Params p;
        if (replay->parsed()) {
            p = from_manifest(KeyValueFile::load(manifest_path));
            command_spec(p.command);
        } else {
            for (const auto& spec : command_specs()) {
                if (!app.got_subcommand(spec.name)) continue;
                p = assemble(spec, options[spec.name], storage[spec.name], g);
            }
        }
        return run_command(p, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error (" << e.field() << "): " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
}
