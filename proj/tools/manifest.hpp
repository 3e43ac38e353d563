#pragma once

#include "exlab/config.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace exlab::cli {

inline constexpr const char* kVersion = "0.1.0";

struct OptionSpec {
    std::string name;  // flag without dashes; also the manifest key
    std::string fallback;
    std::string help;
};

// All inputs of one command. Manifests store exactly these values, so a
// replay reruns the command with identical inputs.
class Params {
public:
    std::string command;
    std::map<std::string, std::string> values;
    std::optional<KeyValueFile> model;  // sections of a model definition file

    bool has(const std::string& key) const;
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::uint64_t u64(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;  // empty string gives an empty list

    // Range checks that raise ConfigError naming the field.
    double positive(const std::string& key) const;
    double in_range(const std::string& key, double lo_excl, double hi_incl) const;
    long long at_least(const std::string& key, long long lo) const;
};

KeyValueFile to_manifest(const Params& p);
Params from_manifest(const KeyValueFile& file);

std::uint64_t parse_u64(const std::string& text, const std::string& field);
unsigned parse_threads(const std::string& text);

}  // namespace exlab::cli
