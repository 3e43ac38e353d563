#include "manifest.hpp"

#include <cmath>
#include <stdexcept>

namespace exlab::cli {

namespace {

const char* kModelSections[] = {"model", "drift", "noise", "sigma", "Q", "extinction"};

}  // namespace

bool Params::has(const std::string& key) const {
    auto it = values.find(key);
    return it != values.end() && !it->second.empty();
}

std::string Params::str(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError(key, "missing option --" + key);
    return it->second;
}

double Params::num(const std::string& key) const {
    const std::string s = str(key);
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "--" + key + " is not a number: '" + s + "'");
    }
}

long long Params::integer(const std::string& key) const {
    const double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(key, "--" + key + " must be an integer");
    return static_cast<long long>(v);
}

std::uint64_t Params::u64(const std::string& key) const { return parse_u64(str(key), key); }

std::vector<double> Params::list(const std::string& key) const {
    const std::string s = str(key);
    if (s.empty()) return {};
    try {
        return parse_numbers(s);
    } catch (const ConfigError& e) {
        throw ConfigError(key, "--" + key + ": " + e.what());
    }
}

double Params::positive(const std::string& key) const {
    const double v = num(key);
    if (!(v > 0.0)) throw ConfigError(key, "--" + key + " must be positive, got " + str(key));
    return v;
}

double Params::in_range(const std::string& key, double lo_excl, double hi_incl) const {
    const double v = num(key);
    if (!(v > lo_excl && v <= hi_incl))
        throw ConfigError(key, "--" + key + " must lie in (" + format_double(lo_excl) + ", " + format_double(hi_incl) +
                                   "], got " + str(key));
    return v;
}

long long Params::at_least(const std::string& key, long long lo) const {
    const long long v = integer(key);
    if (v < lo) throw ConfigError(key, "--" + key + " must be at least " + std::to_string(lo) + ", got " + str(key));
    return v;
}

KeyValueFile to_manifest(const Params& p) {
    KeyValueFile kv;
    kv.set("run", "command", p.command);
    kv.set("run", "version", kVersion);
    for (const auto& [k, v] : p.values) kv.set("run", k, v);
    if (p.model)
        for (const char* s : kModelSections)
            if (p.model->has_section(s))
                for (const auto& [k, v] : p.model->section(s)) kv.set(s, k, v);
    return kv;
}

Params from_manifest(const KeyValueFile& file) {
    Params p;
    auto cmd = file.get("run", "command");
    if (!cmd) throw ConfigError("command", "manifest has no [run] command");
    p.command = *cmd;
    for (const auto& [k, v] : file.section("run"))
        if (k != "command" && k != "version") p.values[k] = v;
    if (file.has_section("model")) {
        KeyValueFile m;
        for (const char* s : kModelSections)
            if (file.has_section(s))
                for (const auto& [k, v] : file.section(s)) m.set(s, k, v);
        p.model = m;
    }
    return p;
}

std::uint64_t parse_u64(const std::string& text, const std::string& field) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(text, &pos, 0);
        if (pos != text.size() || text.find('-') != std::string::npos) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "--" + field + " must be an unsigned 64-bit integer, got '" + text + "'");
    }
}

unsigned parse_threads(const std::string& text) {
    if (text == "auto") return 0;
    const std::uint64_t v = parse_u64(text, "threads");
    if (v < 1 || v > 4096) throw ConfigError("threads", "--threads must be 'auto' or in [1, 4096]");
    return static_cast<unsigned>(v);
}

}  // namespace exlab::cli
