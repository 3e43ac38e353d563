#include "exlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace exlab {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const KeyValueFile::Entries kEmpty;

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("section", origin + ":" + std::to_string(lineno) + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!kv.data_.count(current)) {
                kv.data_[current];
                kv.order_.push_back(current);
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("syntax", origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("syntax", origin + ":" + std::to_string(lineno) + ": empty key");
        kv.set(current, key, value);
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

bool KeyValueFile::has_section(const std::string& section) const { return data_.count(section) > 0; }

const KeyValueFile::Entries& KeyValueFile::section(const std::string& section) const {
    auto it = data_.find(section);
    return it == data_.end() ? kEmpty : it->second;
}

std::optional<std::string> KeyValueFile::get(const std::string& section, const std::string& key) const {
    for (const auto& [k, v] : this->section(section))
        if (k == key) return v;
    return std::nullopt;
}

double KeyValueFile::number(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) throw ConfigError(key, origin_ + ": missing [" + section + "] " + key);
    try {
        std::size_t pos = 0;
        double d = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key, origin_ + ": [" + section + "] " + key + " is not a number: " + *v);
    }
}

double KeyValueFile::number(const std::string& section, const std::string& key, double fallback) const {
    if (!get(section, key)) return fallback;
    return number(section, key);
}

void KeyValueFile::set(const std::string& section, const std::string& key, const std::string& value) {
    if (!data_.count(section)) order_.push_back(section);
    auto& entries = data_[section];
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries.emplace_back(key, value);
}

std::string KeyValueFile::dump() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& name : order_) {
        const auto& entries = data_.at(name);
        if (!name.empty()) {
            if (!first) os << "\n";
            os << "[" << name << "]\n";
        }
        for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
        first = false;
    }
    return os.str();
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == ',' || c == ';' || c == '[' || c == ']') c = ' ';
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t pos = 0;
            double d = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(d);
        } catch (const std::exception&) {
            throw ConfigError("number", "not a number: " + tok);
        }
    }
    return out;
}

Mat parse_matrix(const std::string& text, int rows, const std::string& what) {
    auto v = parse_numbers(text);
    if (static_cast<int>(v.size()) != rows * rows)
        throw ConfigError(what, what + " needs " + std::to_string(rows * rows) + " entries, got " +
                                    std::to_string(v.size()));
    Mat M(rows, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < rows; ++j) M(i, j) = v[i * rows + j];
    return M;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace exlab
