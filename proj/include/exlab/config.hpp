#pragma once

#include "exlab/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace exlab {

// Sectioned `key = value` text. Lines starting with '#' and trailing
// '# ...' comments are ignored; `[name]` opens a section.
class KeyValueFile {
public:
    using Entries = std::vector<std::pair<std::string, std::string>>;

    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueFile load(const std::string& path);

    bool has_section(const std::string& section) const;
    const Entries& section(const std::string& section) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    std::vector<std::string> sections() const { return order_; }

    void set(const std::string& section, const std::string& key, const std::string& value);
    std::string dump() const;

private:
    std::map<std::string, Entries> data_;
    std::vector<std::string> order_;
    std::string origin_;
};

std::vector<double> parse_numbers(const std::string& text);
Mat parse_matrix(const std::string& text, int rows, const std::string& what);
std::string format_double(double v);

}  // namespace exlab
