#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decaylab/operator_model.hpp"

namespace decaylab {

/// Flat `key = value` configuration.  Keys are dotted paths; a `[section]`
/// line prefixes the keys that follow it.  `#` starts a comment.  Arrays
/// are comma lists, matrix rows are separated by `;`.  Every lookup error
/// is a ConfigError naming the key.
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    const std::string& source() const noexcept { return source_; }
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;
    Matrix get_matrix(const std::string& key) const;

private:
    std::string source_;
    std::map<std::string, std::string> entries_;
};

/// Parses one real number; `what` names the field in the error.
double parse_double(std::string_view text, const std::string& what);

}  // namespace decaylab
