#include "decaylab/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "decaylab/error.hpp"

namespace decaylab {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

double parse_double(std::string_view text, const std::string& what) {
    const std::string s(trim(text));
    if (s.empty()) throw Error(ErrorCode::ConfigError, what + ": expected a number, got nothing");
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw Error(ErrorCode::ConfigError, what + ": expected a number, got '" + s + "'");
    return value;
}

Config Config::parse(std::string_view text, const std::string& source) {
    Config config;
    config.source_ = source;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::ConfigError, where + ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigError, where + ": expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::ConfigError, where + ": empty key");
        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (config.entries_.count(full)) throw Error(ErrorCode::ConfigError, where + ": duplicate key '" + full + "'");
        config.entries_[full] = std::string(trim(line.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

std::string Config::get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw Error(ErrorCode::ConfigError, key + ": missing");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const { return parse_double(get_string(key), key); }

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double value = get_double(key);
    if (value != static_cast<double>(static_cast<long>(value)))
        throw Error(ErrorCode::ConfigError, key + ": expected an integer");
    return static_cast<long>(value);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string value = get_string(key);
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw Error(ErrorCode::ConfigError, key + ": expected true or false, got '" + value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    const std::string text = get_string(key);
    std::vector<double> out;
    std::size_t i = 0;
    for (auto part : split(text, ','))
        out.push_back(parse_double(part, key + "[" + std::to_string(i++) + "]"));
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
    const std::string text = get_string(key);
    std::vector<std::string> out;
    for (auto part : split(text, ','))
        if (!part.empty()) out.emplace_back(part);
    return out;
}

Matrix Config::get_matrix(const std::string& key) const {
    const std::string text = get_string(key);
    const auto rows = split(text, ';');
    std::vector<std::vector<double>> values;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<double> row;
        std::size_t c = 0;
        for (auto part : split(rows[r], ','))
            row.push_back(parse_double(part, key + "[" + std::to_string(r) + "][" + std::to_string(c++) + "]"));
        if (!values.empty() && row.size() != values.front().size())
            throw Error(ErrorCode::ConfigError, key + ": row " + std::to_string(r) + " has " +
                                                    std::to_string(row.size()) + " entries, expected " +
                                                    std::to_string(values.front().size()));
        values.push_back(std::move(row));
    }
    if (values.size() != values.front().size())
        throw Error(ErrorCode::ConfigError, key + ": matrix must be square");
    const auto n = static_cast<Index>(values.size());
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

}  // namespace decaylab
