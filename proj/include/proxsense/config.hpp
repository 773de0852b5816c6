// config.hpp
// Plain-text key-value configuration:
//
//     # comment
//     seed = 7
//     [synth]
//     shift = 1.0
//
// Keys inside a [section] are stored as "section.key".
#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proxsense {

class KeyValues {
public:
    static KeyValues parse(std::istream& in);
    static KeyValues load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.count(key) > 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double number_or(const std::string& key, double fallback) const;
    long long integer_or(const std::string& key, long long fallback) const;
    bool flag_or(const std::string& key, bool fallback) const;
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    // Keys under "section." with the prefix stripped.
    std::map<std::string, std::string> section(const std::string& name) const;
    const std::map<std::string, std::string>& all() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace proxsense
