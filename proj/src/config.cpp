#include "proxsense/config.hpp"

#include "proxsense/core_types.hpp"

#include <charconv>
#include <fstream>

namespace proxsense {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in) {
    KeyValues kv;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        kv.values_[key] = unquote(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValues::number_or(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) throw ConfigError("config key " + key + ": not a number");
    return out;
}

long long KeyValues::integer_or(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) throw ConfigError("config key " + key + ": not an integer");
    return out;
}

bool KeyValues::flag_or(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config key " + key + ": not a boolean");
}

std::map<std::string, std::string> KeyValues::section(const std::string& name) const {
    std::map<std::string, std::string> out;
    const std::string prefix = name + ".";
    for (const auto& [k, v] : values_)
        if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
    return out;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find(sep, pos);
        auto item = trim(text.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (!item.empty()) out.push_back(item);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace proxsense
