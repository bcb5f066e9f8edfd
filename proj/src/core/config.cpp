#include "rfad/core/config.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "rfad/core/error.hpp"
#include "rfad/core/formats.hpp"

namespace rfad {

namespace {
std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c == '{' || c == '}' || c == '.' || c == '#') return false;
    return true;
}
}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> scope;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks[0] == "}") {
            if (toks.size() != 1) throw FormatError(lineno, "unexpected tokens after '}'");
            if (scope.empty()) throw FormatError(lineno, "'}' without open section");
            scope.pop_back();
            continue;
        }
        if (!valid_name(toks[0]))
            throw FormatError(lineno, "invalid key name '" + toks[0] + "'");
        if (toks.size() >= 2 && toks.back() == "{") {
            if (toks.size() != 2) throw FormatError(lineno, "section open must be 'name {'");
            scope.push_back(toks[0]);
            continue;
        }
        if (toks.size() < 2) throw FormatError(lineno, "key '" + toks[0] + "' has no value");
        std::string key;
        for (const auto& s : scope) key += s + ".";
        key += toks[0];
        std::string value = toks[1];
        for (size_t i = 2; i < toks.size(); ++i) value += " " + toks[i];
        if (cfg.map_.count(key)) throw FormatError(lineno, "duplicate key '" + key + "'");
        cfg.order_.push_back(key);
        cfg.map_.emplace(key, value);
    }
    if (!scope.empty()) throw FormatError(lineno, "unclosed section '" + scope.back() + "'");
    return cfg;
}

Config Config::load(const std::string& path) { return parse(load_text(path)); }

bool Config::has(const std::string& key) const { return map_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) throw FormatError("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
    auto it = map_.find(key);
    return it == map_.end() ? def : it->second;
}

long Config::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': not an integer: '" + v + "'");
    }
    if (pos != v.size()) throw FormatError("config key '" + key + "': not an integer: '" + v + "'");
    return out;
}

long Config::get_int(const std::string& key, long def) const { return has(key) ? get_int(key) : def; }

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': not a number: '" + v + "'");
    }
    if (pos != v.size()) throw FormatError("config key '" + key + "': not a number: '" + v + "'");
    return out;
}

double Config::get_double(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw FormatError("config key '" + key + "': not a boolean: '" + v + "'");
}

bool Config::get_bool(const std::string& key, bool def) const { return has(key) ? get_bool(key) : def; }

void Config::set(const std::string& key, const std::string& value) {
    if (!map_.count(key)) order_.push_back(key);
    map_[key] = value;
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& k : order_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

std::string Config::fingerprint() const {
    std::vector<std::string> pairs;
    pairs.reserve(order_.size());
    for (const auto& k : order_) pairs.push_back(k + "=" + map_.at(k) + "\n");
    std::sort(pairs.begin(), pairs.end());
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (const auto& p : pairs)
        for (unsigned char c : p) {
            h ^= c;
            h *= 1099511628211ull;
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace rfad
