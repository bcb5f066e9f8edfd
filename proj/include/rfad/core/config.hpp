#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace rfad {

// Nested key/value configuration text:
//
//   # comment
//   seed 7
//   train {
//     steps 2000
//     sim {
//       persons 2
//     }
//   }
//
// Section open is `name {` on its own line, close is `}` alone. Sections
// flatten to dotted keys ("train.sim.persons"). Values are the rest of the
// line, whitespace-normalized. Duplicate keys are errors. Repeated structures
// use indexed section names (person0, person1, ...).
class Config {
public:
    static Config parse(const std::string& text);  // throws FormatError
    static Config load(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& def) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long def) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool def) const;

    void set(const std::string& key, const std::string& value);  // override/insert

    const std::vector<std::string>& keys() const { return order_; }  // insertion order
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    // Stable content hash (hex) over sorted key=value pairs, for run manifests.
    std::string fingerprint() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::string> map_;
};

}  // namespace rfad
