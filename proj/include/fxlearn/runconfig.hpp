#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fxl {

// Flat key=value run configuration. '#' starts a comment; keys must come
// from the allowed set so typos fail loudly. Every run writes its resolved
// configuration next to its outputs.
class RunConfig {
public:
    RunConfig() = default;
    explicit RunConfig(std::set<std::string> allowed_keys) : allowed_(std::move(allowed_keys)) {}

    static RunConfig from_file(const std::string& path, std::set<std::string> allowed_keys);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;  // comma separated
    std::vector<std::string> get_str_list(const std::string& key) const;

    void write(const std::string& path) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    void check_key(const std::string& key) const;
    std::map<std::string, std::string> values_;
    std::set<std::string> allowed_;
};

}  // namespace fxl
