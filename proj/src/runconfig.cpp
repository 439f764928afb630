#include "fxlearn/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fxlearn/errors.hpp"

namespace fxl {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path, std::set<std::string> allowed_keys) {
    std::ifstream in(path);
    if (!in) raise_io("cannot open config file: " + path);
    RunConfig cfg(std::move(allowed_keys));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            raise_config(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        }
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::check_key(const std::string& key) const {
    if (!allowed_.empty() && allowed_.count(key) == 0) {
        raise_config("unknown config key '" + key + "'");
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    check_key(key);
    values_[key] = value;
}

std::string RunConfig::get_str(const std::string& key) const {
    check_key(key);
    const auto it = values_.find(key);
    if (it == values_.end()) raise_config("missing required config key '" + key + "'");
    return it->second;
}

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
    check_key(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    check_key(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
        raise_config("config key '" + key + "' is not a number: '" + it->second + "'");
    }
    return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    check_key(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0') {
        raise_config("config key '" + key + "' is not an integer: '" + it->second + "'");
    }
    return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    check_key(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    raise_config("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : get_str_list(key)) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') {
            raise_config("config key '" + key + "' has a non-numeric element: '" + tok + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> RunConfig::get_str_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get_str(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    if (out.empty()) raise_config("config key '" + key + "' is an empty list");
    return out;
}

void RunConfig::write(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write config: " + path);
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    if (!out) raise_io("write failure on config: " + path);
}

}  // namespace fxl
