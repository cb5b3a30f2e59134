#include "gridcast/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gridcast {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& label) {
    Config cfg;
    cfg.label_ = label;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(label + ":" + std::to_string(lineno) +
                                         ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw std::runtime_error(label + ":" + std::to_string(lineno) +
                                         ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(label + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        if (section.empty())
            throw std::runtime_error(label + ":" + std::to_string(lineno) +
                                     ": key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(label + ":" + std::to_string(lineno) + ": empty key");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            throw std::runtime_error(label + ":" + std::to_string(lineno) + ": duplicate key '" +
                                     key + "' in [" + section + "]");
        sec[key] = {value, lineno};
    }
    return cfg;
}

const Config::Value* Config::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

void Config::fail_missing(const std::string& section, const std::string& key) const {
    throw std::runtime_error(label_ + ": missing required key '" + key + "' in [" + section + "]");
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) fail_missing(section, key);
    return v->text;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Value* v = find(section, key);
    return v ? v->text : fallback;
}

namespace {

[[noreturn]] void bad_value(const std::string& label, int line, const std::string& key,
                            const std::string& kind) {
    throw std::runtime_error(label + ":" + std::to_string(line) + ": value of '" + key +
                             "' is not a valid " + kind);
}

}  // namespace

long long Config::get_int(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) fail_missing(section, key);
    try {
        std::size_t pos = 0;
        const long long r = std::stoll(v->text, &pos);
        if (pos != v->text.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (...) {
        bad_value(label_, v->line, key, "integer");
    }
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) fail_missing(section, key);
    try {
        std::size_t pos = 0;
        const double r = std::stod(v->text, &pos);
        if (pos != v->text.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (...) {
        bad_value(label_, v->line, key, "number");
    }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (v->text == "true" || v->text == "1") return true;
    if (v->text == "false" || v->text == "0") return false;
    bad_value(label_, v->line, key, "boolean (true/false)");
}

std::uint64_t Config::get_seed(const std::string& section, const std::string& key,
                               std::uint64_t fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        const std::uint64_t r = std::stoull(v->text, &pos);
        if (pos != v->text.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (...) {
        bad_value(label_, v->line, key, "seed (unsigned integer)");
    }
}

void Config::require_known_keys(const std::string& section,
                                const std::vector<std::string>& allowed) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return;
    for (const auto& [key, value] : s->second) {
        bool ok = false;
        for (const auto& a : allowed)
            if (a == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::runtime_error(label_ + ":" + std::to_string(value.line) +
                                     ": unknown key '" + key + "' in [" + section + "]");
    }
}

std::string Config::canonical_text() const {
    std::ostringstream out;
    for (const auto& [section, keys] : sections_) {
        out << "[" << section << "]\n";
        for (const auto& [key, value] : keys) out << key << "=" << value.text << "\n";
    }
    return out.str();
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto t = item.find_first_not_of(" \t");
        if (t == std::string::npos) throw std::runtime_error("empty entry in numeric list");
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::runtime_error("empty numeric list");
    return out;
}

}  // namespace gridcast
