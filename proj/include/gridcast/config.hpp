#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridcast {

// Flat sectioned key=value text configuration ('#' comments). Errors carry
// file:line so a bad experiment file points at the offending entry.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& label);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    long long get_int(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::uint64_t get_seed(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;

    // Rejects keys outside the allowed set (typo guard), with the line number.
    void require_known_keys(const std::string& section,
                            const std::vector<std::string>& allowed) const;

    // Canonical text for config hashing: sorted sections and keys.
    std::string canonical_text() const;

  private:
    struct Value {
        std::string text;
        int line = 0;
    };
    std::string label_;
    std::map<std::string, std::map<std::string, Value>> sections_;

    const Value* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void fail_missing(const std::string& section, const std::string& key) const;
};

std::vector<double> parse_double_list(const std::string& text);

}  // namespace gridcast
