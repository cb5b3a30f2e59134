#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

enum class Family { gtcnd, csgd };

inline std::string family_name(Family f) { return f == Family::gtcnd ? "gtcnd" : "csgd"; }

inline Family family_from_name(const std::string& s) {
    if (s == "gtcnd") return Family::gtcnd;
    if (s == "csgd") return Family::csgd;
    throw std::domain_error("unknown distribution family: " + s);
}

}  // namespace gridcast
