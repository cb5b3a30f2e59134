#include "gridcast/util.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gridcast {

int worker_count() {
    static const int n = [] {
        if (const char* env = std::getenv("GRIDCAST_WORKERS")) {
            const int v = std::stoi(env);
            if (v < 1) throw std::runtime_error("GRIDCAST_WORKERS must be >= 1");
            return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : static_cast<int>(hc);
    }();
    return n;
}

}  // namespace gridcast
