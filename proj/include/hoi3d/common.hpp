#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hoi3d {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// Shortest exact decimal form. Used wherever a double is written to text so
// identical runs produce identical bytes and a reader recovers the exact value.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline constexpr double kPi = 3.14159265358979323846;

} // namespace hoi3d
