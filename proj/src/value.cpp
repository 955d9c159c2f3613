#include "pushq/value.hpp"

#include <charconv>
#include <cmath>

namespace pushq {

std::string format_double(double d) {
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15) {
        // Integer-valued: print without a fractional part.
        return std::to_string(static_cast<long long>(d));
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, res.ptr);
}

std::string Value::to_string() const {
    switch (kind_) {
        case Kind::Null: return "";
        case Kind::Text: return text_;
        case Kind::Int: return std::to_string(int_);
        case Kind::Float: return format_double(float_);
        case Kind::Bool: return bool_ ? "true" : "false";
    }
    return "";
}

bool parse_int64(std::string_view s, int64_t& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace pushq
