#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pushq/common.hpp"

namespace pushq {

// Tagged scalar flowing through the evaluator. CSV fields always enter as
// Text; Int/Float appear only after a CAST (or from literals). Bool is an
// evaluator-internal kind produced by comparisons; it is never stored in CSV.
class Value {
  public:
    enum class Kind : uint8_t { Null, Text, Int, Float, Bool };

    Value() : kind_(Kind::Null) {}
    static Value null() { return Value(); }
    static Value text(std::string s) {
        Value v;
        v.kind_ = Kind::Text;
        v.text_ = std::move(s);
        return v;
    }
    static Value integer(int64_t i) {
        Value v;
        v.kind_ = Kind::Int;
        v.int_ = i;
        return v;
    }
    static Value real(double d) {
        Value v;
        v.kind_ = Kind::Float;
        v.float_ = d;
        return v;
    }
    static Value boolean(bool b) {
        Value v;
        v.kind_ = Kind::Bool;
        v.bool_ = b;
        return v;
    }

    Kind kind() const { return kind_; }
    bool is_null() const { return kind_ == Kind::Null; }
    bool is_text() const { return kind_ == Kind::Text; }
    bool is_numeric() const { return kind_ == Kind::Int || kind_ == Kind::Float; }

    const std::string& as_text() const {
        require(Kind::Text);
        return text_;
    }
    int64_t as_int() const {
        require(Kind::Int);
        return int_;
    }
    double as_float() const {
        require(Kind::Float);
        return float_;
    }
    bool as_bool() const {
        require(Kind::Bool);
        return bool_;
    }
    // Numeric value widened to double (Int or Float).
    double as_double() const {
        if (kind_ == Kind::Int) return static_cast<double>(int_);
        require(Kind::Float);
        return float_;
    }

    bool operator==(const Value& o) const {
        if (kind_ != o.kind_) return false;
        switch (kind_) {
            case Kind::Null: return true;
            case Kind::Text: return text_ == o.text_;
            case Kind::Int: return int_ == o.int_;
            case Kind::Float: return float_ == o.float_;
            case Kind::Bool: return bool_ == o.bool_;
        }
        return false;
    }

    // Display form, also the CSV serialization of one field.
    std::string to_string() const;

  private:
    void require(Kind k) const {
        if (kind_ != k) throw TypeError("value is not of the requested kind");
    }

    Kind kind_;
    bool bool_ = false;
    int64_t int_ = 0;
    double float_ = 0.0;
    std::string text_;
};

// Shortest decimal form of a double that parses back to the same bits.
// Integer-valued doubles print without a fractional part.
std::string format_double(double d);

// Strict full-string parses; return false without consuming on failure.
bool parse_int64(std::string_view s, int64_t& out);
bool parse_double(std::string_view s, double& out);

// Dialect integer arithmetic: two's-complement wrap-around. The SQL
// evaluator and the Bloom filter share these so both hash paths agree on
// every input.
inline int64_t wrap_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
inline int64_t wrap_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
inline int64_t wrap_mul(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

}  // namespace pushq
