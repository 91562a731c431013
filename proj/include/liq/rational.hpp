#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace liq {

/**
 * Exact rational number on int64, kept in lowest terms with positive
 * denominator. Arithmetic goes through __int128 and reports overflow
 * instead of wrapping, so callers can fall back to floating point.
 */
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    bool is_integer() const { return den == 1; }
    bool is_zero() const { return num == 0; }
    bool is_one() const { return num == 1 && den == 1; }
    double to_double() const { return double(num) / double(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    // total order by value
    friend bool operator<(const Rational& a, const Rational& b) {
        return (__int128)a.num * b.den < (__int128)b.num * a.den;
    }
};

// Checked arithmetic: returns false when the reduced result leaves int64.
bool rat_add(const Rational& a, const Rational& b, Rational& out);
bool rat_sub(const Rational& a, const Rational& b, Rational& out);
bool rat_mul(const Rational& a, const Rational& b, Rational& out);
bool rat_div(const Rational& a, const Rational& b, Rational& out);
// a^e for integer e (e may be negative when a != 0)
bool rat_pow_int(const Rational& a, std::int64_t e, Rational& out);
// exact q-th root if one exists
bool rat_root(const Rational& a, std::int64_t q, Rational& out);

std::string rat_to_string(const Rational& r);

} // namespace liq
