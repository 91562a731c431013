#include <liq/rational.hpp>

#include <cmath>
#include <limits>

namespace liq {

namespace {

using i128 = __int128;

bool fits64(i128 v) {
    return v >= std::numeric_limits<std::int64_t>::min() &&
           v <= std::numeric_limits<std::int64_t>::max();
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Reduce n/d (d != 0) and store if it fits.
bool make(i128 n, i128 d, Rational& out) {
    if (d == 0) return false;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    if (!fits64(n) || !fits64(d)) return false;
    out.num = (std::int64_t)n;
    out.den = (std::int64_t)d;
    return true;
}

} // namespace

bool rat_add(const Rational& a, const Rational& b, Rational& out) {
    return make((i128)a.num * b.den + (i128)b.num * a.den, (i128)a.den * b.den, out);
}

bool rat_sub(const Rational& a, const Rational& b, Rational& out) {
    return make((i128)a.num * b.den - (i128)b.num * a.den, (i128)a.den * b.den, out);
}

bool rat_mul(const Rational& a, const Rational& b, Rational& out) {
    return make((i128)a.num * b.num, (i128)a.den * b.den, out);
}

bool rat_div(const Rational& a, const Rational& b, Rational& out) {
    if (b.num == 0) return false;
    return make((i128)a.num * b.den, (i128)a.den * b.num, out);
}

bool rat_pow_int(const Rational& a, std::int64_t e, Rational& out) {
    if (e == 0) {
        out = Rational(1);  // includes 0^0
        return true;
    }
    Rational base = a;
    if (e < 0) {
        if (a.num == 0) return false;
        base = Rational(a.den, a.num);
        e = -e;
    }
    Rational acc(1);
    while (e) {
        if (e & 1) {
            if (!rat_mul(acc, base, acc)) return false;
        }
        e >>= 1;
        if (e) {
            if (!rat_mul(base, base, base)) return false;
        }
    }
    out = acc;
    return true;
}

namespace {

// Integer q-th root if exact.
bool iroot(std::int64_t v, std::int64_t q, std::int64_t& out) {
    if (v == 0) {
        out = 0;
        return true;
    }
    if (v < 0) return false;  // callers handle sign for odd q
    double guess = std::pow((double)v, 1.0 / (double)q);
    for (std::int64_t r = std::max<std::int64_t>(1, (std::int64_t)guess - 2);
         r <= (std::int64_t)guess + 2; ++r) {
        i128 p = 1;
        bool over = false;
        for (std::int64_t i = 0; i < q; ++i) {
            p *= r;
            if (p > (i128)v) {
                over = true;
                break;
            }
        }
        if (!over && p == (i128)v) {
            out = r;
            return true;
        }
    }
    return false;
}

} // namespace

bool rat_root(const Rational& a, std::int64_t q, Rational& out) {
    if (q <= 0) return false;
    if (q == 1) {
        out = a;
        return true;
    }
    bool negate = false;
    std::int64_t n = a.num;
    if (n < 0) {
        if (q % 2 == 0) return false;
        negate = true;
        n = -n;
    }
    std::int64_t rn, rd;
    if (!iroot(n, q, rn) || !iroot(a.den, q, rd)) return false;
    out = Rational(negate ? -rn : rn, rd);
    return true;
}

std::string rat_to_string(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

} // namespace liq
