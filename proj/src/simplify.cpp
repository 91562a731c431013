#include <liq/expr.hpp>
#include <liq/sampling.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace liq {

namespace {

// Numeric coefficient of a monomial. Stays rational while int64 arithmetic
// holds, degrades to double on overflow.
struct Coeff {
    bool exact = true;
    Rational r{1};
    double d = 0.0;

    static Coeff from_rat(const Rational& q) {
        Coeff c;
        c.r = q;
        return c;
    }
    static Coeff from_double(double v) {
        Coeff c;
        c.exact = false;
        c.d = v;
        return c;
    }

    double value() const { return exact ? r.to_double() : d; }
    bool is_zero() const { return exact ? r.is_zero() : d == 0.0; }
    bool is_one() const { return exact && r.is_one(); }

    void mul(const Coeff& o) {
        if (exact && o.exact) {
            Rational out;
            if (rat_mul(r, o.r, out)) {
                r = out;
                return;
            }
        }
        d = value() * o.value();
        exact = false;
    }
    void add(const Coeff& o) {
        if (exact && o.exact) {
            Rational out;
            if (rat_add(r, o.r, out)) {
                r = out;
                return;
            }
        }
        d = value() + o.value();
        exact = false;
    }
    void pow_i(std::int64_t e) {
        if (is_zero() && e < 0) throw EvalError("division by zero");
        if (exact) {
            Rational out;
            if (rat_pow_int(r, e, out)) {
                r = out;
                return;
            }
            d = r.to_double();
            exact = false;
        }
        d = std::pow(d, double(e));
    }
    ExprPtr to_expr() const { return exact ? num(r) : num_double(d); }
};

struct Factor {
    ExprPtr base;
    Rational expo;
};

// Product of distinct bases with rational exponents, times a coefficient.
struct Mono {
    Coeff c;
    std::vector<Factor> fs;
};

using Poly = std::vector<Mono>;

int factor_cmp(const Factor& a, const Factor& b) {
    int c = expr_cmp(a.base, b.base);
    if (c) return c;
    if (a.expo == b.expo) return 0;
    return a.expo < b.expo ? -1 : 1;
}

int mono_key_cmp(const Mono& a, const Mono& b) {
    std::size_t n = std::min(a.fs.size(), b.fs.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = factor_cmp(a.fs[i], b.fs[i]);
        if (c) return c;
    }
    if (a.fs.size() != b.fs.size()) return a.fs.size() < b.fs.size() ? -1 : 1;
    return 0;
}

// Sort, merge equal keys, drop vanished terms.
void canon(Poly& p) {
    std::sort(p.begin(), p.end(),
              [](const Mono& a, const Mono& b) { return mono_key_cmp(a, b) < 0; });
    Poly merged;
    for (Mono& m : p) {
        if (!merged.empty() && mono_key_cmp(merged.back(), m) == 0)
            merged.back().c.add(m.c);
        else
            merged.push_back(std::move(m));
    }
    p.clear();
    for (Mono& m : merged)
        if (!m.c.is_zero()) p.push_back(std::move(m));
}

Poly one_poly() {
    Mono m;
    return {m};
}

ExprPtr mono_expr(const Mono& m) {
    std::vector<ExprPtr> parts;
    if (!m.c.is_one() || m.fs.empty()) parts.push_back(m.c.to_expr());
    for (const Factor& f : m.fs) parts.push_back(pow(f.base, f.expo));
    return prod(std::move(parts));
}

ExprPtr poly_expr(const Poly& p) {
    if (p.empty()) return num(0);
    std::vector<ExprPtr> terms;
    terms.reserve(p.size());
    for (const Mono& m : p) terms.push_back(mono_expr(m));
    return sum(std::move(terms));
}

Poly to_poly(const ExprPtr& e);
Poly normalize_mono(Mono m);
Poly poly_mul(const Poly& a, const Poly& b);
Poly power(const Poly& p, const Rational& r);

Poly mono_mul(const Mono& a, const Mono& b) {
    Mono m;
    m.c = a.c;
    m.c.mul(b.c);
    if (m.c.is_zero()) return {};
    std::size_t i = 0, j = 0;
    while (i < a.fs.size() && j < b.fs.size()) {
        int c = expr_cmp(a.fs[i].base, b.fs[j].base);
        if (c < 0) {
            m.fs.push_back(a.fs[i++]);
        } else if (c > 0) {
            m.fs.push_back(b.fs[j++]);
        } else {
            Rational e;
            if (!rat_add(a.fs[i].expo, b.fs[j].expo, e))
                throw std::runtime_error("exponent overflow");
            if (!e.is_zero()) m.fs.push_back({a.fs[i].base, e});
            ++i;
            ++j;
        }
    }
    for (; i < a.fs.size(); ++i) m.fs.push_back(a.fs[i]);
    for (; j < b.fs.size(); ++j) m.fs.push_back(b.fs[j]);
    return normalize_mono(std::move(m));
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const Mono& x : a)
        for (const Mono& y : b) {
            Poly t = mono_mul(x, y);
            out.insert(out.end(), t.begin(), t.end());
        }
    canon(out);
    return out;
}

Poly poly_pow_small(const Poly& p, std::int64_t k) {
    Poly acc = one_poly();
    Poly base = p;
    while (k) {
        if (k & 1) acc = poly_mul(acc, base);
        k >>= 1;
        if (k) base = poly_mul(base, base);
    }
    return acc;
}

// Exponent merging left factors whose base can be opened back up once the
// exponent became an integer: numbers fold into the coefficient, nested
// powers merge, products distribute, small sums expand.
Poly normalize_mono(Mono m) {
    for (std::size_t i = 0; i < m.fs.size(); ++i) {
        const Factor f = m.fs[i];
        if (!f.expo.is_integer()) continue;
        bool openable = f.base->kind == Kind::Number || f.base->kind == Kind::Power ||
                        f.base->kind == Kind::Product ||
                        (f.base->kind == Kind::Sum && f.expo.num >= 1 && f.expo.num <= 16);
        if (!openable) continue;
        Mono rest = std::move(m);
        rest.fs.erase(rest.fs.begin() + i);
        return poly_mul(normalize_mono(std::move(rest)), power(to_poly(f.base), f.expo));
    }
    return {std::move(m)};
}

Poly mono_pow_int(const Mono& m, std::int64_t k) {
    Mono out;
    out.c = m.c;
    out.c.pow_i(k);
    for (const Factor& f : m.fs) {
        Rational e;
        if (!rat_mul(f.expo, Rational(k), e)) throw std::runtime_error("exponent overflow");
        if (!e.is_zero()) out.fs.push_back({f.base, e});
    }
    return normalize_mono(std::move(out));
}

Poly mono_pow_frac(const Mono& m, const Rational& r) {
    if (m.fs.empty()) {
        if (m.c.exact) {
            if (m.c.r.num < 0) throw EvalError("fractional power of a negative base");
            if (m.c.r.is_zero()) {
                if (r.num < 0) throw EvalError("division by zero");
                return {};
            }
            Rational root, out;
            if (rat_root(m.c.r, r.den, root) && rat_pow_int(root, r.num, out)) {
                Mono mm;
                mm.c = Coeff::from_rat(out);
                return {mm};
            }
            Mono mm;
            mm.fs.push_back({num(m.c.r), r});
            return {mm};
        }
        if (m.c.d < 0) throw EvalError("fractional power of a negative base");
        if (m.c.d == 0.0) {
            if (r.num < 0) throw EvalError("division by zero");
            return {};
        }
        Mono mm;
        mm.c = Coeff::from_double(std::pow(m.c.d, r.to_double()));
        return {mm};
    }
    if (m.c.is_one() && m.fs.size() == 1) {
        const Factor& f = m.fs[0];
        bool even_int = f.expo.is_integer() && (f.expo.num % 2 == 0);
        if (!even_int) {
            Rational e;
            if (!rat_mul(f.expo, r, e)) throw std::runtime_error("exponent overflow");
            Mono mm;
            if (!e.is_zero()) mm.fs.push_back({f.base, e});
            return normalize_mono(std::move(mm));
        }
        Mono mm;
        mm.fs.push_back({pow(f.base, f.expo), r});
        return {mm};
    }
    // fractional powers do not distribute over products
    Mono mm;
    mm.fs.push_back({mono_expr(m), r});
    return {mm};
}

Poly power(const Poly& p, const Rational& r) {
    if (r.is_zero()) return one_poly();  // 0^0 is 1
    if (r.is_one()) return p;
    if (p.empty()) {
        if (r.num < 0) throw EvalError("division by zero");
        return {};
    }
    if (r.is_integer()) {
        if (p.size() == 1) return mono_pow_int(p[0], r.num);
        if (r.num >= 2 && r.num <= 16) return poly_pow_small(p, r.num);
        Mono m;
        m.fs.push_back({poly_expr(p), r});
        return {m};
    }
    if (p.size() == 1) return mono_pow_frac(p[0], r);
    Mono m;
    m.fs.push_back({poly_expr(p), r});
    return {m};
}

Poly to_poly(const ExprPtr& e) {
    switch (e->kind) {
        case Kind::Number: {
            Coeff c = e->exact ? Coeff::from_rat(e->rat) : Coeff::from_double(e->dval);
            if (c.is_zero()) return {};
            Mono m;
            m.c = c;
            return {m};
        }
        case Kind::Var: {
            Mono m;
            m.fs.push_back({e, Rational(1)});
            return {m};
        }
        case Kind::Sum: {
            Poly out;
            for (const auto& k : e->kids) {
                Poly t = to_poly(k);
                out.insert(out.end(), t.begin(), t.end());
            }
            canon(out);
            return out;
        }
        case Kind::Product: {
            Poly out = one_poly();
            for (const auto& k : e->kids) out = poly_mul(out, to_poly(k));
            return out;
        }
        case Kind::Power:
            return power(to_poly(e->kids[0]), e->rat);
        case Kind::Func: {
            ExprPtr a = poly_expr(to_poly(e->kids[0]));
            if (a->kind == Kind::Number && !a->exact) {
                Mono m;
                m.c = Coeff::from_double(apply_func_value(e->fid, a->dval));
                if (m.c.is_zero()) return {};
                return {m};
            }
            if (a->kind == Kind::Number && a->exact) {
                const Rational& q = a->rat;
                bool folded = true;
                Rational v;
                switch (e->fid) {
                    case FuncId::Sin:
                    case FuncId::Tan:
                        if (q.is_zero()) v = Rational(0);
                        else folded = false;
                        break;
                    case FuncId::Cos:
                        if (q.is_zero()) v = Rational(1);
                        else folded = false;
                        break;
                    case FuncId::Exp:
                        if (q.is_zero()) v = Rational(1);
                        else folded = false;
                        break;
                    case FuncId::Log:
                        if (q.num <= 0) throw EvalError("log of a non-positive value");
                        if (q.is_one()) v = Rational(0);
                        else folded = false;
                        break;
                    case FuncId::Abs:
                        v = Rational(q.num < 0 ? -q.num : q.num, q.den);
                        break;
                    case FuncId::Sign:
                        v = Rational(q.num > 0 ? 1 : (q.num < 0 ? -1 : 0));
                        break;
                }
                if (folded) {
                    if (v.is_zero()) return {};
                    Mono m;
                    m.c = Coeff::from_rat(v);
                    return {m};
                }
            }
            Mono m;
            m.fs.push_back({func(e->fid, a), Rational(1)});
            return {m};
        }
    }
    return {};
}

} // namespace

ExprPtr simplify(const ExprPtr& e) { return poly_expr(to_poly(e)); }

ZeroCheck is_zero_on(const ExprPtr& e, const std::vector<std::string>& vars,
                     const std::vector<double>& lo, const std::vector<double>& hi,
                     double tol, int nsamples, unsigned seed) {
    ZeroCheck out;
    ExprPtr s = simplify(e);
    if (is_literal_zero(s)) {
        out.zero = true;
        out.symbolic = true;
        return out;
    }

    // evaluating term by term exposes the cancellation scale
    std::vector<Tape> terms;
    if (s->kind == Kind::Sum)
        for (const auto& k : s->kids) terms.push_back(compile(k, vars));
    else
        terms.push_back(compile(s, vars));

    int valid = 0;
    for (int k = 0; k < nsamples; ++k) {
        std::vector<double> p = halton_point(k, seed, lo, hi);
        double v = 0.0, big = 0.0;
        try {
            for (const Tape& t : terms) {
                double tv = t.eval(p.data());
                v += tv;
                big = std::max(big, std::fabs(tv));
            }
        } catch (const EvalError&) {
            continue;
        }
        ++valid;
        double scale = 1.0 + big;
        if (std::fabs(v) > tol * scale) {
            out.zero = false;
            out.witness = p;
            out.value = v;
            out.scale = scale;
            return out;
        }
        out.scale = std::max(out.scale, scale);
    }
    if (valid == 0) throw EvalError("expression could not be evaluated anywhere in the box");
    out.zero = true;
    out.symbolic = false;
    return out;
}

} // namespace liq
