#include <liq/expr.hpp>
#include <liq/sampling.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

namespace liq {

ExprPtr num(const Rational& r) {
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Number;
    E->exact = true;
    E->rat = r;
    return E;
}

ExprPtr num(std::int64_t n) { return num(Rational(n)); }

ExprPtr num_double(double v) {
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Number;
    E->exact = false;
    E->dval = v;
    return E;
}

ExprPtr num_auto(double v) {
    for (std::int64_t q = 1; q <= 12; ++q) {
        double scaled = v * (double)q;
        if (std::abs(scaled) > 9.0e15) break;
        std::int64_t p = (std::int64_t)std::llround(scaled);
        if ((double)p / (double)q == v) return num(Rational(p, q));
    }
    return num_double(v);
}

ExprPtr var(const std::string& name) {
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Var;
    E->name = name;
    return E;
}

ExprPtr sum(std::vector<ExprPtr> kids) {
    if (kids.empty()) return num(0);
    if (kids.size() == 1) return kids[0];
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Sum;
    E->kids = std::move(kids);
    return E;
}

ExprPtr prod(std::vector<ExprPtr> kids) {
    if (kids.empty()) return num(1);
    if (kids.size() == 1) return kids[0];
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Product;
    E->kids = std::move(kids);
    return E;
}

ExprPtr pow(ExprPtr base, const Rational& e) {
    if (e.is_one()) return base;
    if (e.is_zero()) return num(1);  // 0^0 is 1 by convention
    if (base->kind == Kind::Power) {
        // (b^e1)^e2 folds unless e1 is even and e2 fractional, where the
        // inner power has already dropped the sign of b
        const Rational& e1 = base->rat;
        bool even_inner = e1.is_integer() && (e1.num % 2 == 0);
        if (e.is_integer() || !even_inner) {
            Rational merged;
            if (rat_mul(e1, e, merged)) return pow(base->kids[0], merged);
        }
    }
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Power;
    E->rat = e;
    E->kids.push_back(std::move(base));
    return E;
}

ExprPtr func(FuncId f, ExprPtr arg) {
    auto E = std::make_shared<Expr>();
    E->kind = Kind::Func;
    E->fid = f;
    E->kids.push_back(std::move(arg));
    return E;
}

ExprPtr neg(ExprPtr e) {
    if (e->kind == Kind::Number) {
        if (e->exact) return num(Rational(-e->rat.num, e->rat.den));
        return num_double(-e->dval);
    }
    return prod({num(-1), std::move(e)});
}

bool is_literal_zero(const ExprPtr& e) {
    return e->kind == Kind::Number && (e->exact ? e->rat.is_zero() : e->dval == 0.0);
}

bool is_literal_one(const ExprPtr& e) {
    return e->kind == Kind::Number && (e->exact ? e->rat.is_one() : e->dval == 1.0);
}

int expr_cmp(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    switch (a->kind) {
        case Kind::Number: {
            if (a->exact != b->exact) return a->exact ? -1 : 1;
            if (a->exact) {
                if (a->rat == b->rat) return 0;
                return a->rat < b->rat ? -1 : 1;
            }
            if (a->dval == b->dval) return 0;
            return a->dval < b->dval ? -1 : 1;
        }
        case Kind::Var:
            return a->name.compare(b->name);
        case Kind::Power: {
            int c = expr_cmp(a->kids[0], b->kids[0]);
            if (c) return c;
            if (a->rat == b->rat) return 0;
            return a->rat < b->rat ? -1 : 1;
        }
        case Kind::Func: {
            if (a->fid != b->fid) return a->fid < b->fid ? -1 : 1;
            return expr_cmp(a->kids[0], b->kids[0]);
        }
        case Kind::Sum:
        case Kind::Product: {
            if (a->kids.size() != b->kids.size())
                return a->kids.size() < b->kids.size() ? -1 : 1;
            for (std::size_t i = 0; i < a->kids.size(); ++i) {
                int c = expr_cmp(a->kids[i], b->kids[i]);
                if (c) return c;
            }
            return 0;
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

bool func_by_name(const std::string& id, FuncId& f) {
    if (id == "sin") f = FuncId::Sin;
    else if (id == "cos") f = FuncId::Cos;
    else if (id == "tan") f = FuncId::Tan;
    else if (id == "exp") f = FuncId::Exp;
    else if (id == "log") f = FuncId::Log;
    else if (id == "abs") f = FuncId::Abs;
    else if (id == "sign") f = FuncId::Sign;
    else return false;
    return true;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    ExprPtr run() {
        ExprPtr e = parse_sum();
        skip();
        if (i_ != s_.size()) fail("trailing input");
        return e;
    }

private:
    const std::string& s_;
    std::size_t i_ = 0;

    void skip() {
        while (i_ < s_.size() && std::isspace((unsigned char)s_[i_])) ++i_;
    }

    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& m) {
        throw ParseError(m + " at position " + std::to_string(i_), i_);
    }

    ExprPtr parse_sum() {
        std::vector<ExprPtr> terms;
        terms.push_back(parse_term());
        for (;;) {
            if (eat('+')) terms.push_back(parse_term());
            else if (eat('-')) terms.push_back(neg(parse_term()));
            else break;
        }
        return sum(std::move(terms));
    }

    ExprPtr parse_term() {
        std::vector<ExprPtr> fs;
        fs.push_back(parse_factor());
        for (;;) {
            if (eat('*')) fs.push_back(parse_factor());
            else if (eat('/')) fs.push_back(pow(parse_factor(), Rational(-1)));
            else break;
        }
        return prod(std::move(fs));
    }

    ExprPtr parse_factor() {
        skip();
        if (eat('-')) return neg(parse_factor());
        ExprPtr b = parse_base();
        skip();
        if (i_ < s_.size() && s_[i_] == '^') {
            ++i_;
            return pow(std::move(b), parse_exponent());
        }
        return b;
    }

    ExprPtr parse_base() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of input");
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            ExprPtr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::size_t start = i_;
            while (i_ < s_.size() &&
                   (std::isalnum((unsigned char)s_[i_]) || s_[i_] == '_'))
                ++i_;
            std::string id = s_.substr(start, i_ - start);
            skip();
            if (i_ < s_.size() && s_[i_] == '(') {
                ++i_;
                ExprPtr a = parse_sum();
                if (!eat(')')) fail("expected ')' after function argument");
                if (id == "sqrt") return pow(std::move(a), Rational(1, 2));
                FuncId f;
                if (!func_by_name(id, f)) fail("unknown function '" + id + "'");
                return func(f, std::move(a));
            }
            return var(id);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Rational parse_exponent() {
        skip();
        if (eat('(')) {
            std::int64_t n = parse_integer();
            Rational r(n);
            if (eat('/')) {
                std::int64_t d = parse_integer();
                if (d <= 0) fail("exponent denominator must be positive");
                r = Rational(n, d);
            }
            if (!eat(')')) fail("expected ')' in exponent");
            return r;
        }
        return Rational(parse_integer());
    }

    std::int64_t parse_integer() {
        skip();
        bool negv = eat('-');
        skip();
        std::size_t start = i_;
        while (i_ < s_.size() && std::isdigit((unsigned char)s_[i_])) ++i_;
        if (i_ == start) fail("expected integer");
        std::int64_t v = 0;
        for (std::size_t k = start; k < i_; ++k) {
            if (v > (std::numeric_limits<std::int64_t>::max() - 9) / 10)
                fail("integer literal too large");
            v = v * 10 + (s_[k] - '0');
        }
        return negv ? -v : v;
    }

    ExprPtr parse_number() {
        std::size_t start = i_;
        while (i_ < s_.size() && std::isdigit((unsigned char)s_[i_])) ++i_;
        if (i_ < s_.size() && s_[i_] == '.') {
            ++i_;
            while (i_ < s_.size() && std::isdigit((unsigned char)s_[i_])) ++i_;
        }
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
            std::size_t j = i_ + 1;
            if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
            if (j < s_.size() && std::isdigit((unsigned char)s_[j])) {
                i_ = j;
                while (i_ < s_.size() && std::isdigit((unsigned char)s_[i_])) ++i_;
            }
        }
        std::string text = s_.substr(start, i_ - start);
        if (text == "." ) fail("malformed number");

        // try the exact route first
        __int128 mant = 0;
        int fracdigits = 0;
        long expval = 0;
        bool overflow = false;
        std::size_t k = 0;
        bool seen_dot = false;
        for (; k < text.size(); ++k) {
            char ch = text[k];
            if (ch == '.') {
                seen_dot = true;
                continue;
            }
            if (ch == 'e' || ch == 'E') break;
            mant = mant * 10 + (ch - '0');
            if (seen_dot) ++fracdigits;
            if (mant > (__int128)4 * 1000000000000000000LL) {
                overflow = true;
                break;
            }
        }
        if (!overflow && k < text.size() && (text[k] == 'e' || text[k] == 'E')) {
            expval = std::strtol(text.c_str() + k + 1, nullptr, 10);
        }
        if (!overflow) {
            long e10 = expval - fracdigits;
            Rational scale, out;
            if (rat_pow_int(Rational(10), e10, scale) &&
                rat_mul(Rational((std::int64_t)mant), scale, out))
                return num(out);
        }
        return num_double(std::strtod(text.c_str(), nullptr));
    }
};

} // namespace

ExprPtr parse_expr(const std::string& text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// printing

namespace {

const char* func_name(FuncId f) {
    switch (f) {
        case FuncId::Sin: return "sin";
        case FuncId::Cos: return "cos";
        case FuncId::Tan: return "tan";
        case FuncId::Exp: return "exp";
        case FuncId::Log: return "log";
        case FuncId::Abs: return "abs";
        case FuncId::Sign: return "sign";
    }
    return "?";
}

std::string double_literal(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string print_node(const ExprPtr& e, bool& negative);

// Prints a power with a positive exponent shown (caller decides / vs *).
std::string print_power(const ExprPtr& base, const Rational& expo) {
    if (expo == Rational(1, 2)) {
        bool n = false;
        std::string inner = print_node(base, n);
        if (n) inner = "-" + inner;
        return "sqrt(" + inner + ")";
    }
    bool n = false;
    std::string b = print_node(base, n);
    bool atomic = !n && (base->kind == Kind::Var || base->kind == Kind::Func ||
                         (base->kind == Kind::Number && base->exact &&
                          base->rat.is_integer() && base->rat.num >= 0) ||
                         (base->kind == Kind::Number && !base->exact && base->dval >= 0));
    if (!atomic) b = "(" + (n ? "-" + b : b) + ")";
    if (expo.is_one()) return b;
    if (expo.is_integer()) return b + "^" + std::to_string(expo.num);
    return b + "^(" + rat_to_string(expo) + ")";
}

// Renders a product-like list of factors. The sign is returned through
// `negative` so sums can typeset "a - b".
std::string print_factors(const std::vector<ExprPtr>& kids, bool& negative) {
    Rational cnum(1);
    bool exact_coeff = true;
    double dcoeff = 1.0;
    std::vector<std::string> top, bot;
    std::vector<ExprPtr> flat;

    // flatten nested products
    std::vector<ExprPtr> work(kids.rbegin(), kids.rend());
    while (!work.empty()) {
        ExprPtr k = work.back();
        work.pop_back();
        if (k->kind == Kind::Product) {
            for (auto it = k->kids.rbegin(); it != k->kids.rend(); ++it) work.push_back(*it);
        } else {
            flat.push_back(k);
        }
    }

    for (const ExprPtr& k : flat) {
        if (k->kind == Kind::Number && k->exact) {
            Rational out;
            if (rat_mul(cnum, k->rat, out)) {
                cnum = out;
                continue;
            }
        }
        if (k->kind == Kind::Number && !k->exact) {
            dcoeff *= k->dval;
            exact_coeff = false;
            continue;
        }
        if (k->kind == Kind::Power && k->rat.num < 0) {
            Rational pe(-k->rat.num, k->rat.den);
            bot.push_back(print_power(k->kids[0], pe));
            continue;
        }
        if (k->kind == Kind::Power) {
            top.push_back(print_power(k->kids[0], k->rat));
            continue;
        }
        if (k->kind == Kind::Sum) {
            bool n = false;
            std::string s = print_node(k, n);
            top.push_back("(" + (n ? "-" + s : s) + ")");
            continue;
        }
        bool n = false;
        std::string s = print_node(k, n);
        if (n) cnum = Rational(-cnum.num, cnum.den);
        top.push_back(s);
    }

    negative = (cnum.num < 0) != (!exact_coeff && dcoeff < 0);
    std::int64_t an = cnum.num < 0 ? -cnum.num : cnum.num;

    std::string out;
    if (!exact_coeff) {
        // fold the rational part into the double for display
        out = double_literal(std::fabs(dcoeff) * double(an) / double(cnum.den));
    } else if (an != 1 || top.empty()) {
        out = std::to_string(an);
    }
    for (const std::string& t : top) {
        if (!out.empty()) out += "*";
        out += t;
    }
    if (out.empty()) out = "1";
    if (exact_coeff && cnum.den != 1) bot.push_back(std::to_string(cnum.den));
    for (const std::string& b : bot) out += "/" + b;
    return out;
}

std::string print_node(const ExprPtr& e, bool& negative) {
    negative = false;
    switch (e->kind) {
        case Kind::Number: {
            if (e->exact) {
                negative = e->rat.num < 0;
                Rational a(negative ? -e->rat.num : e->rat.num, e->rat.den);
                return rat_to_string(a);
            }
            negative = std::signbit(e->dval) && e->dval != 0.0;
            return double_literal(std::fabs(e->dval));
        }
        case Kind::Var:
            return e->name;
        case Kind::Func: {
            bool n = false;
            std::string a = print_node(e->kids[0], n);
            return std::string(func_name(e->fid)) + "(" + (n ? "-" + a : a) + ")";
        }
        case Kind::Power: {
            if (e->rat.num < 0) return print_factors({e}, negative);
            return print_power(e->kids[0], e->rat);
        }
        case Kind::Product:
            return print_factors(e->kids, negative);
        case Kind::Sum: {
            std::string out;
            for (std::size_t i = 0; i < e->kids.size(); ++i) {
                bool n = false;
                std::string t = print_node(e->kids[i], n);
                if (e->kids[i]->kind == Kind::Sum) {
                    t = "(" + (n ? "-" + t : t) + ")";
                    n = false;
                }
                if (i == 0) {
                    out = (n ? "-" : "") + t;
                } else {
                    out += n ? " - " : " + ";
                    out += t;
                }
            }
            return out;
        }
    }
    return "?";
}

} // namespace

std::string to_string(const ExprPtr& e) {
    bool n = false;
    std::string s = print_node(e, n);
    return n ? "-" + s : s;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double apply_func(FuncId f, double x) {
    switch (f) {
        case FuncId::Sin: return std::sin(x);
        case FuncId::Cos: return std::cos(x);
        case FuncId::Tan: return std::tan(x);
        case FuncId::Exp: return std::exp(x);
        case FuncId::Log:
            if (x <= 0.0) throw EvalError("log of a non-positive value");
            return std::log(x);
        case FuncId::Abs: return std::fabs(x);
        case FuncId::Sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
    throw EvalError("unknown function");
}

double pow_int_val(double b, std::int64_t e) {
    if (e == 0) return 1.0;  // includes 0^0
    bool inv = e < 0;
    if (inv) {
        if (b == 0.0) throw EvalError("division by zero");
        e = -e;
    }
    double acc = 1.0, base = b;
    while (e) {
        if (e & 1) acc *= base;
        e >>= 1;
        if (e) base *= base;
    }
    return inv ? 1.0 / acc : acc;
}

double pow_rat_val(double b, const Rational& r) {
    if (r.is_integer()) return pow_int_val(b, r.num);
    if (b < 0.0) throw EvalError("fractional power of a negative base");
    if (b == 0.0) {
        if (r.num < 0) throw EvalError("division by zero");
        return 0.0;
    }
    return std::pow(b, r.to_double());
}

double eval_rec(const ExprPtr& e, const std::map<std::string, double>& env) {
    switch (e->kind) {
        case Kind::Number:
            return e->exact ? e->rat.to_double() : e->dval;
        case Kind::Var: {
            auto it = env.find(e->name);
            if (it == env.end()) throw EvalError("unbound variable '" + e->name + "'");
            return it->second;
        }
        case Kind::Sum: {
            double s = 0.0;
            for (const auto& k : e->kids) s += eval_rec(k, env);
            return s;
        }
        case Kind::Product: {
            double p = 1.0;
            for (const auto& k : e->kids) p *= eval_rec(k, env);
            return p;
        }
        case Kind::Power:
            return pow_rat_val(eval_rec(e->kids[0], env), e->rat);
        case Kind::Func:
            return apply_func(e->fid, eval_rec(e->kids[0], env));
    }
    throw EvalError("unknown node");
}

} // namespace

double eval(const ExprPtr& e, const std::map<std::string, double>& env) {
    double v = eval_rec(e, env);
    if (std::isnan(v)) throw EvalError("evaluation produced NaN");
    return v;
}

double apply_func_value(FuncId f, double x) { return apply_func(f, x); }

namespace {

void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
    if (e->kind == Kind::Var) out.insert(e->name);
    for (const auto& k : e->kids) collect_vars(k, out);
}

} // namespace

std::vector<std::string> free_vars(const ExprPtr& e) {
    std::set<std::string> s;
    collect_vars(e, s);
    return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// differentiation

ExprPtr diff(const ExprPtr& e, const std::string& v) {
    switch (e->kind) {
        case Kind::Number:
            return num(0);
        case Kind::Var:
            return num(e->name == v ? 1 : 0);
        case Kind::Sum: {
            std::vector<ExprPtr> parts;
            for (const auto& k : e->kids) {
                ExprPtr d = diff(k, v);
                if (!is_literal_zero(d)) parts.push_back(d);
            }
            return sum(std::move(parts));
        }
        case Kind::Product: {
            std::vector<ExprPtr> terms;
            for (std::size_t i = 0; i < e->kids.size(); ++i) {
                ExprPtr d = diff(e->kids[i], v);
                if (is_literal_zero(d)) continue;
                std::vector<ExprPtr> fs;
                for (std::size_t j = 0; j < e->kids.size(); ++j)
                    fs.push_back(j == i ? d : e->kids[j]);
                terms.push_back(prod(std::move(fs)));
            }
            return sum(std::move(terms));
        }
        case Kind::Power: {
            ExprPtr d = diff(e->kids[0], v);
            if (is_literal_zero(d)) return num(0);
            Rational em1;
            if (!rat_sub(e->rat, Rational(1), em1))
                throw std::runtime_error("exponent overflow in derivative");
            return prod({num(e->rat), pow(e->kids[0], em1), d});
        }
        case Kind::Func: {
            ExprPtr a = e->kids[0];
            ExprPtr d = diff(a, v);
            if (is_literal_zero(d)) return num(0);
            ExprPtr outer;
            switch (e->fid) {
                case FuncId::Sin: outer = func(FuncId::Cos, a); break;
                case FuncId::Cos: outer = neg(func(FuncId::Sin, a)); break;
                case FuncId::Tan:
                    outer = sum({num(1), pow(func(FuncId::Tan, a), Rational(2))});
                    break;
                case FuncId::Exp: outer = func(FuncId::Exp, a); break;
                case FuncId::Log: outer = pow(a, Rational(-1)); break;
                case FuncId::Abs: outer = func(FuncId::Sign, a); break;
                case FuncId::Sign: return num(0);
            }
            return prod({outer, d});
        }
    }
    return num(0);
}

// ---------------------------------------------------------------------------
// compiled evaluation

Tape compile(const ExprPtr& e, const std::vector<std::string>& vars) {
    Tape t;
    t.nvars_ = vars.size();
    std::map<std::string, std::int32_t> slot;
    for (std::size_t i = 0; i < vars.size(); ++i) slot[vars[i]] = (std::int32_t)i;

    std::size_t depth = 0, maxdepth = 0;
    auto push = [&]() {
        if (++depth > maxdepth) maxdepth = depth;
    };

    // iterative post-order emit
    struct Item {
        const Expr* node;
        bool emit;
    };
    std::vector<Item> st{{e.get(), false}};
    // Sum/Product need their kids on the stack before the fold op runs, so
    // kids are visited first and the combining instruction second.
    std::vector<const Expr*> order;
    while (!st.empty()) {
        Item it = st.back();
        st.pop_back();
        if (it.emit) {
            order.push_back(it.node);
            continue;
        }
        st.push_back({it.node, true});
        for (auto k = it.node->kids.rbegin(); k != it.node->kids.rend(); ++k)
            st.push_back({k->get(), false});
    }
    for (const Expr* n : order) {
        Tape::Ins ins;
        switch (n->kind) {
            case Kind::Number:
                ins.op = Tape::Op::Const;
                ins.c = n->exact ? n->rat.to_double() : n->dval;
                push();
                break;
            case Kind::Var: {
                auto f = slot.find(n->name);
                if (f == slot.end())
                    throw std::runtime_error("variable '" + n->name +
                                             "' is not part of this system");
                ins.op = Tape::Op::Load;
                ins.a = f->second;
                push();
                break;
            }
            case Kind::Sum:
                ins.op = Tape::Op::AddN;
                ins.a = (std::int32_t)n->kids.size();
                depth -= n->kids.size() - 1;
                break;
            case Kind::Product:
                ins.op = Tape::Op::MulN;
                ins.a = (std::int32_t)n->kids.size();
                depth -= n->kids.size() - 1;
                break;
            case Kind::Power:
                if (n->rat.is_integer()) {
                    ins.op = Tape::Op::PowI;
                    ins.a = (std::int32_t)n->rat.num;
                } else {
                    ins.op = Tape::Op::PowR;
                    ins.a = (std::int32_t)t.rats_.size();
                    t.rats_.push_back(n->rat);
                }
                break;
            case Kind::Func:
                ins.op = Tape::Op::Fun;
                ins.a = (std::int32_t)n->fid;
                break;
        }
        t.ins_.push_back(ins);
    }
    t.depth_ = maxdepth;
    t.stack_.resize(maxdepth);
    return t;
}

double Tape::eval(const double* x) const {
    double* sp = stack_.data();
    std::size_t top = 0;
    for (const Ins& ins : ins_) {
        switch (ins.op) {
            case Op::Const:
                sp[top++] = ins.c;
                break;
            case Op::Load:
                sp[top++] = x[ins.a];
                break;
            case Op::AddN: {
                double s = 0.0;
                for (std::int32_t k = 0; k < ins.a; ++k) s += sp[--top];
                sp[top++] = s;
                break;
            }
            case Op::MulN: {
                double p = 1.0;
                for (std::int32_t k = 0; k < ins.a; ++k) p *= sp[--top];
                sp[top++] = p;
                break;
            }
            case Op::PowI:
                sp[top - 1] = pow_int_val(sp[top - 1], ins.a);
                break;
            case Op::PowR:
                sp[top - 1] = pow_rat_val(sp[top - 1], rats_[ins.a]);
                break;
            case Op::Fun:
                sp[top - 1] = apply_func((FuncId)ins.a, sp[top - 1]);
                break;
        }
    }
    double v = sp[0];
    if (std::isnan(v)) throw EvalError("evaluation produced NaN");
    return v;
}

} // namespace liq
