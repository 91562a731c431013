#pragma once

#include <liq/rational.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace liq {

enum class Kind { Number, Var, Sum, Product, Power, Func };

enum class FuncId { Sin, Cos, Tan, Exp, Log, Abs, Sign };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/**
 * Immutable expression node. Sum and Product are n-ary; Power carries a
 * rational constant exponent (sqrt(f) is Power(f, 1/2)); Func wraps one of
 * the supported elementary functions. Numbers are exact rationals unless
 * arithmetic overflowed int64, in which case they degrade to doubles.
 */
struct Expr {
    Kind kind;
    bool exact = true;      // Number only
    Rational rat;           // Number value, or Power exponent
    double dval = 0.0;      // Number value when !exact
    std::string name;       // Var
    FuncId fid = FuncId::Sin;
    std::vector<ExprPtr> kids;
};

ExprPtr num(const Rational& r);
ExprPtr num(std::int64_t n);
ExprPtr num_double(double v);
// exact rational node when v is exactly p/q with q <= 12, else a double node
ExprPtr num_auto(double v);
ExprPtr var(const std::string& name);
ExprPtr sum(std::vector<ExprPtr> kids);      // empty -> 0, single -> kid
ExprPtr prod(std::vector<ExprPtr> kids);     // empty -> 1, single -> kid
ExprPtr pow(ExprPtr base, const Rational& e);
ExprPtr func(FuncId f, ExprPtr arg);
ExprPtr neg(ExprPtr e);

bool is_literal_zero(const ExprPtr& e);
bool is_literal_one(const ExprPtr& e);

// Structural total order on trees; returns <0, 0, >0. Zero means identical.
int expr_cmp(const ExprPtr& a, const ExprPtr& b);

struct ParseError : std::runtime_error {
    std::size_t pos;
    ParseError(const std::string& msg, std::size_t p) : std::runtime_error(msg), pos(p) {}
};

/**
 * Parses the input grammar:
 *   expr     := term (('+'|'-') term)*
 *   term     := factor (('*'|'/') factor)*
 *   factor   := ('-' factor) | base ('^' exponent)?
 *   base     := NUMBER | IDENT | '(' expr ')' | FUNC '(' expr ')'
 *   exponent := INTEGER | '(' INTEGER '/' POSINT ')'
 * FUNC is one of sin cos tan exp log sqrt abs sign.
 */
ExprPtr parse_expr(const std::string& text);

// Prints a form that parses back to an equivalent tree; printing the
// reparsed tree reproduces the same text.
std::string to_string(const ExprPtr& e);

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tree-walking evaluation. Throws EvalError on log of a non-positive value,
// any fractional power of a negative base, or division by zero. 0^0 is 1.
double eval(const ExprPtr& e, const std::map<std::string, double>& env);

// One elementary function applied to a value, same domain rules as eval.
double apply_func_value(FuncId f, double x);

// Free variable names, sorted and deduplicated.
std::vector<std::string> free_vars(const ExprPtr& e);

// Exact partial derivative; abs differentiates to sign, sign to zero.
ExprPtr diff(const ExprPtr& e, const std::string& v);

/**
 * Canonical sum-of-monomials form: products of sums are expanded, integer
 * powers of sums up to exponent 16 are expanded, like powers of a common
 * base merge by adding exponents, and rational coefficients combine
 * exactly. (b^e)^f keeps the nesting when e is an even integer and f is
 * fractional; otherwise exponents multiply through. Fractional powers
 * never distribute over products. Idempotent.
 */
ExprPtr simplify(const ExprPtr& e);

/**
 * Flat register program compiled from an expression for fast repeated
 * evaluation against a fixed variable ordering.
 */
class Tape {
public:
    double eval(const double* x) const;
    double eval(const std::vector<double>& x) const { return eval(x.data()); }
    std::size_t arity() const { return nvars_; }

private:
    friend Tape compile(const ExprPtr&, const std::vector<std::string>&);
    enum class Op : std::uint8_t { Const, Load, AddN, MulN, PowI, PowR, Fun };
    struct Ins {
        Op op;
        std::int32_t a = 0;  // Load: var slot; AddN/MulN: count; PowI: exponent; Fun: FuncId; PowR: rats_ slot
        double c = 0.0;      // Const
    };
    std::vector<Ins> ins_;
    std::vector<Rational> rats_;
    std::size_t nvars_ = 0;
    std::size_t depth_ = 0;
    mutable std::vector<double> stack_;
};

// Throws ParseError-free std::runtime_error if the expression mentions a
// variable not present in vars.
Tape compile(const ExprPtr& e, const std::vector<std::string>& vars);

struct ZeroCheck {
    bool zero = false;
    bool symbolic = false;        // settled by simplification alone
    std::vector<double> witness;  // sample where the value was too large
    double value = 0.0;
    double scale = 1.0;
};

/**
 * Decides whether an expression vanishes identically on a box. First tries
 * the canonical form; if that is not literally zero, evaluates at Halton
 * samples and compares against tol times a cancellation-aware scale
 * (1 + the largest monomial magnitude seen at the sample). Samples where
 * evaluation hits a domain error are skipped; if every sample does, throws.
 */
ZeroCheck is_zero_on(const ExprPtr& e, const std::vector<std::string>& vars,
                     const std::vector<double>& lo, const std::vector<double>& hi,
                     double tol = 1e-9, int nsamples = 64, unsigned seed = 0);

} // namespace liq
