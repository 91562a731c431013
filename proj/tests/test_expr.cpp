#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <liq/expr.hpp>
#include <liq/sampling.hpp>

#include <cmath>
#include <random>

using namespace liq;

namespace {

std::string canon(const std::string& s) { return to_string(parse_expr(s)); }

double ev(const std::string& s, double x, double y = 0.0) {
    return eval(parse_expr(s), {{"x", x}, {"y", y}});
}

} // namespace

TEST_CASE("rational arithmetic stays reduced and signals overflow") {
    Rational a(2, -4);
    CHECK(a.num == -1);
    CHECK(a.den == 2);

    Rational out;
    CHECK(rat_add(Rational(1, 6), Rational(1, 3), out));
    CHECK(out == Rational(1, 2));
    CHECK(rat_pow_int(Rational(2, 3), -2, out));
    CHECK(out == Rational(9, 4));
    CHECK_FALSE(rat_pow_int(Rational(0), -1, out));

    CHECK(rat_root(Rational(27, 8), 3, out));
    CHECK(out == Rational(3, 2));
    CHECK(rat_root(Rational(-27), 3, out));
    CHECK(out == Rational(-3));
    CHECK_FALSE(rat_root(Rational(2), 2, out));
    CHECK_FALSE(rat_root(Rational(-4), 2, out));

    Rational big(std::numeric_limits<std::int64_t>::max());
    CHECK_FALSE(rat_add(big, Rational(1), out));
    CHECK_FALSE(rat_mul(big, Rational(3), out));
}

TEST_CASE("parser handles the grammar and rejects junk") {
    CHECK_NOTHROW(parse_expr("4*(k2*x+k3)*px/y^(5/3)"));
    CHECK_NOTHROW(parse_expr("-x^2 + sqrt(1+x)"));
    CHECK_NOTHROW(parse_expr("x^-2"));
    CHECK_NOTHROW(parse_expr("y^(-2/3)"));

    CHECK_THROWS_AS(parse_expr("x +"), ParseError);
    CHECK_THROWS_AS(parse_expr("(x"), ParseError);
    CHECK_THROWS_AS(parse_expr("x^(2/0)"), ParseError);
    CHECK_THROWS_AS(parse_expr("foo(x)"), ParseError);
    CHECK_THROWS_AS(parse_expr("2 x"), ParseError);
    CHECK_THROWS_AS(parse_expr("x^2^2"), ParseError);
    CHECK_THROWS_AS(parse_expr("x^+2"), ParseError);
    CHECK_THROWS_AS(parse_expr(""), ParseError);
}

TEST_CASE("number literals become exact rationals when they fit") {
    auto e = parse_expr("1.5e2");
    REQUIRE(e->kind == Kind::Number);
    CHECK(e->exact);
    CHECK(e->rat == Rational(150));

    e = parse_expr("2.5e-3");
    CHECK(e->exact);
    CHECK(e->rat == Rational(1, 400));

    e = parse_expr(".5");
    CHECK(e->exact);
    CHECK(e->rat == Rational(1, 2));

    e = parse_expr("1e30");
    CHECK_FALSE(e->exact);
    CHECK(e->dval == doctest::Approx(1e30).epsilon(1e-15));
}

TEST_CASE("printing is stable under reparse") {
    const char* cases[] = {
        "x + 2*y",
        "x - y",
        "-x + y",
        "4*(k2*x+k3)*px/y^(5/3)",
        "x^2 - 3",
        "x^-2",
        "y^(2/3) + y^(-2/3)",
        "sqrt(x+1)*sin(x)",
        "1/(x+y)",
        "3/4*x",
        "2/4",
        "-(x+y)*z",
        "tan(x)/(1+x^2)",
        "sign(x)*abs(y)",
    };
    for (const char* s : cases) {
        CAPTURE(s);
        std::string once = canon(s);
        CHECK(canon(once) == once);
        // same value before and after
        std::map<std::string, double> env{{"x", 0.7},  {"y", 1.3}, {"z", -0.4},
                                          {"k2", 1.0}, {"k3", 2.0}, {"px", 0.2}};
        CHECK(eval(parse_expr(s), env) ==
              doctest::Approx(eval(parse_expr(once), env)).epsilon(1e-14));
    }
}

TEST_CASE("evaluation follows the domain rules") {
    CHECK(ev("2^3", 0) == 8.0);
    CHECK(ev("2^-2", 0) == 0.25);
    CHECK(ev("8^(1/3)", 0) == doctest::Approx(2.0));
    CHECK(ev("0^0", 0) == 1.0);
    CHECK(ev("log(exp(2))", 0) == doctest::Approx(2.0));
    CHECK(ev("abs(-3.5)", 0) == 3.5);
    CHECK(ev("sign(-2)", 0) == -1.0);
    CHECK(ev("sign(0)", 0) == 0.0);

    CHECK_THROWS_AS(ev("1/0", 0), EvalError);
    CHECK_THROWS_AS(ev("log(0)", 0), EvalError);
    CHECK_THROWS_AS(ev("log(-1)", 0), EvalError);
    CHECK_THROWS_AS(ev("(-8)^(1/3)", 0), EvalError);
    CHECK_THROWS_AS(ev("x^(1/2)", -4.0), EvalError);
    CHECK_THROWS_AS(ev("0^-1", 0), EvalError);
    CHECK_THROWS_AS(eval(parse_expr("x"), {}), EvalError);
}

TEST_CASE("derivatives agree with central differences") {
    const char* cases[] = {
        "x^3 + 2*x*y - y^2",
        "sin(x)*cos(y)",
        "exp(x*y)/(1+x^2)",
        "y^(2/3) + x*y^(-1/3)",
        "log(1 + x^2 + y^2)",
        "tan(x/4)",
        "sqrt(1 + x^2)",
        "abs(x)*x",
        "sin(x^2*y)^3",
    };
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> U(0.2, 1.5);
    for (const char* s : cases) {
        CAPTURE(s);
        ExprPtr e = parse_expr(s);
        ExprPtr dx = diff(e, "x");
        ExprPtr dy = diff(e, "y");
        for (int k = 0; k < 25; ++k) {
            double x = U(rng), y = U(rng);
            const double h = 1e-5;
            double fdx = (eval(e, {{"x", x + h}, {"y", y}}) -
                          eval(e, {{"x", x - h}, {"y", y}})) /
                         (2 * h);
            double fdy = (eval(e, {{"x", x}, {"y", y + h}}) -
                          eval(e, {{"x", x}, {"y", y - h}})) /
                         (2 * h);
            double ax = eval(dx, {{"x", x}, {"y", y}});
            double ay = eval(dy, {{"x", x}, {"y", y}});
            CHECK(ax == doctest::Approx(fdx).epsilon(1e-6));
            CHECK(ay == doctest::Approx(fdy).epsilon(1e-6));
        }
    }
}

TEST_CASE("simplify reaches the expected canonical forms") {
    CHECK(to_string(simplify(parse_expr("x - x"))) == "0");
    CHECK(to_string(simplify(parse_expr("x*y - y*x"))) == "0");
    CHECK(to_string(simplify(parse_expr("x/x"))) == "1");
    CHECK(to_string(simplify(parse_expr("(x+y)^2 - x^2 - 2*x*y - y^2"))) == "0");
    CHECK(to_string(simplify(parse_expr("sqrt(x)^2"))) == "x");
    CHECK(to_string(simplify(parse_expr("2/4"))) == "1/2");
    CHECK(to_string(simplify(parse_expr("8^(1/3)"))) == "2");
    CHECK(to_string(simplify(parse_expr("2^(1/2)"))) == "sqrt(2)");
    CHECK(to_string(simplify(parse_expr("1/(x+y)"))) == "1/(x + y)");
    CHECK(to_string(simplify(parse_expr("((x+y)^-1)^-1"))) == "x + y");
    CHECK(to_string(simplify(parse_expr("(x^2)^(1/2)*(x^2)^(1/2)"))) == "x^2");
    CHECK(to_string(simplify(parse_expr("sin(0) + cos(0)*exp(0)"))) == "1");
    CHECK(to_string(simplify(parse_expr("abs(-3/2)"))) == "3/2");

    // sqrt of a square keeps the nesting: the flat answer would be wrong
    // for negative arguments
    ExprPtr nested = simplify(parse_expr("(x^2)^(1/2)"));
    CHECK(to_string(nested) != "x");
    CHECK(eval(nested, {{"x", -2.0}}) == doctest::Approx(2.0));

    CHECK_THROWS_AS(simplify(parse_expr("1/(x-x)")), EvalError);
}

TEST_CASE("simplify preserves values and is idempotent") {
    const char* cases[] = {
        "(x + y)^3*(x - y)",
        "(1 + x^2)*(1 - x^2) + x^4",
        "x*y^(-1/3)*(y^(1/3) + y^(4/3))",
        "sin(x)^2*cos(x) - cos(x)*(1 - cos(x)^2)",
        "(x + 1)^5/(x + 1)^3",
        "sqrt(x*y)*sqrt(x*y)",
        "exp(x)*exp(x) - exp(x)^2",
        "(2*x + 3*y)^2 - 4*x^2 - 12*x*y - 9*y^2",
        "(x - y)/(x^2 - y^2) - 1/(x + y)",
        "1.5*x + 0.5*x",
    };
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> U(0.3, 1.7);
    for (const char* s : cases) {
        CAPTURE(s);
        ExprPtr e = parse_expr(s);
        ExprPtr se = simplify(e);
        ExprPtr sse = simplify(se);
        CHECK(expr_cmp(se, sse) == 0);
        for (int k = 0; k < 20; ++k) {
            std::map<std::string, double> env{{"x", U(rng)}, {"y", U(rng)}};
            double v0 = eval(e, env);
            double v1 = eval(se, env);
            CHECK(v1 == doctest::Approx(v0).epsilon(1e-11));
        }
    }
}

TEST_CASE("compiled tapes match the tree walker") {
    const char* cases[] = {
        "4*(x + 2)*y/x^(5/3)",
        "sin(x)^2 + cos(y)^2 - tan(x*y/10)",
        "exp(-x^2) + log(1 + y^2)",
        "sqrt(x^2 + y^2)",
    };
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(0.25, 2.0);
    std::vector<std::string> vars{"x", "y"};
    for (const char* s : cases) {
        CAPTURE(s);
        ExprPtr e = parse_expr(s);
        Tape t = compile(e, vars);
        for (int k = 0; k < 50; ++k) {
            double x = U(rng), y = U(rng);
            double a = t.eval(std::vector<double>{x, y});
            double b = eval(e, {{"x", x}, {"y", y}});
            CHECK(a == doctest::Approx(b).epsilon(1e-14));
        }
    }
    CHECK_THROWS(compile(parse_expr("z"), vars));
    CHECK_THROWS_AS(compile(parse_expr("1/x"), vars).eval(std::vector<double>{0.0, 1.0}),
                    EvalError);
}

TEST_CASE("vanishing test separates symbolic, numeric, and nonzero cases") {
    std::vector<std::string> vars{"x", "y"};
    std::vector<double> lo{-1.0, -1.0}, hi{1.0, 1.0};

    auto r = is_zero_on(parse_expr("x*y - y*x"), vars, lo, hi);
    CHECK(r.zero);
    CHECK(r.symbolic);

    r = is_zero_on(parse_expr("sin(x)^2 + cos(x)^2 - 1"), vars, lo, hi);
    CHECK(r.zero);
    CHECK_FALSE(r.symbolic);

    r = is_zero_on(parse_expr("x + 1e-6"), vars, lo, hi);
    CHECK_FALSE(r.zero);
    REQUIRE(r.witness.size() == 2);
    CHECK(std::fabs(r.witness[0] + 1e-6) > 1e-9);

    // large common scale: roundoff in the terms must not count as nonzero
    r = is_zero_on(parse_expr("(x + 1e15) - x - 1e15"), vars, lo, hi);
    CHECK(r.zero);

    CHECK_THROWS_AS(is_zero_on(parse_expr("log(-1 - x^2)"), vars, lo, hi), EvalError);
}

TEST_CASE("free variables are collected in order") {
    auto v = free_vars(parse_expr("b*a + sin(c)*a"));
    REQUIRE(v.size() == 3);
    CHECK(v[0] == "a");
    CHECK(v[1] == "b");
    CHECK(v[2] == "c");
}
