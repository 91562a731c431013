#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <liq/distrib.hpp>
#include <liq/tolerances.hpp>

#include "testsys.hpp"

using namespace liq;
using namespace testsys;

namespace {

Subspace span_of(std::size_t ambient, std::initializer_list<int> axes) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero((Eigen::Index)axes.size(),
                                                 (Eigen::Index)ambient);
    Eigen::Index r = 0;
    for (int a : axes) rows(r++, a) = 1.0;
    return Subspace::from_rows(rows);
}

RegularSpace reg(const SystemDef& sys) { return regularity_check(sys.frame, sys.dom); }

} // namespace

TEST_CASE("coordinate frames are completely regular") {
    auto sys = canonical(3);
    auto V = reg(sys);
    CHECK(V.regular);
    CHECK(V.completely_regular);
    CHECK(V.span_dim == 3);
    CHECK(V.rank == 3);
}

TEST_CASE("proportional fields break regularity") {
    SystemDef sys = canonical(2);
    sys.frame.fields[1] = vf("W", {"x1", "0"});
    auto V = reg(sys);
    CHECK(V.span_dim == 2);
    CHECK(V.rank == 1);
    CHECK_FALSE(V.regular);
    CHECK_FALSE(V.completely_regular);
}

TEST_CASE("degenerate quartic frame is not regular") {
    auto V = reg(sys6());
    CHECK(V.span_dim == 4);
    CHECK(V.rank < 4);
    CHECK_FALSE(V.completely_regular);
}

TEST_CASE("core of nothing is the zero subspace") {
    auto V = reg(canonical(2));
    auto c = core({}, V);
    CHECK(c.core.dim() == 0);
}

TEST_CASE("core keeps function coefficients inside the frame span") {
    auto sys = ex1("2 + sin(x2)");
    auto V = reg(sys);
    auto br = lie_bracket(sys.frame.fields[0], sys.frame.fields[1], sys.dom.vars);
    auto c = core({br}, V);
    CHECK(c.core.dim() == 1);
    Eigen::VectorXd e0 = Eigen::VectorXd::Unit(3, 0);
    CHECK(c.core.contains(e0));
    CHECK(c.sample_rank == 1);
    CHECK(c.samples_used >= 8);
}

TEST_CASE("a sliding coefficient forces the full core") {
    SystemDef sys = canonical(2);
    auto V = reg(sys);
    auto c = core({vf("B", {"x2", "1"})}, V);
    CHECK(c.core.dim() == 2);
    // neither axis alone carries the sampled rows
    Eigen::VectorXd row(2);
    row << 0.37, 1.0;
    row.normalize();
    CHECK_FALSE(span_of(2, {0}).contains(row));
    CHECK_FALSE(span_of(2, {1}).contains(row));
    CHECK(c.core.contains(row));
}

TEST_CASE("core rejects fields outside the module") {
    SystemDef sys = canonical(2);
    sys.frame.fields.pop_back();
    auto V = reg(sys);
    CHECK(V.regular);
    CHECK_FALSE(V.completely_regular);
    CHECK_THROWS_WITH_AS(core({vf("T", {"0", "1"})}, V), doctest::Contains("T"),
                         std::runtime_error);
}

TEST_CASE("gamma chain on a field-rescaled shift") {
    SUBCASE("coefficient constant along the symmetries") {
        auto V = reg(ex1("1 + x1^2"));
        auto tr = dist_series(DistKind::Gamma, V, 0);
        CHECK(tr.end == SeriesEnd::Abelian);
        CHECK(tr.entries.size() == 1);
        CHECK(dist_integrability_order(tr) == 1);
    }
    SUBCASE("coefficient sliding along a symmetry") {
        auto V = reg(ex1("2 + sin(x2)"));
        auto tr = dist_series(DistKind::Gamma, V, 0);
        CHECK(tr.dims() == std::vector<std::size_t>{3, 1});
        CHECK(tr.entries[1].same_as(span_of(3, {0})));
        CHECK(tr.end == SeriesEnd::Abelian);
        CHECK(dist_integrability_order(tr) == 2);
    }
}

TEST_CASE("gamma chain of the exponential triangular system") {
    auto V = reg(ex2());
    auto tr = dist_series(DistKind::Gamma, V, 0);
    CHECK(tr.dims() == std::vector<std::size_t>{3, 2, 1});
    CHECK(tr.entries[1].same_as(span_of(3, {0, 2})));
    CHECK(tr.entries[2].same_as(span_of(3, {0})));
    CHECK(dist_integrability_order(tr) == 3);
    for (std::size_t k = 0; k + 1 < tr.entries.size(); ++k)
        CHECK(tr.entries[k].contains(tr.entries[k + 1]));
}

TEST_CASE("solvable source with exponential symmetries") {
    auto V = reg(solvnotint());
    SUBCASE("derived chain reaches zero") {
        auto tr = dist_series(DistKind::Derived, V);
        CHECK(tr.dims() == std::vector<std::size_t>{3, 2, 0});
        CHECK(tr.end == SeriesEnd::Zero);
    }
    SUBCASE("central chain stalls") {
        auto tr = dist_series(DistKind::Central, V);
        CHECK(tr.end == SeriesEnd::Stabilized);
        CHECK(tr.entries.back().same_as(span_of(3, {1, 2})));
    }
    SUBCASE("shift direction never closes up") {
        auto tr = dist_series(DistKind::Gamma, V, 0);
        CHECK(tr.end == SeriesEnd::Stabilized);
        CHECK_FALSE(dist_integrability_order(tr).has_value());
    }
    SUBCASE("scaled direction closes in one step") {
        auto tr = dist_series(DistKind::Gamma, V, 1);
        CHECK(dist_integrability_order(tr) == 2);
        CHECK(tr.entries[1].same_as(span_of(3, {1, 2})));
    }
}

TEST_CASE("module chains match algebra chains on a constant-bracket frame") {
    auto sys = nilframe();
    auto V = reg(sys);
    auto sc = structure_constants(sys.frame, sys.dom);
    REQUIRE(sc.closed);

    auto d1 = dist_series(DistKind::Derived, V);
    auto d2 = derived_series(sc);
    REQUIRE(d1.entries.size() == d2.entries.size());
    for (std::size_t k = 0; k < d1.entries.size(); ++k)
        CHECK(d1.entries[k].same_as(d2.entries[k]));

    auto c1 = dist_series(DistKind::Central, V);
    auto c2 = central_series(sc);
    REQUIRE(c1.entries.size() == c2.entries.size());
    for (std::size_t k = 0; k < c1.entries.size(); ++k)
        CHECK(c1.entries[k].same_as(c2.entries[k]));

    for (std::size_t g = 0; g < 4; ++g) {
        auto g1 = dist_series(DistKind::Gamma, V, g);
        auto g2 = gamma_series(sc, g);
        CHECK(dist_integrability_order(g1) == lie_integrability_order(g2));
    }
}

TEST_CASE("series demand complete regularity") {
    auto V = reg(sys6());
    CHECK_THROWS_AS(dist_series(DistKind::Derived, V), std::invalid_argument);
}

TEST_CASE("pointwise module intersections") {
    SUBCASE("disjoint axes meet in zero") {
        auto V = reg(canonical(3));
        auto r = module_intersection_check(span_of(3, {0}), span_of(3, {1}), V);
        CHECK(r.ok);
    }
    SUBCASE("overlapping axes meet in the shared one") {
        auto V = reg(canonical(3));
        auto r = module_intersection_check(span_of(3, {0, 1}), span_of(3, {1, 2}), V);
        CHECK(r.ok);
        CHECK(r.residual < tol::core);
    }
    SUBCASE("chain entries of the exponential system") {
        auto V = reg(ex2());
        auto r = module_intersection_check(span_of(3, {0, 2}), span_of(3, {1, 2}), V);
        CHECK(r.ok);
    }
    SUBCASE("a non-regular module is caught with a witness") {
        SystemDef sys = canonical(2);
        sys.frame.fields[1] = vf("W", {"x1", "0"});
        RegularSpace V;
        V.frame = sys.frame;
        V.dom = sys.dom;
        auto r = module_intersection_check(span_of(2, {0}), span_of(2, {1}), V);
        CHECK_FALSE(r.ok);
        CHECK(r.witness.size() == 2);
        CHECK(r.residual > tol::core);
    }
}

TEST_CASE("rescaling the dynamic field moves the order by at most one") {
    SUBCASE("unit factor changes nothing") {
        auto V = reg(ex1("2 + sin(x2)"));
        auto p = rescaling_order(V, 0, num(1));
        CHECK(p.order == 2);
        CHECK(p.order_scaled == 2);
    }
    SUBCASE("a sliding factor can raise order one") {
        auto V = reg(ex1("1 + x1^2"));
        auto p = rescaling_order(V, 0, parse_expr("2 + sin(x2)"));
        CHECK(p.order == 1);
        CHECK(p.order_scaled == 2);
    }
    SUBCASE("positive factors on the exponential system stay within one") {
        auto V = reg(ex2());
        for (const char* f : {"exp(x1)", "2 + x2", "1 + x3^2", "exp(x1 + x2)", "3 - x1"}) {
            auto p = rescaling_order(V, 0, parse_expr(f));
            REQUIRE(p.order.has_value());
            REQUIRE(p.order_scaled.has_value());
            CHECK(std::abs(*p.order - *p.order_scaled) <= 1);
        }
    }
    SUBCASE("vanishing factors are rejected") {
        auto V = reg(ex1("2 + sin(x2)"));
        CHECK_THROWS_AS(rescaling_order(V, 0, parse_expr("x1")), std::invalid_argument);
    }
}

TEST_CASE("stage layout of a descending chain") {
    SUBCASE("central chain of the constant-bracket frame") {
        std::vector<Subspace> chain{Subspace::full(4), span_of(4, {0, 1}), span_of(4, {0}),
                                    Subspace::zero(4)};
        auto pf = make_profile(chain);
        CHECK(pf.r == 3);
        CHECK(pf.d == std::vector<std::size_t>{2, 1, 1});
        CHECK(pf.w == std::vector<std::size_t>{2, 3, 4});
        // stage rows span each quotient and stack to a basis
        CHECK(std::abs(pf.adapted.determinant()) > 1e-12);
        CHECK(span_of(4, {0, 1}).join(Subspace::from_rows(pf.adapted.topRows(2))).dim() == 4);
        CHECK(pf.adapted.row(3).transpose().isApprox(Eigen::VectorXd::Unit(4, 0)));
    }
    SUBCASE("a chain without trailing zero is padded") {
        std::vector<Subspace> chain{Subspace::full(2), span_of(2, {0})};
        auto pf = make_profile(chain);
        CHECK(pf.r == 2);
        CHECK(pf.d == std::vector<std::size_t>{1, 1});
        CHECK(pf.w == std::vector<std::size_t>{1, 2});
    }
    SUBCASE("stalled chains are rejected") {
        std::vector<Subspace> chain{Subspace::full(2), Subspace::full(2)};
        CHECK_THROWS_AS(make_profile(chain), std::invalid_argument);
    }
}
