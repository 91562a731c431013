#pragma once

#include <liq/vfield.hpp>

#include <initializer_list>
#include <string>

// Systems assembled in code for the unit layers. The JSON files under
// fixtures/ mirror the ones the command line consumes; test_cli checks the
// two stay equivalent.

namespace testsys {

inline liq::VectorField vf(const std::string& name,
                           std::initializer_list<const char*> comps) {
    liq::VectorField f;
    f.name = name;
    for (const char* c : comps) f.comp.push_back(liq::parse_expr(c));
    return f;
}

inline liq::SystemDef canonical(std::size_t n) {
    liq::SystemDef s;
    for (std::size_t i = 1; i <= n; ++i) {
        s.dom.vars.push_back("x" + std::to_string(i));
        s.dom.lo.push_back(-1.0);
        s.dom.hi.push_back(1.0);
        s.dom.x0.push_back(0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        liq::VectorField f;
        f.name = "E" + std::to_string(i + 1);
        for (std::size_t j = 0; j < n; ++j) f.comp.push_back(liq::num(i == j ? 1 : 0));
        s.frame.fields.push_back(std::move(f));
    }
    s.gamma = 0;
    return s;
}

// Hamiltonian hierarchy on (x, y, px, py), unit parameters. The four
// fields close a nilpotent algebra but are pointwise degenerate: each one
// is tangent to the energy level sets, so the frame never has rank 4.
inline liq::SystemDef sys6() {
    liq::SystemDef s;
    s.dom.vars = {"x", "y", "px", "py"};
    s.dom.lo = {-0.2, 0.8, -0.2, -0.2};
    s.dom.hi = {0.2, 1.2, 0.2, 0.2};
    s.dom.x0 = {0.0, 1.0, 0.0, 0.0};
    s.params = {{"k2", 1.0}, {"k3", 1.0}};
    s.frame.fields = {
        vf("G", {"px", "py", "-1/y^(2/3)", "2/3*(x+1)/y^(5/3)"}),
        vf("X2", {"6*px^2 + 3*py^2 + 6*(x+1)/y^(2/3)",
                  "6*px*py + 9*y^(1/3)",
                  "-6*px/y^(2/3)",
                  "4*(x+1)*px/y^(5/3) - 3*py/y^(2/3)"}),
        vf("X3", {"4*px^3 + 4*px*py^2 + 8*(x+1)*px/y^(2/3) + 12*y^(1/3)*py",
                  "4*px^2*py + 12*y^(1/3)*px",
                  "-4*px^2/y^(2/3)",
                  "8/3*(x+1)*px^2/y^(5/3) - 4*px*py/y^(2/3) - 12/y^(1/3)"}),
        vf("X4", {"6*px^5 + 12*px^3*py^2 + 24*(x+1)*px^3/y^(2/3) + 108*y^(1/3)*px^2*py + "
                  "324*y^(2/3)*px",
                  "6*px^4*py + 36*y^(1/3)*px^3",
                  "-6*px^4/y^(2/3) - 324",
                  "4*(x+1)*px^4/y^(5/3) - 12*px^3*py/y^(2/3) - 108*px^2/y^(1/3)"}),
    };
    s.gamma = 0;
    return s;
}

// Same bracket-table shape as sys6 ([E2,E4] = 3 E1, [E3,E4] = 2 E2, all
// else zero) but realized by a unit-determinant frame, so charts and
// flows can actually be built.
inline liq::SystemDef nilframe(std::size_t gamma = 1) {
    liq::SystemDef s;
    s.dom.vars = {"u1", "u2", "u3", "u4"};
    s.dom.lo = {-1.0, -1.0, -1.0, -1.0};
    s.dom.hi = {1.0, 1.0, 1.0, 1.0};
    s.dom.x0 = {0.1, -0.2, 0.3, 0.2};
    s.frame.fields = {
        vf("E1", {"1", "0", "0", "0"}),
        vf("E2", {"-3*u4", "1", "0", "0"}),
        vf("E3", {"3*u4^2", "-2*u4", "1", "0"}),
        vf("E4", {"0", "0", "0", "1"}),
    };
    s.gamma = gamma;
    return s;
}

// Rescaled translation flow: one field moves along x1 at a rate set by f,
// the rest are coordinate fields. Closes a Lie algebra only when f is
// constant in x2, x3.
inline liq::SystemDef ex1(const char* f) {
    liq::SystemDef s;
    s.dom.vars = {"x1", "x2", "x3"};
    s.dom.lo = {-1.5, -1.5, -1.5};
    s.dom.hi = {1.5, 1.5, 1.5};
    s.dom.x0 = {0.0, 0.25, -0.25};
    s.frame.fields = {
        vf("G", {f, "0", "0"}),
        vf("E2", {"0", "1", "0"}),
        vf("E3", {"0", "0", "1"}),
    };
    s.gamma = 0;
    return s;
}

// Triangular cascade: the dynamic field feeds x1 into x2 and x1*x2 into
// x3, scaled by exp(x3); companions are coordinate fields.
inline liq::SystemDef ex2() {
    liq::SystemDef s;
    s.dom.vars = {"x1", "x2", "x3"};
    s.dom.lo = {-1.0, -1.0, -1.0};
    s.dom.hi = {1.0, 1.0, 1.0};
    s.dom.x0 = {0.2, 0.1, -0.1};
    s.frame.fields = {
        vf("G", {"exp(x3)", "x1*exp(x3)", "x1*x2*exp(x3)"}),
        vf("E2", {"0", "1", "0"}),
        vf("E3", {"0", "0", "1"}),
    };
    s.gamma = 0;
    return s;
}

// Linear growth along x1; flow x1 -> x1*e^t has a closed form to compare
// against.
inline liq::SystemDef expgamma() {
    liq::SystemDef s;
    s.dom.vars = {"x1", "x2"};
    s.dom.lo = {0.2, -1.0};
    s.dom.hi = {4.0, 1.0};
    s.dom.x0 = {1.0, 0.0};
    s.frame.fields = {
        vf("G", {"x1", "0"}),
        vf("E2", {"0", "1"}),
    };
    s.gamma = 0;
    return s;
}

// Solvable but not integrable for the chosen dynamic field: the series
// stabilizes at the full non-abelian algebra.
inline liq::SystemDef solvnotint() {
    liq::SystemDef s;
    s.dom.vars = {"x1", "x2", "x3"};
    s.dom.lo = {-1.0, -1.0, -1.0};
    s.dom.hi = {1.0, 1.0, 1.0};
    s.dom.x0 = {0.0, 0.0, 0.0};
    s.frame.fields = {
        vf("X1", {"1", "0", "0"}),
        vf("X2", {"0", "exp(x1)", "0"}),
        vf("X3", {"0", "0", "exp(x1)"}),
    };
    s.gamma = 0;
    return s;
}

} // namespace testsys
