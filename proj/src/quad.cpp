#include <liq/quad.hpp>
#include <liq/tolerances.hpp>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace liq {

namespace {

std::string point_str(const std::vector<double>& p) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

// 7-point Gauss-Legendre on [-1, 1]
constexpr double gl_x[7] = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972,
                            0.0,                 0.4058451513773972,  0.7415311855993945,
                            0.9491079123427585};
constexpr double gl_w[7] = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
                            0.4179591836734694, 0.3818300505051189, 0.2797053914892766,
                            0.1294849661688697};

using Integrand = std::function<Eigen::VectorXd(double)>;

Eigen::VectorXd gl_panel(const Integrand& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Eigen::VectorXd acc;
    for (int i = 0; i < 7; ++i) {
        Eigen::VectorXd v = f(mid + half * gl_x[i]);
        if (i == 0) acc = gl_w[i] * v;
        else acc += gl_w[i] * v;
    }
    return half * acc;
}

Eigen::VectorXd integrate_rec(const Integrand& f, double a, double b,
                              const Eigen::VectorXd& whole, int depth) {
    const double m = 0.5 * (a + b);
    Eigen::VectorXd left = gl_panel(f, a, m);
    Eigen::VectorXd right = gl_panel(f, m, b);
    Eigen::VectorXd fine = left + right;
    if ((fine - whole).lpNorm<Eigen::Infinity>() <= tol::quad * (b - a)) return fine;
    if (depth >= 20)
        throw std::runtime_error("quadrature did not converge after 20 refinement levels");
    return integrate_rec(f, a, m, left, depth + 1) + integrate_rec(f, m, b, right, depth + 1);
}

Eigen::VectorXd integrate01(const Integrand& f) {
    return integrate_rec(f, 0.0, 1.0, gl_panel(f, 0.0, 1.0), 0);
}

// Damped Newton on the `adjust` coordinates only; returns the achieved
// residual, throws past tol::leaf.
double project_onto(std::vector<double>& y,
                    const std::function<Eigen::VectorXd(const std::vector<double>&)>& value,
                    const std::function<Eigen::MatrixXd(const std::vector<double>&)>& rows,
                    const Eigen::VectorXd& target, const std::vector<int>& adjust,
                    const std::string& what) {
    const double goal = 1e-13 * (1.0 + target.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd F = value(y) - target;
    double r = F.lpNorm<Eigen::Infinity>();
    for (int iter = 0; iter < 50 && r > goal; ++iter) {
        Eigen::MatrixXd J = rows(y);
        Eigen::MatrixXd Jc(J.rows(), (Eigen::Index)adjust.size());
        for (std::size_t i = 0; i < adjust.size(); ++i) Jc.col((Eigen::Index)i) = J.col(adjust[i]);
        Eigen::VectorXd delta = Jc.colPivHouseholderQr().solve(-F);
        double lam = 1.0;
        bool moved = false;
        for (int h = 0; h < 10 && !moved; ++h) {
            std::vector<double> yt = y;
            for (std::size_t i = 0; i < adjust.size(); ++i)
                yt[(std::size_t)adjust[i]] += lam * delta((Eigen::Index)i);
            try {
                Eigen::VectorXd Ft = value(yt) - target;
                double rt = Ft.lpNorm<Eigen::Infinity>();
                if (rt < r) {
                    y = std::move(yt);
                    F = std::move(Ft);
                    r = rt;
                    moved = true;
                }
            } catch (const std::runtime_error&) {
            }
            lam *= 0.5;
        }
        if (!moved) break;
    }
    if (r > tol::leaf)
        throw std::runtime_error(what + " (residual " + std::to_string(r) + " at " +
                                 point_str(y) + ")");
    return r;
}

std::vector<double> lerp(const std::vector<double>& a, const std::vector<double>& b, double s) {
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + s * (b[i] - a[i]);
    return p;
}

// Dormand-Prince 4(5) tableau, shared by the oracle and the chart traces
namespace dp {
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
} // namespace dp

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// integrates y' = F(t, y) from 0 to 1, adaptive with FSAL
Eigen::VectorXd dp45_to(const Rhs& F, Eigen::VectorXd y, double atol, double rtol,
                        const std::string& what) {
    double t = 0.0;
    double h = 1.0 / 16;
    Eigen::VectorXd k1 = F(t, y);
    int steps = 0;
    while (t < 1.0 - 1e-15) {
        if (++steps > 20000) throw std::runtime_error(what + ": step limit exceeded");
        double hs = std::min(h, 1.0 - t);
        if (hs < 1e-14) throw std::runtime_error(what + ": step size underflow");
        Eigen::VectorXd k2 = F(t + hs / 5, y + hs * (dp::a21 * k1));
        Eigen::VectorXd k3 = F(t + 3 * hs / 10, y + hs * (dp::a31 * k1 + dp::a32 * k2));
        Eigen::VectorXd k4 =
            F(t + 4 * hs / 5, y + hs * (dp::a41 * k1 + dp::a42 * k2 + dp::a43 * k3));
        Eigen::VectorXd k5 = F(t + 8 * hs / 9,
                               y + hs * (dp::a51 * k1 + dp::a52 * k2 + dp::a53 * k3 +
                                         dp::a54 * k4));
        Eigen::VectorXd k6 = F(t + hs, y + hs * (dp::a61 * k1 + dp::a62 * k2 + dp::a63 * k3 +
                                                 dp::a64 * k4 + dp::a65 * k5));
        Eigen::VectorXd ynew = y + hs * (dp::b1 * k1 + dp::b3 * k3 + dp::b4 * k4 +
                                         dp::b5 * k5 + dp::b6 * k6);
        Eigen::VectorXd k7 = F(t + hs, ynew);
        Eigen::VectorXd errv = hs * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 + dp::e5 * k5 +
                                     dp::e6 * k6 + dp::e7 * k7);
        double err = 0.0;
        for (Eigen::Index c = 0; c < y.size(); ++c) {
            double sc = atol + rtol * std::max(std::abs(y(c)), std::abs(ynew(c)));
            err += std::pow(errv(c) / sc, 2);
        }
        err = std::sqrt(err / (double)y.size());
        if (err <= 1.0) {
            t += hs;
            y = ynew;
            k1 = k7;
        }
        h = hs * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
    }
    return y;
}

} // namespace

std::vector<Covector> annihilator_basis(const Subspace& sub, const Subspace& ambient,
                                        int stage) {
    if (!ambient.contains(sub)) throw std::invalid_argument("subspace not inside the ambient");
    Eigen::MatrixXd coords = coords_in(sub, ambient);
    Eigen::MatrixXd rows = annihilator_rows(coords, ambient.dim());
    std::vector<Covector> out;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) out.push_back({rows.row(r), stage});
    return out;
}

Eigen::RowVectorXd OneForm::row(const std::vector<double>& p) const {
    Eigen::MatrixXd M = frame->mat(p);
    auto qr = M.transpose().colPivHouseholderQr();
    Eigen::RowVectorXd a = qr.solve(values).transpose();
    if ((M.transpose() * a.transpose() - values).lpNorm<Eigen::Infinity>() >
        1e-10 * (1.0 + values.lpNorm<Eigen::Infinity>()))
        throw std::runtime_error("one-form frame is singular at " + point_str(p));
    return a;
}

OneForm one_form(const Covector& zeta, const std::vector<VectorField>& stage_frame,
                 const std::vector<std::string>& vars,
                 const std::vector<VectorField>& complement) {
    if ((std::size_t)zeta.row.size() != stage_frame.size())
        throw std::invalid_argument("covector length does not match the stage frame");
    OneForm a;
    a.zeta = zeta;
    a.vars = vars;
    std::vector<VectorField> fields = stage_frame;
    fields.insert(fields.end(), complement.begin(), complement.end());
    a.values = Eigen::VectorXd::Zero((Eigen::Index)fields.size());
    a.values.head(zeta.row.size()) = zeta.row.transpose();
    a.frame = std::make_shared<FrameEvaluator>(fields, vars);
    return a;
}

ClosednessCheck closedness_check(const OneForm& alpha, const std::vector<VectorField>& fields,
                                 const Domain& dom) {
    ClosednessCheck out;
    FrameEvaluator fev(fields, dom.vars);
    std::vector<std::vector<Tape>> btapes;
    for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t j = i + 1; j < fields.size(); ++j) {
            auto br = lie_bracket(fields[i], fields[j], dom.vars);
            std::vector<Tape> t;
            for (const auto& c : br.comp) t.push_back(compile(c, dom.vars));
            btapes.push_back(std::move(t));
        }

    double extent = 0.0;
    for (std::size_t c = 0; c < dom.dim(); ++c) extent = std::max(extent, dom.hi[c] - dom.lo[c]);
    const double step = 1e-5 * extent;

    auto pairing = [&](const std::vector<double>& p, Eigen::Index j) {
        return double(alpha.row(p) * fev.field(j, p));
    };

    auto run_point = [&](const std::vector<double>& p) {
        Eigen::MatrixXd M;
        try {
            M = fev.mat(p);
        } catch (const EvalError&) {
            return;
        }
        std::size_t pair_idx = 0;
        for (std::size_t i = 0; i < fields.size(); ++i)
            for (std::size_t j = i + 1; j < fields.size(); ++j, ++pair_idx) {
                try {
                    Eigen::VectorXd Xi = M.col((Eigen::Index)i);
                    Eigen::VectorXd Xj = M.col((Eigen::Index)j);
                    double hi = step / (Xi.norm() + 1e-12);
                    double hj = step / (Xj.norm() + 1e-12);
                    std::vector<double> pp = p, pm = p;
                    for (std::size_t c = 0; c < p.size(); ++c) {
                        pp[c] = p[c] + hi * Xi((Eigen::Index)c);
                        pm[c] = p[c] - hi * Xi((Eigen::Index)c);
                    }
                    double dXi = (pairing(pp, (Eigen::Index)j) - pairing(pm, (Eigen::Index)j)) /
                                 (2.0 * hi);
                    for (std::size_t c = 0; c < p.size(); ++c) {
                        pp[c] = p[c] + hj * Xj((Eigen::Index)c);
                        pm[c] = p[c] - hj * Xj((Eigen::Index)c);
                    }
                    double dXj = (pairing(pp, (Eigen::Index)i) - pairing(pm, (Eigen::Index)i)) /
                                 (2.0 * hj);
                    Eigen::VectorXd bval((Eigen::Index)p.size());
                    for (std::size_t c = 0; c < p.size(); ++c)
                        bval((Eigen::Index)c) = btapes[pair_idx][c].eval(p);
                    double val = dXi - dXj - double(alpha.row(p) * bval);
                    ++out.checked;
                    if (std::abs(val) > out.worst) {
                        out.worst = std::abs(val);
                        out.wi = (int)i;
                        out.wj = (int)j;
                        out.witness = p;
                    }
                } catch (const std::runtime_error&) {
                }
            }
    };

    run_point(dom.x0);
    for (int k = 0; k < 32; ++k) run_point(dom.sample((std::size_t)k));
    out.ok = out.checked > 0 && out.worst <= tol::closed;
    return out;
}

PathNode path_node(const PathDescriptor& path, double s) {
    const std::size_t n = path.from.size();
    std::vector<double> p = lerp(path.from, path.to, s);
    Eigen::VectorXd v((Eigen::Index)n);
    for (std::size_t c = 0; c < n; ++c) v((Eigen::Index)c) = path.to[c] - path.from[c];
    if (!path.leaf) return {std::move(p), std::move(v)};

    const LeafSpec& leaf = *path.leaf;
    project_onto(p, leaf.value, leaf.rows, leaf.target, leaf.adjust,
                 "leaf projection failed at path parameter " + std::to_string(s));
    Eigen::MatrixXd J = leaf.rows(p);
    Eigen::MatrixXd Jc(J.rows(), (Eigen::Index)leaf.adjust.size());
    Eigen::VectorXd vfree = v;
    for (std::size_t i = 0; i < leaf.adjust.size(); ++i) {
        Jc.col((Eigen::Index)i) = J.col(leaf.adjust[i]);
        vfree(leaf.adjust[i]) = 0.0;
    }
    Eigen::VectorXd vadj = Jc.colPivHouseholderQr().solve(-(J * vfree));
    v = vfree;
    for (std::size_t i = 0; i < leaf.adjust.size(); ++i) v(leaf.adjust[i]) = vadj((Eigen::Index)i);
    return {std::move(p), std::move(v)};
}

PathDescriptor leaf_path(const std::vector<double>& from, const std::vector<double>& to,
                         std::shared_ptr<const LeafSpec> leaf) {
    if (from.size() != to.size()) throw std::invalid_argument("endpoint dimensions differ");
    if (leaf) {
        if ((leaf->value(from) - leaf->target).lpNorm<Eigen::Infinity>() > tol::leaf)
            throw std::invalid_argument("path start is off the leaf");
        if ((leaf->value(to) - leaf->target).lpNorm<Eigen::Infinity>() > tol::leaf)
            throw std::invalid_argument("path end is off the leaf");
    }
    return {from, to, std::move(leaf)};
}

double path_integral(const OneForm& alpha, const PathDescriptor& path) {
    Integrand f = [&](double s) {
        PathNode node = path_node(path, s);
        Eigen::VectorXd out(1);
        out(0) = alpha.row(node.p) * node.v;
        return out;
    };
    return integrate01(f)(0);
}

Eigen::MatrixXd QuadratureChart::jrows(const std::vector<double>& x) const {
    Eigen::MatrixXd Y = aev->mat(x);
    auto qr = Y.colPivHouseholderQr();
    qr.setThreshold(tol::pivot);
    if (qr.rank() < Y.cols())
        throw std::runtime_error("adapted frame is singular at " + point_str(x));
    return qr.inverse();
}

/*
 * Each stage block is a line integral of the stage rows from the stage
 * anchor to x along a path inside the leaf of the earlier stage
 * functions. The path is traced from x backwards: the unconstrained
 * coordinates move straight to their reference values while the adjusted
 * ones follow the leaf-tangency condition (the early rows annihilate the
 * velocity), which conserves every earlier stage function along the way
 * and lands on the anchor section without ever evaluating lower stages.
 */
Eigen::VectorXd QuadratureChart::q_upto(const std::vector<double>& x,
                                        std::size_t nstages) const {
    const std::size_t n = dim();
    Eigen::VectorXd out = Eigen::VectorXd::Zero((Eigen::Index)n);
    const std::size_t upto = std::min(nstages, stages.size());
    for (std::size_t s = 0; s < upto; ++s) {
        const ChartStage& st = stages[s];
        const std::size_t na = st.adjust.size();
        std::vector<int> free_idx;
        {
            std::vector<bool> adj(n, false);
            for (int a : st.adjust) adj[(std::size_t)a] = true;
            for (std::size_t i = 0; i < n; ++i)
                if (!adj[i]) free_idx.push_back((int)i);
        }
        Eigen::VectorXd vfree = Eigen::VectorXd::Zero((Eigen::Index)n);
        for (int i : free_idx) vfree(i) = dom.x0[(std::size_t)i] - x[(std::size_t)i];

        Rhs F = [&](double t, const Eigen::VectorXd& state) -> Eigen::VectorXd {
            std::vector<double> p(n);
            for (int i : free_idx)
                p[(std::size_t)i] = x[(std::size_t)i] + t * vfree(i);
            for (std::size_t i = 0; i < na; ++i)
                p[(std::size_t)st.adjust[i]] = state((Eigen::Index)i);
            Eigen::MatrixXd J = jrows(p);
            Eigen::VectorXd v = vfree;
            if (na > 0) {
                Eigen::MatrixXd Jtop = J.topRows((Eigen::Index)st.first);
                Eigen::MatrixXd Jc(Jtop.rows(), (Eigen::Index)na);
                for (std::size_t i = 0; i < na; ++i) Jc.col((Eigen::Index)i) = Jtop.col(st.adjust[i]);
                Eigen::VectorXd vadj = Jc.colPivHouseholderQr().solve(-(Jtop * vfree));
                for (std::size_t i = 0; i < na; ++i) v(st.adjust[i]) = vadj((Eigen::Index)i);
                if ((Jtop * v).lpNorm<Eigen::Infinity>() >
                    1e-8 * (1.0 + v.lpNorm<Eigen::Infinity>()))
                    throw std::runtime_error("leaf direction solve degenerated at " +
                                             point_str(p));
            }
            Eigen::VectorXd rhs((Eigen::Index)(na + st.count));
            for (std::size_t i = 0; i < na; ++i) rhs((Eigen::Index)i) = v(st.adjust[i]);
            rhs.tail((Eigen::Index)st.count) =
                -(J.middleRows((Eigen::Index)st.first, (Eigen::Index)st.count) * v);
            return rhs;
        };

        Eigen::VectorXd state = Eigen::VectorXd::Zero((Eigen::Index)(na + st.count));
        for (std::size_t i = 0; i < na; ++i)
            state((Eigen::Index)i) = x[(std::size_t)st.adjust[i]];
        state = dp45_to(F, std::move(state), 1e-12, 1e-12,
                        "stage " + std::to_string(s + 1) + " trace");
        out.segment((Eigen::Index)st.first, (Eigen::Index)st.count) =
            state.tail((Eigen::Index)st.count);
    }
    return out;
}

std::vector<double> QuadratureChart::anchor(const Eigen::VectorXd& constraints,
                                            std::size_t stage) const {
    const ChartStage& st = stages[stage];
    std::vector<double> y = dom.x0;
    if (stage < warm_.size() && !warm_[stage].second.empty() &&
        (warm_[stage].first - constraints).lpNorm<Eigen::Infinity>() <
            0.5 * (1.0 + constraints.lpNorm<Eigen::Infinity>()))
        y = warm_[stage].second;
    auto value = [this, stage, &st](const std::vector<double>& p) {
        return Eigen::VectorXd(q_upto(p, stage).head((Eigen::Index)st.first));
    };
    auto rowsfn = [this, &st](const std::vector<double>& p) {
        return Eigen::MatrixXd(jrows(p).topRows((Eigen::Index)st.first));
    };
    project_onto(y, value, rowsfn, constraints, st.adjust,
                 "stage " + std::to_string(stage + 1) + " anchor projection failed");
    if (stage < warm_.size()) warm_[stage] = {constraints, y};
    return y;
}

NewtonSolve QuadratureChart::invert(const Eigen::VectorXd& target, std::vector<double> guess,
                                    QCache* cache) const {
    auto qeval = [&](const std::vector<double>& p) -> Eigen::VectorXd {
        if (cache) {
            auto it = cache->find(p);
            if (it != cache->end()) return it->second;
        }
        Eigen::VectorXd v = Q(p);
        if (cache) (*cache)[p] = v;
        return v;
    };

    NewtonSolve ns;
    ns.y = std::move(guess);
    Eigen::VectorXd F = qeval(ns.y) - target;
    ns.residual = F.norm();
    for (int iter = 0; iter < 50 && ns.residual >= tol::newton; ++iter) {
        ns.iters = iter + 1;
        Eigen::MatrixXd J = jrows(ns.y);
        Eigen::VectorXd delta = J.colPivHouseholderQr().solve(-F);
        double lam = 1.0;
        bool moved = false;
        for (int h = 0; h < 10 && !moved; ++h) {
            std::vector<double> yt = ns.y;
            for (std::size_t c = 0; c < yt.size(); ++c) yt[c] += lam * delta((Eigen::Index)c);
            try {
                Eigen::VectorXd Ft = qeval(yt) - target;
                double rt = Ft.norm();
                if (rt < ns.residual) {
                    ns.y = std::move(yt);
                    F = std::move(Ft);
                    ns.residual = rt;
                    moved = true;
                }
            } catch (const std::runtime_error&) {
            }
            lam *= 0.5;
        }
        if (!moved) break;
    }
    ns.converged = ns.residual < tol::newton;
    return ns;
}

QuadratureChart build_chart(const std::vector<Subspace>& entries, const SystemDef& sys,
                            std::size_t gamma) {
    const std::size_t n = sys.dom.dim();
    if (sys.frame.size() != n)
        throw std::runtime_error("chart needs one frame field per coordinate, got " +
                                 std::to_string(sys.frame.size()) + " on dimension " +
                                 std::to_string(n));
    if (gamma >= n) throw std::invalid_argument("dynamic field index out of range");

    QuadratureChart ch;
    ch.frame = sys.frame;
    ch.dom = sys.dom;
    ch.gamma = gamma;
    ch.chain = entries;
    if (ch.chain.empty() || ch.chain[0].dim() != n)
        throw std::runtime_error("chain must start at the full space");
    if (ch.chain.back().dim() > 0) ch.chain.push_back(Subspace::zero(n));
    ch.profile = make_profile(ch.chain);

    const Eigen::MatrixXd& B = ch.profile.adapted;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B.transpose());
    if (!lu.isInvertible()) throw std::logic_error("adapted basis is not invertible");
    ch.dual = lu.solve(Eigen::MatrixXd::Identity((Eigen::Index)n, (Eigen::Index)n));
    ch.xi_gamma = ch.dual.col((Eigen::Index)gamma);

    for (std::size_t i = 0; i < n; ++i)
        ch.adapted_fields.push_back(linear_combination(sys.frame.fields, B.row((Eigen::Index)i),
                                                       "Y" + std::to_string(i + 1)));
    ch.aev = std::make_shared<FrameEvaluator>(ch.adapted_fields, sys.dom.vars);

    // reference point must carry an invertible adapted frame
    {
        Eigen::MatrixXd Y0;
        try {
            Y0 = ch.aev->mat(sys.dom.x0);
        } catch (const EvalError& e) {
            throw std::runtime_error(std::string("frame evaluation failed at x0: ") + e.what());
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y0);
        double ratio = svd.singularValues()(svd.singularValues().size() - 1) /
                       svd.singularValues()(0);
        if (!(ratio > tol::sigma))
            throw std::runtime_error("frame is singular at the reference point (ratio " +
                                     std::to_string(ratio) + ")");
    }

    const auto& w = ch.profile.w;
    const auto& d = ch.profile.d;
    for (std::size_t si = 0; si < ch.profile.r; ++si) {
        ChartStage st;
        st.first = si == 0 ? 0 : w[si - 1];
        st.count = d[si];

        const Subspace& prev = ch.chain[si];
        const Subspace& next = ch.chain[si + 1];
        std::vector<VectorField> prev_fields;
        for (std::size_t b = 0; b < prev.dim(); ++b)
            prev_fields.push_back(linear_combination(ch.frame.fields,
                                                     prev.basis().row((Eigen::Index)b),
                                                     "S" + std::to_string(b + 1)));
        std::vector<VectorField> complement;
        for (std::size_t i = 0; i < st.first; ++i) complement.push_back(ch.adapted_fields[i]);

        for (std::size_t t = 0; t < st.count; ++t) {
            Eigen::RowVectorXd full = ch.dual.row((Eigen::Index)(st.first + t));
            // restriction to the stage frame
            Eigen::RowVectorXd zr = full * prev.basis().transpose();
            Covector zeta{zr, (int)si + 1};
            for (std::size_t b = 0; b < next.dim(); ++b) {
                double v = full * next.basis().row((Eigen::Index)b).transpose();
                if (std::abs(v) > 1e-12)
                    throw std::logic_error("stage " + std::to_string(si + 1) +
                                           " covector does not annihilate the next entry");
            }
            st.zetas.push_back(zeta);
            st.forms.push_back(one_form(zeta, prev_fields, sys.dom.vars, complement));
        }

        if (si > 0) {
            Eigen::MatrixXd early;
            try {
                early = ch.jrows(sys.dom.x0).topRows((Eigen::Index)st.first);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("stage " + std::to_string(si + 1) + ": " + e.what());
            }
            auto qr = early.colPivHouseholderQr();
            const auto& perm = qr.colsPermutation().indices();
            for (std::size_t i = 0; i < st.first; ++i) st.adjust.push_back(perm((Eigen::Index)i));
        }
        ch.stages.push_back(std::move(st));
    }
    ch.warm_.resize(ch.stages.size());

    try {
        ch.q0_norm = ch.Q(sys.dom.x0).lpNorm<Eigen::Infinity>();
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("chart evaluation failed at x0: ") + e.what());
    }
    if (ch.q0_norm > 1e-8)
        throw std::logic_error("chart does not vanish at the reference point");

    FrameEvaluator fev(ch.frame.fields, sys.dom.vars);
    auto probe = [&](const std::vector<double>& p) {
        try {
            Eigen::MatrixXd Y = ch.aev->mat(p);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y);
            double ratio = svd.singularValues()(svd.singularValues().size() - 1) /
                           svd.singularValues()(0);
            ch.jac_min_ratio = std::min(ch.jac_min_ratio, ratio);
            Eigen::MatrixXd rows = ch.jrows(p);
            Eigen::VectorXd g = fev.field((Eigen::Index)gamma, p);
            ch.gq_worst = std::max(ch.gq_worst,
                                   (rows * g - ch.xi_gamma).lpNorm<Eigen::Infinity>());
        } catch (const std::runtime_error&) {
        }
    };
    probe(sys.dom.x0);
    for (int k = 0; k < 32; ++k) probe(sys.dom.sample((std::size_t)k));

    for (const auto& form : ch.stages[0].forms) {
        auto cc = closedness_check(form, ch.frame.fields, sys.dom);
        ch.closed_worst = std::max(ch.closed_worst, cc.worst);
    }
    return ch;
}

QuadratureChart build_chart(const SeriesTrace& trace, const SystemDef& sys) {
    if (trace.end == SeriesEnd::Stabilized)
        throw std::invalid_argument("series chain does not terminate; no chart exists");
    return build_chart(trace.entries, sys, sys.gamma);
}

QuadratureChart build_chart(const DistSeriesTrace& trace, const SystemDef& sys) {
    if (trace.end == SeriesEnd::Stabilized)
        throw std::invalid_argument("series chain does not terminate; no chart exists");
    return build_chart(trace.entries, sys, sys.gamma);
}

FlowResult chart_flow(const QuadratureChart& chart, const std::vector<double>& x,
                      const std::vector<double>& tgrid) {
    // the chart translates this flow only when the dynamic field sits in
    // the final chain entry, so its adapted coordinates are confined to
    // the last stage block
    const std::size_t tail = chart.stages.back().first;
    for (std::size_t j = 0; j < tail; ++j)
        if (std::abs(chart.xi_gamma((Eigen::Index)j)) > 1e-12)
            throw std::invalid_argument(
                "dynamic field is not in the final chain entry; its flow does not "
                "translate this chart");

    FlowResult out;
    out.start = x;
    out.times = tgrid;
    out.method = "chart";

    QCache cache;
    Eigen::VectorXd Q0;
    try {
        Q0 = chart.Q(x);
    } catch (const std::runtime_error& e) {
        out.truncated = true;
        out.note = std::string("chart undefined at the initial point: ") + e.what();
        return out;
    }
    cache[x] = Q0;

    std::vector<double> prev = x;
    for (std::size_t i = 0; i < tgrid.size(); ++i) {
        Eigen::VectorXd target = Q0 + tgrid[i] * chart.xi_gamma;
        NewtonSolve ns = chart.invert(target, prev, &cache);
        FlowPoint fp;
        fp.x = ns.y;
        fp.iters = ns.iters;
        fp.residual = ns.residual;
        fp.exited = !chart.dom.inside(ns.y, 1e-9);
        fp.ok = ns.converged && !fp.exited;
        out.points.push_back(fp);
        if (!fp.ok) {
            out.truncated = true;
            out.note = fp.exited ? "flow left the domain box at t = " + std::to_string(tgrid[i])
                                 : "chart inversion stalled at t = " + std::to_string(tgrid[i]) +
                                       " (residual " + std::to_string(ns.residual) + ")";
            break;
        }
        prev = ns.y;
    }
    return out;
}

FlowResult rk_oracle(const VectorField& gamma, const Domain& dom, const std::vector<double>& x,
                     const std::vector<double>& tgrid) {
    const std::size_t n = dom.dim();
    if (gamma.comp.size() != n) throw std::invalid_argument("field dimension mismatch");
    for (std::size_t i = 1; i < tgrid.size(); ++i)
        if (tgrid[i] < tgrid[i - 1])
            throw std::invalid_argument("time grid must be nondecreasing");
    if (!tgrid.empty() && tgrid[0] < 0.0)
        throw std::invalid_argument("oracle integrates forward from t = 0");

    std::vector<Tape> tapes;
    for (const auto& c : gamma.comp) tapes.push_back(compile(c, dom.vars));
    auto f = [&](const std::vector<double>& y) {
        Eigen::VectorXd v((Eigen::Index)n);
        for (std::size_t i = 0; i < n; ++i) v((Eigen::Index)i) = tapes[i].eval(y);
        return v;
    };
    auto to_vec = [&](const Eigen::VectorXd& v) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = v((Eigen::Index)i);
        return p;
    };

    const double atol = 1e-10, rtol = 1e-10;

    FlowResult out;
    out.start = x;
    out.times = tgrid;
    out.method = "rk-oracle";

    double slack = 0.0;
    for (std::size_t c = 0; c < n; ++c) slack = std::max(slack, 0.25 * (dom.hi[c] - dom.lo[c]));

    Eigen::VectorXd y((Eigen::Index)n);
    for (std::size_t i = 0; i < n; ++i) y((Eigen::Index)i) = x[i];
    double t = 0.0;
    double h = 0.0;
    Eigen::VectorXd k1;
    bool have_k1 = false;

    for (double T : tgrid) {
        bool failed = false;
        while (t < T - 1e-14 * (1.0 + std::abs(T))) {
            if (h <= 0.0) h = (T - t) / 16.0;
            double hs = std::min(h, T - t);
            if (hs < 1e-14 * (1.0 + std::abs(t))) {
                out.truncated = true;
                out.note = "oracle step size underflow at t = " + std::to_string(t);
                failed = true;
                break;
            }
            try {
                if (!have_k1) {
                    k1 = f(to_vec(y));
                    have_k1 = true;
                }
                Eigen::VectorXd k2 = f(to_vec(y + hs * (dp::a21 * k1)));
                Eigen::VectorXd k3 = f(to_vec(y + hs * (dp::a31 * k1 + dp::a32 * k2)));
                Eigen::VectorXd k4 =
                    f(to_vec(y + hs * (dp::a41 * k1 + dp::a42 * k2 + dp::a43 * k3)));
                Eigen::VectorXd k5 = f(to_vec(y + hs * (dp::a51 * k1 + dp::a52 * k2 +
                                                        dp::a53 * k3 + dp::a54 * k4)));
                Eigen::VectorXd k6 = f(to_vec(y + hs * (dp::a61 * k1 + dp::a62 * k2 +
                                                        dp::a63 * k3 + dp::a64 * k4 +
                                                        dp::a65 * k5)));
                Eigen::VectorXd ynew = y + hs * (dp::b1 * k1 + dp::b3 * k3 + dp::b4 * k4 +
                                                 dp::b5 * k5 + dp::b6 * k6);
                Eigen::VectorXd k7 = f(to_vec(ynew));
                Eigen::VectorXd errv = hs * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 +
                                             dp::e5 * k5 + dp::e6 * k6 + dp::e7 * k7);
                double err = 0.0;
                for (Eigen::Index c = 0; c < (Eigen::Index)n; ++c) {
                    double sc = atol + rtol * std::max(std::abs(y(c)), std::abs(ynew(c)));
                    err += std::pow(errv(c) / sc, 2);
                }
                err = std::sqrt(err / (double)n);
                if (err <= 1.0) {
                    t += hs;
                    y = ynew;
                    k1 = k7;
                }
                double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                h = hs * std::min(5.0, std::max(0.2, fac));
            } catch (const EvalError& e) {
                out.truncated = true;
                out.note = std::string("oracle field evaluation failed: ") + e.what();
                failed = true;
                break;
            }
        }
        FlowPoint fp;
        fp.x = to_vec(y);
        fp.exited = !dom.inside(fp.x, slack);
        fp.ok = !failed && !fp.exited;
        out.points.push_back(fp);
        if (!fp.ok) {
            out.truncated = true;
            if (out.note.empty()) out.note = "oracle left the domain at t = " + std::to_string(T);
            break;
        }
    }
    return out;
}

FlowComparison compare_flow(const FlowResult& a, const FlowResult& b) {
    if (a.times.size() != b.times.size()) throw std::invalid_argument("time grids differ");
    for (std::size_t i = 0; i < a.times.size(); ++i)
        if (std::abs(a.times[i] - b.times[i]) > 1e-12 * (1.0 + std::abs(b.times[i])))
            throw std::invalid_argument("time grids differ");

    FlowComparison out;
    std::size_t len = std::min(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < len; ++i) {
        if (!a.points[i].ok || !b.points[i].ok) break;
        double dev = 0.0;
        int comp = -1;
        for (std::size_t c = 0; c < a.points[i].x.size(); ++c) {
            double d = std::abs(a.points[i].x[c] - b.points[i].x[c]) /
                       (1.0 + std::abs(b.points[i].x[c]));
            if (d > dev) {
                dev = d;
                comp = (int)c;
            }
        }
        out.per_time.push_back(dev);
        if (dev > out.max_dev) {
            out.max_dev = dev;
            out.worst_index = i;
            out.worst_comp = comp;
        }
        ++out.compared;
    }
    out.ok = out.compared == a.times.size() && out.max_dev < tol::flow;
    return out;
}

NormalFormCheck normal_form_verify(const RegularSpace& V, const QuadratureChart& chart,
                                   const NormalFormProfile& profile, bool strong) {
    const std::size_t n = chart.dim();
    if (V.frame.size() != n || profile.w.empty() || profile.w.back() != n)
        throw std::invalid_argument("profile does not match the chart dimension");
    const Domain& dom = chart.dom;

    std::vector<VectorField> adapted;
    for (std::size_t i = 0; i < n; ++i)
        adapted.push_back(linear_combination(V.frame.fields, profile.adapted.row((Eigen::Index)i),
                                             "Y" + std::to_string(i + 1)));
    FrameEvaluator aev(adapted, dom.vars);

    std::vector<double> h(n);
    for (std::size_t c = 0; c < n; ++c) h[c] = 1e-5 * (dom.hi[c] - dom.lo[c]);

    auto stage_of = [&](std::size_t idx) {
        std::size_t s = 0;
        while (profile.w[s] <= idx) ++s;
        return s;  // 0-based stage containing 0-based coordinate idx
    };

    NormalFormCheck out;
    std::vector<std::vector<double>> pts;
    for (int k = 0; pts.size() < 32 && k < 256; ++k) {
        auto p = dom.sample((std::size_t)k);
        bool margin_ok = true;
        for (std::size_t c = 0; c < n; ++c)
            if (p[c] < dom.lo[c] + 2 * h[c] || p[c] > dom.hi[c] - 2 * h[c]) margin_ok = false;
        if (!margin_ok) {
            ++out.skipped;
            continue;
        }
        try {
            chart.Q(p);
            aev.mat(p);
            pts.push_back(p);
        } catch (const std::runtime_error&) {
            ++out.skipped;
        }
    }

    auto fd_jacobian = [&](const std::vector<double>& p) {
        Eigen::MatrixXd J((Eigen::Index)n, (Eigen::Index)n);
        for (std::size_t c = 0; c < n; ++c) {
            std::vector<double> pp = p, pm = p;
            pp[c] += h[c];
            pm[c] -= h[c];
            J.col((Eigen::Index)c) = (chart.Q(pp) - chart.Q(pm)) / (2.0 * h[c]);
        }
        return J;
    };

    const std::size_t strong_samples = 8;
    const double dep_step = 0.02;

    for (std::size_t sp = 0; sp < pts.size(); ++sp) {
        const auto& p = pts[sp];
        Eigen::MatrixXd Jq, Yp;
        try {
            Jq = fd_jacobian(p);
            Yp = aev.mat(p);
        } catch (const std::runtime_error&) {
            ++out.skipped;
            continue;
        }
        Eigen::MatrixXd push = Jq * Yp;  // column i: adapted field i in chart components
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t s = stage_of(i);
            double dev = std::abs(push((Eigen::Index)i, (Eigen::Index)i) - 1.0);
            for (std::size_t j = 0; j < profile.w[s]; ++j)
                if (j != i) dev = std::max(dev, std::abs(push((Eigen::Index)j, (Eigen::Index)i)));
            out.worst = std::max(out.worst, dev);
            ++out.checked;
        }

        if (!strong || sp >= strong_samples) continue;

        // band-by-band independence of the trailing coefficients from late
        // chart variables
        Eigen::VectorXd q;
        try {
            q = chart.Q(p);
        } catch (const std::runtime_error&) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            // which (field, component) pairs must ignore chart variable j
            bool needed = false;
            for (std::size_t k = 0; k < n && !needed; ++k) {
                std::size_t band = stage_of(k);
                if (band > 0 && j >= profile.w[band - 1]) needed = true;
            }
            if (!needed) continue;
            Eigen::VectorXd qp = q, qm = q;
            qp((Eigen::Index)j) += dep_step;
            qm((Eigen::Index)j) -= dep_step;
            QCache cache;
            NewtonSolve np = chart.invert(qp, p, &cache);
            NewtonSolve nm = chart.invert(qm, p, &cache);
            if (!np.converged || !nm.converged) {
                ++out.skipped;
                continue;
            }
            try {
                Eigen::MatrixXd pp = fd_jacobian(np.y) * aev.mat(np.y);
                Eigen::MatrixXd pm = fd_jacobian(nm.y) * aev.mat(nm.y);
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t s = stage_of(i);
                    for (std::size_t k = profile.w[s]; k < n; ++k) {
                        std::size_t band = stage_of(k);
                        if (band == 0 || j < profile.w[band - 1]) continue;
                        double dep = std::abs(pp((Eigen::Index)k, (Eigen::Index)i) -
                                              pm((Eigen::Index)k, (Eigen::Index)i)) /
                                     (2.0 * dep_step);
                        out.worst_dep = std::max(out.worst_dep, dep);
                    }
                }
            } catch (const std::runtime_error&) {
                ++out.skipped;
            }
        }
    }

    out.ok = out.checked > 0 && out.worst < tol::nf && (!strong || out.worst_dep < 1e-3);
    return out;
}

} // namespace liq
