#include <liq/liealg.hpp>
#include <liq/tolerances.hpp>

#include <cmath>
#include <stdexcept>

namespace liq {

namespace {

double snap(double v, double scale) {
    for (std::int64_t q = 1; q <= 12; ++q) {
        double scaled = v * (double)q;
        if (std::abs(scaled) > 9.0e15) break;
        std::int64_t p = (std::int64_t)std::llround(scaled);
        double r = (double)p / (double)q;
        if (std::abs(v - r) <= 1e-7 * (1.0 + std::abs(r)) + 1e-12 * scale) return r;
    }
    return v;
}

std::vector<std::vector<double>> collect_samples(const Domain& dom, const FrameEvaluator& ev,
                                                 std::size_t want) {
    std::vector<std::vector<double>> pts;
    try {
        ev.mat(dom.x0);
        pts.push_back(dom.x0);
    } catch (const EvalError&) {
    }
    std::size_t k = 0, attempts = 0;
    const std::size_t cap = 16 + 4 * want;
    while (pts.size() < want && attempts < cap) {
        auto p = dom.sample(k++);
        ++attempts;
        try {
            ev.mat(p);
            pts.push_back(std::move(p));
        } catch (const EvalError&) {
        }
    }
    if (pts.size() < std::max<std::size_t>(2, want / 2))
        throw std::runtime_error("structure constants: too few evaluable sample points");
    return pts;
}

} // namespace

Eigen::VectorXd StructureConstants::bracket(const Eigen::VectorXd& a,
                                            const Eigen::VectorXd& b) const {
    Eigen::VectorXd out(n);
    for (std::size_t k = 0; k < n; ++k) out(k) = a.dot(c[k] * b);
    return out;
}

double StructureConstants::jacobi_defect() const {
    double cmax = 0.0;
    for (const auto& m : c) cmax = std::max(cmax, m.cwiseAbs().maxCoeff());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (std::size_t m = 0; m < n; ++m)
                        s += get(i, j, m) * get(m, k, l) + get(j, k, m) * get(m, i, l) +
                             get(k, i, m) * get(m, j, l);
                    worst = std::max(worst, std::abs(s));
                }
    return worst / (1.0 + cmax * cmax);
}

StructureConstants structure_constants(const Frame& F, const Domain& dom) {
    const std::size_t n = F.size();
    const std::size_t d = dom.dim();
    StructureConstants sc;
    sc.n = n;
    sc.c.assign(n, Eigen::MatrixXd::Zero(n, n));
    sc.closed = true;

    if (n < 2) return sc;

    FrameEvaluator ev(F.fields, dom.vars);
    auto pts = collect_samples(dom, ev, 2 * n + 4);
    const std::size_t m = pts.size();

    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(m);
    for (const auto& p : pts) mats.push_back(ev.mat(p));

    for (std::size_t i = 0; i < n && sc.closed; ++i) {
        for (std::size_t j = i + 1; j < n && sc.closed; ++j) {
            auto B = lie_bracket(F.fields[i], F.fields[j], dom.vars);
            std::vector<Tape> bt;
            for (const auto& cexpr : B.comp) bt.push_back(compile(cexpr, dom.vars));

            Eigen::MatrixXd A(m * d, n);
            Eigen::VectorXd rhs(m * d);
            Eigen::MatrixXd per(m, n);
            for (std::size_t s = 0; s < m; ++s) {
                Eigen::VectorXd bv(d);
                for (std::size_t r = 0; r < d; ++r) bv(r) = bt[r].eval(pts[s]);
                A.middleRows(s * d, d) = mats[s];
                rhs.segment(s * d, d) = bv;
                per.row(s) = mats[s].colPivHouseholderQr().solve(bv).transpose();
            }

            Eigen::VectorXd fit = A.colPivHouseholderQr().solve(rhs);
            double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
            Eigen::VectorXd snapped(n);
            for (std::size_t k = 0; k < n; ++k) snapped(k) = snap(fit(k), scale);
            double res = (A * snapped - rhs).norm() / (1.0 + rhs.norm());
            sc.residual = std::max(sc.residual, res);

            double var = 0.0;
            Eigen::VectorXd mean = per.colwise().mean();
            for (std::size_t k = 0; k < n; ++k) {
                double acc = 0.0;
                for (std::size_t s = 0; s < m; ++s) {
                    double dv = per(s, k) - mean(k);
                    acc += dv * dv;
                }
                var = std::max(var, acc / (double)(m - 1));
            }

            bool pair_ok = res < tol::sc;
            if (pair_ok) {
                for (std::size_t r = 0; r < d && pair_ok; ++r) {
                    std::vector<ExprPtr> terms = {B.comp[r]};
                    for (std::size_t k = 0; k < n; ++k) {
                        if (snapped(k) == 0.0) continue;
                        terms.push_back(
                            neg(prod({num_auto(snapped(k)), F.fields[k].comp[r]})));
                    }
                    auto zc = is_zero_on(sum(terms), dom.vars, dom.lo, dom.hi, tol::zero,
                                         dom.nsamples, dom.seed);
                    if (!zc.zero) pair_ok = false;
                }
            }

            if (!pair_ok) {
                sc.closed = false;
                sc.wi = (int)i;
                sc.wj = (int)j;
                sc.variance = var;
            }
            for (std::size_t k = 0; k < n; ++k) {
                sc.c[k]((Eigen::Index)i, (Eigen::Index)j) = snapped(k);
                sc.c[k]((Eigen::Index)j, (Eigen::Index)i) = -snapped(k);
            }
        }
    }
    return sc;
}

std::vector<std::size_t> SeriesTrace::dims() const {
    std::vector<std::size_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.dim());
    return out;
}

Subspace bracket_span(const StructureConstants& c, const Subspace& S, const Subspace& T) {
    const std::size_t rs = S.dim(), rt = T.dim();
    Eigen::MatrixXd rows(rs * rt, c.n);
    for (std::size_t a = 0; a < rs; ++a)
        for (std::size_t b = 0; b < rt; ++b)
            rows.row(a * rt + b) =
                c.bracket(S.basis().row(a).transpose(), T.basis().row(b).transpose())
                    .transpose();
    return Subspace::from_rows(rows);
}

bool is_abelian_subspace(const StructureConstants& c, const Subspace& S) {
    return bracket_span(c, S, S).dim() == 0;
}

namespace {

SeriesTrace run_series(const StructureConstants& c, SeriesKind kind, std::size_t gamma) {
    SeriesTrace tr;
    tr.kind = kind;
    tr.gamma = gamma;
    Subspace L = Subspace::full(c.n);
    Subspace gspan;
    if (kind == SeriesKind::Gamma) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, c.n);
        g(0, (Eigen::Index)gamma) = 1.0;
        gspan = Subspace::from_rows(g);
    }

    Subspace cur = L;
    tr.entries.push_back(cur);
    tr.abelian.push_back(is_abelian_subspace(c, cur));
    if (kind == SeriesKind::Gamma && tr.abelian.back()) {
        tr.end = SeriesEnd::Abelian;
        return tr;
    }

    for (std::size_t step = 0; step <= c.n + 1; ++step) {
        Subspace next;
        switch (kind) {
        case SeriesKind::Derived: next = bracket_span(c, cur, cur); break;
        case SeriesKind::Central: next = bracket_span(c, L, cur); break;
        case SeriesKind::Gamma: next = gspan.join(bracket_span(c, cur, cur)); break;
        }
        tr.entries.push_back(next);
        tr.abelian.push_back(is_abelian_subspace(c, next));
        if (next.dim() == 0) {
            tr.end = SeriesEnd::Zero;
            return tr;
        }
        if (kind == SeriesKind::Gamma && tr.abelian.back()) {
            tr.end = SeriesEnd::Abelian;
            return tr;
        }
        if (next.same_as(cur)) {
            tr.end = SeriesEnd::Stabilized;
            return tr;
        }
        cur = next;
    }
    throw std::logic_error("series did not terminate within the dimension cap");
}

} // namespace

SeriesTrace derived_series(const StructureConstants& c) {
    return run_series(c, SeriesKind::Derived, 0);
}

SeriesTrace central_series(const StructureConstants& c) {
    return run_series(c, SeriesKind::Central, 0);
}

SeriesTrace gamma_series(const StructureConstants& c, std::size_t gamma) {
    if (gamma >= c.n) throw std::invalid_argument("gamma index out of range");
    return run_series(c, SeriesKind::Gamma, gamma);
}

bool is_solvable(const StructureConstants& c) { return derived_series(c).end == SeriesEnd::Zero; }

bool is_nilpotent(const StructureConstants& c) { return central_series(c).end == SeriesEnd::Zero; }

std::optional<int> lie_integrability_order(const SeriesTrace& trace) {
    if (trace.kind != SeriesKind::Gamma)
        throw std::invalid_argument("integrability order needs a gamma-series trace");
    for (std::size_t k = 0; k < trace.entries.size(); ++k)
        if (trace.abelian[k]) return (int)k + 1;
    return std::nullopt;
}

CocycleCheck cocycle_check(const std::vector<ExprPtr>& h, const StructureConstants& c,
                           const Frame& F, const Domain& dom) {
    if (h.size() != F.size())
        throw std::invalid_argument("cochain length must match the frame");
    CocycleCheck out;
    for (std::size_t i = 0; i < F.size(); ++i) {
        for (std::size_t j = i + 1; j < F.size(); ++j) {
            std::vector<ExprPtr> terms = {apply_field(F.fields[i], h[j], dom.vars),
                                          neg(apply_field(F.fields[j], h[i], dom.vars))};
            for (std::size_t k = 0; k < F.size(); ++k) {
                double ck = c.get(i, j, k);
                if (ck == 0.0) continue;
                terms.push_back(neg(prod({num_auto(ck), h[k]})));
            }
            auto zc = is_zero_on(sum(terms), dom.vars, dom.lo, dom.hi, tol::zero,
                                 dom.nsamples, dom.seed);
            if (!zc.zero) {
                out.ok = false;
                out.wi = (int)i;
                out.wj = (int)j;
                out.witness = zc.witness;
                out.value = zc.value;
                return out;
            }
        }
    }
    return out;
}

SubspaceProps subspace_props(const Subspace& S, const StructureConstants& c) {
    SubspaceProps props;
    props.is_abelian = is_abelian_subspace(c, S);
    props.is_ideal = true;
    for (std::size_t i = 0; i < c.n && props.is_ideal; ++i) {
        Eigen::VectorXd ei = Eigen::VectorXd::Zero(c.n);
        ei((Eigen::Index)i) = 1.0;
        for (std::size_t r = 0; r < S.dim(); ++r) {
            Eigen::VectorXd w = c.bracket(ei, S.basis().row(r).transpose());
            double nw = w.norm();
            if (nw <= tol::zero) continue;
            if (!S.contains(Eigen::VectorXd(w / nw))) {
                props.is_ideal = false;
                break;
            }
        }
    }
    return props;
}

} // namespace liq
