#include <liq/distrib.hpp>
#include <liq/tolerances.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <memory>
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

// walks the domain's sample stream, keeping points where the frame
// evaluates; x0 comes first
struct SampleStream {
    const Domain& dom;
    const FrameEvaluator& ev;
    std::size_t cursor = 0;
    bool x0_done = false;
    int skipped = 0;

    std::vector<std::vector<double>> take(std::size_t count) {
        std::vector<std::vector<double>> pts;
        std::size_t attempts = 0;
        const std::size_t cap = 64 + 8 * count;
        while (pts.size() < count && attempts < cap) {
            std::vector<double> p;
            if (!x0_done) {
                x0_done = true;
                p = dom.x0;
            } else {
                p = dom.sample(cursor++);
            }
            ++attempts;
            try {
                ev.mat(p);
                pts.push_back(std::move(p));
            } catch (const EvalError&) {
                ++skipped;
            }
        }
        if (pts.size() < count)
            throw std::runtime_error("too few evaluable sample points in the box");
        return pts;
    }
};

std::size_t svd_rank(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd) {
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol::pivot * s(0)) ++r;
    return r;
}

} // namespace

RegularSpace regularity_check(const Frame& V, const Domain& dom) {
    RegularSpace out;
    out.frame = V;
    out.dom = dom;
    const std::size_t m = V.size();
    const std::size_t n = dom.dim();

    FrameEvaluator ev(V.fields, dom.vars);
    std::vector<Eigen::MatrixXd> mats;
    auto probe = [&](const std::vector<double>& p) {
        try {
            mats.push_back(ev.mat(p));
        } catch (const EvalError&) {
            ++out.skipped;
        }
    };
    probe(dom.x0);
    for (int k = 0; k < dom.nsamples; ++k) probe(dom.sample((std::size_t)k));
    if (mats.empty()) return out;

    Eigen::MatrixXd stacked((Eigen::Index)(mats.size() * n), (Eigen::Index)m);
    for (std::size_t s = 0; s < mats.size(); ++s)
        stacked.middleRows((Eigen::Index)(s * n), (Eigen::Index)n) = mats[s];
    Eigen::JacobiSVD<Eigen::MatrixXd> whole(stacked);
    out.span_dim = svd_rank(whole);

    bool constant = true;
    std::size_t common = 0;
    for (std::size_t s = 0; s < mats.size(); ++s) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mats[s]);
        std::size_t r = svd_rank(svd);
        if (s == 0) common = r;
        else if (r != common) constant = false;
    }
    out.rank = common;
    out.regular = constant && common == out.span_dim;
    out.completely_regular = out.regular && common == n;
    return out;
}

CoreResult core(const std::vector<VectorField>& S, const RegularSpace& V) {
    const std::size_t m = V.frame.size();
    CoreResult out;
    if (S.empty()) {
        out.core = Subspace::zero(m);
        return out;
    }
    const std::size_t n = V.dom.dim();

    FrameEvaluator fev(V.frame.fields, V.dom.vars);
    std::vector<std::vector<Tape>> stapes;
    for (const auto& B : S) {
        std::vector<Tape> t;
        for (const auto& c : B.comp) t.push_back(compile(c, V.dom.vars));
        stapes.push_back(std::move(t));
    }

    SampleStream stream{V.dom, fev};

    // coefficient rows of every input field at one point, or nothing when
    // an input fails to evaluate there
    auto rows_at = [&](const std::vector<double>& p) -> std::optional<Eigen::MatrixXd> {
        Eigen::MatrixXd M = fev.mat(p);
        Eigen::MatrixXd rows((Eigen::Index)S.size(), (Eigen::Index)m);
        auto solver = M.colPivHouseholderQr();
        for (std::size_t b = 0; b < S.size(); ++b) {
            Eigen::VectorXd bv((Eigen::Index)n);
            try {
                for (std::size_t r = 0; r < n; ++r) bv((Eigen::Index)r) = stapes[b][r].eval(p);
            } catch (const EvalError&) {
                return std::nullopt;
            }
            Eigen::VectorXd c = solver.solve(bv);
            if ((M * c - bv).norm() > tol::core * (1.0 + bv.norm()))
                throw std::runtime_error("core: field '" + S[b].name +
                                         "' leaves the module span at " + point_str(p));
            rows.row((Eigen::Index)b) = c.transpose();
        }
        return rows;
    };

    std::vector<Eigen::MatrixXd> blocks;
    auto extend_to = [&](std::size_t want_points) {
        while (blocks.size() < want_points) {
            auto pts = stream.take(1);
            if (auto r = rows_at(pts[0])) blocks.push_back(std::move(*r));
        }
    };

    std::size_t want = 4 * m;
    for (int round = 0;; ++round) {
        extend_to(want);
        Eigen::MatrixXd all((Eigen::Index)(blocks.size() * S.size()), (Eigen::Index)m);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            all.middleRows((Eigen::Index)(i * S.size()), (Eigen::Index)S.size()) = blocks[i];

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(all, Eigen::ComputeThinV);
        std::size_t rank = svd_rank(svd);

        std::size_t half = blocks.size() / 2;
        Eigen::JacobiSVD<Eigen::MatrixXd> sa(all.topRows((Eigen::Index)(half * S.size())));
        Eigen::JacobiSVD<Eigen::MatrixXd> sb(all.bottomRows(
            (Eigen::Index)((blocks.size() - half) * S.size())));
        bool unstable = svd_rank(sa) != svd_rank(sb);
        if (unstable && round < 3) {
            want *= 2;
            continue;
        }

        out.sample_rank = rank;
        out.spectrum = svd.singularValues();
        out.samples_used = blocks.size();
        out.core = rank == 0
                       ? Subspace::zero(m)
                       : Subspace::from_rows(svd.matrixV().leftCols((Eigen::Index)rank)
                                                 .transpose());

        // fresh points must not enlarge the span
        bool certified = true;
        auto fresh = stream.take(std::max<std::size_t>(4, m));
        std::vector<Eigen::MatrixXd> fresh_blocks;
        for (const auto& p : fresh) {
            auto r = rows_at(p);
            if (!r) continue;
            fresh_blocks.push_back(*r);
            for (Eigen::Index row = 0; row < r->rows() && certified; ++row) {
                Eigen::VectorXd v = r->row(row).transpose();
                double nv = v.norm();
                if (nv <= tol::core) continue;
                if (!out.core.contains(Eigen::VectorXd(v / nv), tol::core)) certified = false;
            }
            if (!certified) break;
        }
        if (certified) return out;
        if (round >= 3)
            throw std::runtime_error("core: sampled span kept growing; coefficients may be "
                                     "degenerate on this box");
        for (auto& fb : fresh_blocks) blocks.push_back(std::move(fb));
        want = blocks.size() * 2;
    }
}

std::vector<std::size_t> DistSeriesTrace::dims() const {
    std::vector<std::size_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.dim());
    return out;
}

std::vector<VectorField> span_fields(const RegularSpace& V, const Subspace& sub) {
    std::vector<VectorField> out;
    for (std::size_t r = 0; r < sub.dim(); ++r)
        out.push_back(linear_combination(V.frame.fields, sub.basis().row((Eigen::Index)r),
                                         "Y" + std::to_string(r + 1)));
    return out;
}

namespace {

bool field_is_zero(const VectorField& F, const Domain& dom) {
    for (const auto& c : F.comp) {
        auto zc = is_zero_on(c, dom.vars, dom.lo, dom.hi, tol::zero, dom.nsamples, dom.seed);
        if (!zc.zero) return false;
    }
    return true;
}

struct BracketScan {
    bool abelian = true;
    std::vector<VectorField> nonzero;
};

BracketScan scan_pairs(const std::vector<VectorField>& A, const std::vector<VectorField>& B,
                       bool same, const Domain& dom) {
    BracketScan out;
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = same ? i + 1 : 0; j < B.size(); ++j) {
            auto br = lie_bracket(A[i], B[j], dom.vars);
            if (field_is_zero(br, dom)) continue;
            out.abelian = false;
            out.nonzero.push_back(std::move(br));
        }
    }
    return out;
}

} // namespace

DistSeriesTrace dist_series(DistKind kind, const RegularSpace& V, std::size_t gamma) {
    if (!V.completely_regular)
        throw std::invalid_argument("distributional series need a completely regular module");
    const std::size_t m = V.frame.size();
    if (kind == DistKind::Gamma && gamma >= m)
        throw std::invalid_argument("gamma index out of range");

    DistSeriesTrace tr;
    tr.kind = kind;
    tr.gamma = gamma;

    Subspace gspan;
    if (kind == DistKind::Gamma) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, (Eigen::Index)m);
        g(0, (Eigen::Index)gamma) = 1.0;
        gspan = Subspace::from_rows(g);
    }

    Subspace cur = Subspace::full(m);
    std::vector<VectorField> cur_fields = V.frame.fields;
    auto scan = scan_pairs(cur_fields, cur_fields, true, V.dom);
    tr.entries.push_back(cur);
    tr.abelian.push_back(scan.abelian);
    if (kind == DistKind::Gamma && scan.abelian) {
        tr.end = SeriesEnd::Abelian;
        return tr;
    }

    for (std::size_t step = 0; step <= m + 1; ++step) {
        Subspace next;
        if (kind == DistKind::Central) {
            auto cs = scan_pairs(cur_fields, V.frame.fields, false, V.dom);
            next = core(cs.nonzero, V).core;
        } else {
            next = core(scan.nonzero, V).core;
            if (kind == DistKind::Gamma) next = gspan.join(next);
        }

        std::vector<VectorField> next_fields = span_fields(V, next);
        scan = scan_pairs(next_fields, next_fields, true, V.dom);
        tr.entries.push_back(next);
        tr.abelian.push_back(scan.abelian);

        if (next.dim() == 0) {
            tr.end = SeriesEnd::Zero;
            return tr;
        }
        if (kind == DistKind::Gamma && scan.abelian) {
            tr.end = SeriesEnd::Abelian;
            return tr;
        }
        if (next.same_as(cur)) {
            tr.end = SeriesEnd::Stabilized;
            return tr;
        }
        cur = next;
        cur_fields = std::move(next_fields);
    }
    throw std::logic_error("series did not terminate within the dimension cap");
}

std::optional<int> dist_integrability_order(const DistSeriesTrace& trace) {
    if (trace.kind != DistKind::Gamma)
        throw std::invalid_argument("integrability order needs a gamma-series trace");
    for (std::size_t k = 0; k < trace.entries.size(); ++k)
        if (trace.abelian[k]) return (int)k + 1;
    return std::nullopt;
}

IntersectionCheck module_intersection_check(const Subspace& W1, const Subspace& W2,
                                            const RegularSpace& V) {
    IntersectionCheck out;
    auto W12 = W1.intersect(W2);
    auto f1 = span_fields(V, W1);
    auto f2 = span_fields(V, W2);
    auto f12 = span_fields(V, W12);
    if (f1.empty() || f2.empty()) return out;

    FrameEvaluator e1(f1, V.dom.vars), e2(f2, V.dom.vars);
    std::unique_ptr<FrameEvaluator> e12;
    if (!f12.empty()) e12 = std::make_unique<FrameEvaluator>(f12, V.dom.vars);

    auto test_point = [&](const std::vector<double>& p) -> bool {
        Eigen::MatrixXd M1, M2, M12;
        try {
            M1 = e1.mat(p);
            M2 = e2.mat(p);
            if (e12) M12 = e12->mat(p);
        } catch (const EvalError&) {
            return true;
        }
        Eigen::MatrixXd joint(M1.rows(), M1.cols() + M2.cols());
        joint << M1, -M2;
        Eigen::MatrixXd K = kernel(joint);
        for (Eigen::Index c = 0; c < K.cols(); ++c) {
            Eigen::VectorXd x = M1 * K.col(c).head(M1.cols());
            double nx = x.norm();
            if (nx <= tol::zero) continue;
            x /= nx;
            double res;
            if (!e12) {
                res = 1.0;
            } else {
                Eigen::VectorXd cf = M12.colPivHouseholderQr().solve(x);
                res = (M12 * cf - x).norm();
            }
            out.residual = std::max(out.residual, res);
            if (res > tol::core) {
                out.ok = false;
                out.witness = p;
                out.residual = res;
                return false;
            }
        }
        return true;
    };

    if (!test_point(V.dom.x0)) return out;
    for (int k = 0; k < V.dom.nsamples; ++k)
        if (!test_point(V.dom.sample((std::size_t)k))) return out;
    return out;
}

RescalePair rescaling_order(const RegularSpace& V, std::size_t gamma, const ExprPtr& f) {
    if (gamma >= V.frame.size()) throw std::invalid_argument("gamma index out of range");
    auto zc = is_zero_on(f, V.dom.vars, V.dom.lo, V.dom.hi, tol::zero, V.dom.nsamples,
                         V.dom.seed);
    if (zc.zero) throw std::invalid_argument("rescaling function is identically zero");
    auto ft = compile(f, V.dom.vars);
    auto check_nonzero = [&](const std::vector<double>& p) {
        try {
            if (std::abs(ft.eval(p)) <= 1e-12)
                throw std::invalid_argument("rescaling function vanishes at " + point_str(p));
        } catch (const EvalError&) {
        }
    };
    check_nonzero(V.dom.x0);
    for (int k = 0; k < V.dom.nsamples; ++k) check_nonzero(V.dom.sample((std::size_t)k));

    RescalePair out;
    out.order = dist_integrability_order(dist_series(DistKind::Gamma, V, gamma));

    Frame scaled = V.frame;
    auto& gf = scaled.fields[gamma];
    gf.name = "f*" + gf.name;
    for (auto& c : gf.comp) c = simplify(prod({f, c}));
    auto VS = regularity_check(scaled, V.dom);
    if (!VS.completely_regular)
        throw std::logic_error("rescaling by a nonvanishing function lost regularity");
    out.order_scaled = dist_integrability_order(dist_series(DistKind::Gamma, VS, gamma));

    if (out.order.has_value() != out.order_scaled.has_value())
        throw std::logic_error("rescaling changed integrability outright");
    if (out.order && std::abs(*out.order - *out.order_scaled) > 1)
        throw std::logic_error("rescaled order moved by more than one");
    return out;
}

NormalFormProfile make_profile(const std::vector<Subspace>& entries) {
    if (entries.empty()) throw std::invalid_argument("empty chain");
    std::vector<Subspace> chain = entries;
    if (chain.back().dim() > 0) chain.push_back(Subspace::zero(chain[0].ambient()));
    const std::size_t m = chain[0].ambient();
    if (chain[0].dim() != m) throw std::invalid_argument("chain must start at the full space");

    NormalFormProfile pf;
    pf.r = chain.size() - 1;
    pf.adapted = Eigen::MatrixXd::Zero((Eigen::Index)m, (Eigen::Index)m);
    Eigen::Index cursor = 0;
    for (std::size_t s = 1; s < chain.size(); ++s) {
        const auto& prev = chain[s - 1];
        const auto& nxt = chain[s];
        if (nxt.dim() >= prev.dim())
            throw std::invalid_argument("chain must strictly decrease");
        std::size_t ds = prev.dim() - nxt.dim();
        Subspace acc = nxt;
        std::size_t got = 0;
        for (std::size_t rr = 0; rr < prev.dim() && got < ds; ++rr) {
            Eigen::VectorXd v = prev.basis().row((Eigen::Index)rr).transpose();
            if (acc.contains(Eigen::VectorXd(v / v.norm()))) continue;
            pf.adapted.row(cursor++) = v.transpose();
            acc = acc.join(Subspace::from_rows(v.transpose()));
            ++got;
        }
        if (got != ds) throw std::logic_error("could not complete the stage basis");
        pf.d.push_back(ds);
        pf.w.push_back(pf.w.empty() ? ds : pf.w.back() + ds);
    }
    return pf;
}

} // namespace liq
