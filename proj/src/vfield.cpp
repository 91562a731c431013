#include <liq/vfield.hpp>
#include <liq/tolerances.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace liq {

bool Domain::inside(const std::vector<double>& p, double slack) const {
    if (p.size() != dim()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
}

void Domain::validate() const {
    const std::size_t n = dim();
    if (n == 0) throw std::invalid_argument("empty coordinate list");
    if (lo.size() != n || hi.size() != n || x0.size() != n)
        throw std::invalid_argument("box and reference point must match the dimension");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lo[i] < hi[i]))
            throw std::invalid_argument("degenerate interval for coordinate '" + vars[i] + "'");
        if (!(lo[i] < x0[i] && x0[i] < hi[i]))
            throw std::invalid_argument("reference point not strictly inside the box for '" +
                                        vars[i] + "'");
    }
    if (nsamples < 1) throw std::invalid_argument("sample count must be positive");
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y,
                        const std::vector<std::string>& vars) {
    const std::size_t n = vars.size();
    if (X.comp.size() != n || Y.comp.size() != n)
        throw std::invalid_argument("bracket of fields with mismatched dimension");
    VectorField out;
    out.name = "[" + X.name + "," + Y.name + "]";
    out.comp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<ExprPtr> terms;
        for (std::size_t i = 0; i < n; ++i) {
            ExprPtr dYk = diff(Y.comp[k], vars[i]);
            ExprPtr dXk = diff(X.comp[k], vars[i]);
            if (!is_literal_zero(dYk)) terms.push_back(prod({X.comp[i], dYk}));
            if (!is_literal_zero(dXk)) terms.push_back(neg(prod({Y.comp[i], dXk})));
        }
        out.comp[k] = simplify(sum(std::move(terms)));
    }
    return out;
}

ExprPtr apply_field(const VectorField& X, const ExprPtr& f,
                    const std::vector<std::string>& vars) {
    std::vector<ExprPtr> terms;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        ExprPtr df = diff(f, vars[i]);
        if (!is_literal_zero(df)) terms.push_back(prod({X.comp[i], df}));
    }
    return simplify(sum(std::move(terms)));
}

FrameEvaluator::FrameEvaluator(const std::vector<VectorField>& fields,
                               const std::vector<std::string>& vars)
    : nvars_(vars.size()) {
    for (const VectorField& f : fields) {
        if (f.comp.size() != nvars_)
            throw std::invalid_argument("field '" + f.name + "' has wrong component count");
        names_.push_back(f.name);
        std::vector<Tape> row;
        row.reserve(nvars_);
        for (const ExprPtr& c : f.comp) row.push_back(compile(c, vars));
        tapes_.push_back(std::move(row));
    }
}

Eigen::MatrixXd FrameEvaluator::mat(const std::vector<double>& p) const {
    Eigen::MatrixXd M(nvars_, tapes_.size());
    for (std::size_t j = 0; j < tapes_.size(); ++j)
        for (std::size_t i = 0; i < nvars_; ++i) {
            try {
                M(i, j) = tapes_[j][i].eval(p.data());
            } catch (const EvalError& e) {
                throw EvalError("field '" + names_[j] + "' component " + std::to_string(i + 1) +
                                ": " + e.what());
            }
        }
    return M;
}

Eigen::VectorXd FrameEvaluator::field(std::size_t j, const std::vector<double>& p) const {
    Eigen::VectorXd v(nvars_);
    for (std::size_t i = 0; i < nvars_; ++i) {
        try {
            v(i) = tapes_[j][i].eval(p.data());
        } catch (const EvalError& e) {
            throw EvalError("field '" + names_[j] + "' component " + std::to_string(i + 1) +
                            ": " + e.what());
        }
    }
    return v;
}

FrameCheck verify_frame(const Frame& F, const Domain& dom) {
    FrameCheck out;
    FrameEvaluator ev(F.fields, dom.vars);
    out.min_ratio = std::numeric_limits<double>::infinity();
    bool any = false;

    auto test_point = [&](const std::vector<double>& p) -> bool {
        Eigen::MatrixXd M;
        try {
            M = ev.mat(p);
        } catch (const EvalError&) {
            ++out.skipped;
            return true;
        }
        any = true;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const auto& s = svd.singularValues();
        double ratio = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
        if (ratio < out.min_ratio) {
            out.min_ratio = ratio;
            out.witness = p;
        }
        return ratio > tol::sigma;
    };

    bool ok = test_point(dom.x0);
    for (int k = 0; k < dom.nsamples; ++k) ok = test_point(dom.sample(k)) && ok;

    if (!any) {
        out.verdict = Verdict::Indeterminate;
        out.min_ratio = 0.0;
        return out;
    }
    out.verdict = ok ? Verdict::True : Verdict::False;
    if (ok) out.witness.clear();
    return out;
}

VectorField linear_combination(const std::vector<VectorField>& fields,
                               const Eigen::RowVectorXd& coeffs, const std::string& name) {
    if (fields.empty() || (std::size_t)coeffs.size() != fields.size())
        throw std::invalid_argument("coefficient count must match the field count");
    VectorField out;
    out.name = name;
    const std::size_t d = fields[0].comp.size();
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<ExprPtr> terms;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double cj = coeffs((Eigen::Index)j);
            if (std::abs(cj) < 1e-13) continue;
            terms.push_back(prod({num_auto(cj), fields[j].comp[i]}));
        }
        out.comp.push_back(simplify(sum(terms)));
    }
    return out;
}

} // namespace liq
