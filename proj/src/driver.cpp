#include <liq/driver.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>

#ifndef LIQ_VERSION
#define LIQ_VERSION "0.0.0"
#endif

namespace liq {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* verdict_str(Verdict v) {
    switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    default: return "indeterminate";
    }
}

const char* end_str(SeriesEnd e) {
    switch (e) {
    case SeriesEnd::Zero: return "zero";
    case SeriesEnd::Abelian: return "abelian";
    default: return "stabilized";
    }
}

ordered_json tolval(double value, double tolerance) {
    ordered_json j;
    j["value"] = value;
    j["tolerance"] = tolerance;
    return j;
}

ordered_json evec_json(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <class Trace>
ordered_json trace_json(const Trace& t, const char* kind) {
    ordered_json j;
    j["kind"] = kind;
    j["dims"] = t.dims();
    ordered_json ab = ordered_json::array();
    for (bool b : t.abelian) ab.push_back(b);
    j["abelian"] = ab;
    j["end"] = end_str(t.end);
    return j;
}

template <class Trace>
ordered_json gamma_json(const Trace& t, const std::optional<int>& order) {
    ordered_json j = trace_json(t, "gamma");
    j["abelian_index"] = order ? ordered_json(*order - 1) : ordered_json(nullptr);
    j["order"] = order ? ordered_json(*order) : ordered_json(nullptr);
    return j;
}

ordered_json report_header(const SystemDef& sys, const char* command) {
    ordered_json r;
    r["tool"] = "liq";
    r["version"] = LIQ_VERSION;
    r["command"] = command;
    r["seed"] = sys.dom.seed;
    r["samples"] = sys.dom.nsamples;
    r["mode"] = sys.mode;
    r["system"] = system_json(sys);
    return r;
}

// intermediate objects the chart commands reuse after check
struct PipelineState {
    std::optional<SeriesTrace> lie_gamma;
    std::optional<DistSeriesTrace> dist_gamma;
    bool used_dist = false;
    std::optional<int> order;
    std::string integrable = "indeterminate";
};

Outcome check_impl(const SystemDef& sys, PipelineState& st) {
    Outcome out;
    ordered_json& r = out.report;
    r = report_header(sys, "check");

    FrameCheck fc = verify_frame(sys.frame, sys.dom);
    ordered_json jframe;
    jframe["verdict"] = verdict_str(fc.verdict);
    jframe["min_ratio"] = fc.min_ratio;
    jframe["tolerance"] = tol::sigma;
    jframe["skipped"] = fc.skipped;
    if (fc.verdict == Verdict::False) jframe["witness"] = fc.witness;
    r["frame"] = jframe;
    r["attempts"] = ordered_json::array();

    std::vector<std::string> attempts;
    std::string note;
    Verdict closure_v = Verdict::Indeterminate;
    Verdict solvable_v = Verdict::Indeterminate;
    Verdict nilpotent_v = Verdict::Indeterminate;
    Verdict regular_v = Verdict::Indeterminate;

    bool try_lie = sys.mode == "lie" || sys.mode == "auto";
    bool try_dist = sys.mode == "distributional";

    if (try_lie) {
        attempts.push_back("lie");
        StructureConstants sc = structure_constants(sys.frame, sys.dom);
        ordered_json jl;
        ordered_json jc;
        jc["closed"] = sc.closed;
        jc["residual"] = sc.residual;
        jc["tolerance"] = tol::sc;
        if (!sc.closed) {
            jc["witness_pair"] = ordered_json::array({sc.wi, sc.wj});
            jc["variance"] = sc.variance;
        }
        jl["closure"] = jc;
        closure_v = sc.closed ? Verdict::True : Verdict::False;
        if (sc.closed) {
            jl["jacobi_defect"] = tolval(sc.jacobi_defect(), tol::jacobi);
            ordered_json tensor = ordered_json::array();
            for (std::size_t k = 0; k < sc.n; ++k) {
                ordered_json mk = ordered_json::array();
                for (std::size_t i = 0; i < sc.n; ++i) {
                    ordered_json row = ordered_json::array();
                    for (std::size_t jj = 0; jj < sc.n; ++jj) row.push_back(sc.c[k](i, jj));
                    mk.push_back(row);
                }
                tensor.push_back(mk);
            }
            jl["structure_constants"] = tensor;
            jl["derived"] = trace_json(derived_series(sc), "derived");
            jl["central"] = trace_json(central_series(sc), "central");
            SeriesTrace gam = gamma_series(sc, sys.gamma);
            auto ord = lie_integrability_order(gam);
            jl["gamma"] = gamma_json(gam, ord);
            st.lie_gamma = std::move(gam);
            bool sv = is_solvable(sc);
            bool np = is_nilpotent(sc);
            jl["solvable"] = sv;
            jl["nilpotent"] = np;
            solvable_v = sv ? Verdict::True : Verdict::False;
            nilpotent_v = np ? Verdict::True : Verdict::False;
            if (ord) {
                st.order = ord;
                st.integrable = "yes";
            } else {
                st.integrable = "no";
                note = "the dynamic series stabilized without an abelian entry";
            }
        } else if (sys.mode == "auto") {
            try_dist = true;
            note = "brackets leave the span; classified through the module series";
        } else {
            note = "brackets leave the span; no certificate in lie mode";
        }
        r["lie"] = jl;
    }

    if (try_dist) {
        attempts.push_back("distributional");
        RegularSpace V = regularity_check(sys.frame, sys.dom);
        ordered_json jd;
        jd["regular"] = V.regular;
        jd["completely_regular"] = V.completely_regular;
        jd["span_dim"] = V.span_dim;
        jd["rank"] = V.rank;
        jd["tolerance"] = tol::pivot;
        jd["skipped"] = V.skipped;
        regular_v = V.regular ? Verdict::True : Verdict::False;
        if (!V.regular) {
            st.integrable = "indeterminate";
            note = "module rank is not constant on the box; the series is undefined";
        } else {
            jd["derived"] = trace_json(dist_series(DistKind::Derived, V), "derived");
            jd["central"] = trace_json(dist_series(DistKind::Central, V), "central");
            DistSeriesTrace gam = dist_series(DistKind::Gamma, V, sys.gamma);
            auto ord = dist_integrability_order(gam);
            jd["gamma"] = gamma_json(gam, ord);
            st.dist_gamma = std::move(gam);
            st.used_dist = true;
            if (ord) {
                st.order = ord;
                st.integrable = "yes";
            } else {
                st.integrable = "no";
                note = "the dynamic series stabilized without an abelian entry";
            }
        }
        r["distributional"] = jd;
    }

    r["attempts"] = attempts;
    ordered_json verdicts;
    ordered_json vf;
    vf["value"] = verdict_str(fc.verdict);
    vf["tolerance"] = tol::sigma;
    verdicts["frame"] = vf;
    ordered_json vc;
    vc["value"] = verdict_str(closure_v);
    vc["tolerance"] = tol::sc;
    verdicts["closure"] = vc;
    ordered_json vs;
    vs["value"] = verdict_str(solvable_v);
    vs["tolerance"] = tol::sc;
    verdicts["solvable"] = vs;
    ordered_json vn;
    vn["value"] = verdict_str(nilpotent_v);
    vn["tolerance"] = tol::sc;
    verdicts["nilpotent"] = vn;
    ordered_json vr;
    vr["value"] = verdict_str(regular_v);
    vr["tolerance"] = tol::pivot;
    verdicts["regular"] = vr;
    r["verdicts"] = verdicts;
    r["integrable"] = st.integrable;
    r["order"] = st.order ? ordered_json(*st.order) : ordered_json(nullptr);
    if (!note.empty()) r["note"] = note;

    if (st.integrable == "yes")
        out.code = exit_code::integrable;
    else if (st.integrable == "no")
        out.code = exit_code::not_integrable;
    else
        out.code = exit_code::indeterminate;
    r["exit"] = out.code;
    return out;
}

ordered_json chart_json(const QuadratureChart& ch, const SystemDef& sys) {
    ordered_json j;
    j["ok"] = true;
    j["stage_dims"] = ch.profile.d;
    j["cumulative_dims"] = ch.profile.w;
    ordered_json stages = ordered_json::array();
    for (std::size_t s = 0; s < ch.stages.size(); ++s) {
        const ChartStage& cs = ch.stages[s];
        ordered_json js;
        js["index"] = s + 1;
        js["covectors"] = cs.zetas.size();
        if (s == 0) {
            ordered_json res = ordered_json::array();
            for (const OneForm& f : cs.forms)
                res.push_back(closedness_check(f, sys.frame.fields, sys.dom).worst);
            js["closedness"] = res;
            js["closedness_tolerance"] = tol::closed;
        } else {
            // later forms are closed only along the leaves of the earlier
            // stage functions, so no ambient residual is reported
            js["closedness"] = nullptr;
        }
        stages.push_back(js);
    }
    j["stages"] = stages;
    j["q0_norm"] = tolval(ch.q0_norm, 1e-8);
    Eigen::MatrixXd J = ch.jrows(sys.dom.x0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    j["jacobian_condition"] = sv(0) / sv(sv.size() - 1);
    j["min_frame_ratio"] = ch.jac_min_ratio;
    j["xi"] = evec_json(ch.xi_gamma);
    j["xi_residual"] = ch.gq_worst;
    return j;
}

ordered_json flow_json(const FlowResult& fr) {
    ordered_json j;
    j["method"] = fr.method;
    j["start"] = fr.start;
    j["times"] = fr.times;
    j["truncated"] = fr.truncated;
    if (!fr.note.empty()) j["note"] = fr.note;
    ordered_json pts = ordered_json::array();
    for (std::size_t i = 0; i < fr.points.size(); ++i) {
        const FlowPoint& p = fr.points[i];
        ordered_json jp;
        jp["t"] = fr.times[i];
        jp["x"] = p.x;
        jp["ok"] = p.ok;
        jp["exited"] = p.exited;
        jp["iters"] = p.iters;
        jp["residual"] = p.residual;
        pts.push_back(jp);
    }
    j["points"] = pts;
    return j;
}

QuadratureChart certified_chart(const SystemDef& sys, const PipelineState& st) {
    if (st.used_dist) return build_chart(*st.dist_gamma, sys);
    return build_chart(*st.lie_gamma, sys);
}

std::vector<double> flow_grid(const FlowRequest& req) {
    if (req.steps < 1) throw InputError("steps must be at least 1");
    if (req.t1 < req.t0) throw InputError("t1 must not precede t0");
    std::vector<double> grid;
    if (req.steps == 1) {
        grid.push_back(req.t0);
        return grid;
    }
    for (int i = 0; i < req.steps; ++i)
        grid.push_back(req.t0 + (req.t1 - req.t0) * i / (req.steps - 1));
    return grid;
}

std::vector<double> flow_start(const SystemDef& sys, const FlowRequest& req) {
    std::vector<double> x0 = req.x0.empty() ? sys.dom.x0 : req.x0;
    if (x0.size() != sys.dom.dim())
        throw InputError("x0 must have " + std::to_string(sys.dom.dim()) + " components");
    if (!sys.dom.inside(x0)) throw InputError("the start point is outside the domain box");
    return x0;
}

} // namespace

Outcome run_check(const SystemDef& sys) {
    PipelineState st;
    return check_impl(sys, st);
}

Outcome run_rectify(const SystemDef& sys) {
    PipelineState st;
    Outcome out = check_impl(sys, st);
    out.report["command"] = "rectify";
    if (out.code != exit_code::integrable) return out;
    try {
        QuadratureChart chart = certified_chart(sys, st);
        out.report["chart"] = chart_json(chart, sys);
    } catch (const std::exception& e) {
        ordered_json jc;
        jc["ok"] = false;
        jc["error"] = e.what();
        out.report["chart"] = jc;
        out.code = exit_code::chart_failure;
    }
    out.report["exit"] = out.code;
    return out;
}

Outcome run_flow(const SystemDef& sys, const FlowRequest& req) {
    PipelineState st;
    Outcome out = check_impl(sys, st);
    out.report["command"] = "flow";
    if (out.code != exit_code::integrable) return out;
    std::vector<double> x0 = flow_start(sys, req);
    std::vector<double> grid = flow_grid(req);
    try {
        QuadratureChart chart = certified_chart(sys, st);
        out.report["chart"] = chart_json(chart, sys);
        FlowResult fr = chart_flow(chart, x0, grid);
        out.report["flow"] = flow_json(fr);
        out.code = flow_exit_code(fr);
    } catch (const std::exception& e) {
        ordered_json jc;
        jc["ok"] = false;
        jc["error"] = e.what();
        out.report["chart"] = jc;
        out.code = exit_code::chart_failure;
    }
    out.report["exit"] = out.code;
    return out;
}

Outcome run_compare(const SystemDef& sys, const FlowRequest& req) {
    PipelineState st;
    Outcome out = check_impl(sys, st);
    out.report["command"] = "compare";
    if (out.code != exit_code::integrable) return out;
    std::vector<double> x0 = flow_start(sys, req);
    if (req.t0 < 0.0) throw InputError("the reference integrator needs t0 >= 0");
    std::vector<double> grid = flow_grid(req);
    try {
        QuadratureChart chart = certified_chart(sys, st);
        out.report["chart"] = chart_json(chart, sys);
        FlowResult fa = chart_flow(chart, x0, grid);
        out.report["flow"] = flow_json(fa);
        int fcode = flow_exit_code(fa);
        if (fcode != 0) {
            out.code = fcode;
            out.report["exit"] = out.code;
            return out;
        }
        FlowResult fb = rk_oracle(sys.gamma_field(), sys.dom, x0, grid);
        out.report["oracle"] = flow_json(fb);
        FlowComparison cmp = compare_flow(fa, fb);
        bool ok = cmp.compared == grid.size() && cmp.max_dev < req.tol;
        ordered_json jc;
        jc["ok"] = ok;
        jc["max_deviation"] = cmp.max_dev;
        jc["tolerance"] = req.tol;
        jc["compared"] = cmp.compared;
        jc["points"] = grid.size();
        jc["worst_index"] = cmp.worst_index;
        jc["worst_component"] = cmp.worst_comp;
        jc["per_time"] = cmp.per_time;
        out.report["comparison"] = jc;
        out.code = ok ? exit_code::integrable : exit_code::indeterminate;
    } catch (const std::exception& e) {
        ordered_json jc;
        jc["ok"] = false;
        jc["error"] = e.what();
        out.report["chart"] = jc;
        out.code = exit_code::chart_failure;
    }
    out.report["exit"] = out.code;
    return out;
}

int flow_exit_code(const FlowResult& fr) {
    if (fr.points.empty() || !fr.points.front().ok) return exit_code::no_flow;
    return exit_code::integrable;
}

nlohmann::ordered_json error_report(const std::string& command, const std::string& message) {
    ordered_json r;
    r["tool"] = "liq";
    r["version"] = LIQ_VERSION;
    r["command"] = command;
    ordered_json e;
    e["message"] = message;
    r["error"] = e;
    r["exit"] = exit_code::input_error;
    return r;
}

std::string human_summary(const ordered_json& r) {
    std::ostringstream os;
    os << "liq " << r.value("command", "?") << ": ";
    if (r.contains("error")) {
        os << "input error: " << r["error"]["message"].get<std::string>() << "\n";
        return os.str();
    }
    os << "integrable " << r["integrable"].get<std::string>();
    if (r.contains("order") && !r["order"].is_null()) os << ", order " << r["order"].get<int>();
    const ordered_json* g = nullptr;
    if (r.contains("distributional") && r["distributional"].contains("gamma"))
        g = &r["distributional"]["gamma"];
    else if (r.contains("lie") && r["lie"].contains("gamma"))
        g = &r["lie"]["gamma"];
    if (g) {
        os << "; series dims [";
        bool first = true;
        for (const auto& d : (*g)["dims"]) {
            if (!first) os << ", ";
            first = false;
            os << d.get<std::size_t>();
        }
        os << "] ends " << (*g)["end"].get<std::string>();
    }
    os << "\n";
    if (r.contains("note")) os << "note: " << r["note"].get<std::string>() << "\n";
    if (r.contains("chart")) {
        const auto& c = r["chart"];
        if (c.value("ok", false)) {
            os << "chart: stage dims [";
            bool first = true;
            for (const auto& d : c["stage_dims"]) {
                if (!first) os << ", ";
                first = false;
                os << d.get<std::size_t>();
            }
            os << "], |Q(x0)| = " << c["q0_norm"]["value"].get<double>()
               << ", condition " << c["jacobian_condition"].get<double>() << "\n";
        } else {
            os << "chart failed: " << c["error"].get<std::string>() << "\n";
        }
    }
    if (r.contains("flow")) {
        const auto& f = r["flow"];
        os << "flow: " << f["points"].size() << " of " << f["times"].size() << " points";
        if (f.value("truncated", false)) os << " (truncated: " << f.value("note", "") << ")";
        os << "\n";
    }
    if (r.contains("comparison")) {
        const auto& c = r["comparison"];
        os << "compare: max deviation " << c["max_deviation"].get<double>() << " against "
           << c["tolerance"].get<double>() << (c["ok"].get<bool>() ? " (ok)" : " (FAILED)")
           << "\n";
    }
    return os.str();
}

} // namespace liq
