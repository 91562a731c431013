#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <liq/driver.hpp>

#include "testsys.hpp"

#include <cmath>
#include <map>
#include <string>

using namespace liq;
using nlohmann::ordered_json;

namespace {

std::string fx(const char* name) { return std::string(FIXTURE_DIR) + "/" + name; }

void check_equivalent(const SystemDef& a, const SystemDef& b) {
    REQUIRE(a.dom.vars == b.dom.vars);
    REQUIRE(a.dom.lo == b.dom.lo);
    REQUIRE(a.dom.hi == b.dom.hi);
    REQUIRE(a.dom.x0 == b.dom.x0);
    REQUIRE(a.gamma == b.gamma);
    REQUIRE(a.frame.size() == b.frame.size());
    for (std::size_t i = 0; i < a.frame.size(); ++i) {
        CHECK(a.frame.fields[i].name == b.frame.fields[i].name);
        for (int k = 1; k <= 8; ++k) {
            auto p = a.dom.sample(k);
            std::map<std::string, double> env;
            for (std::size_t v = 0; v < a.dom.vars.size(); ++v) env[a.dom.vars[v]] = p[v];
            for (std::size_t c = 0; c < a.dom.dim(); ++c) {
                double va = eval(a.frame.fields[i].comp[c], env);
                double vb = eval(b.frame.fields[i].comp[c], env);
                CHECK(std::abs(va - vb) <= 1e-12 * (1.0 + std::abs(va)));
            }
        }
    }
}

ordered_json base_json() {
    return ordered_json::parse(R"({
      "schema": 1,
      "dimension": 2,
      "variables": ["x1", "x2"],
      "box": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
      "x0": [0.0, 0.0],
      "fields": {"G": ["1", "0"], "E2": ["0", "1"]},
      "dynamic": "G"
    })");
}

} // namespace

TEST_CASE("fixture files match the systems assembled in code") {
    check_equivalent(load_system_file(fx("ex_scaling.json")), testsys::expgamma());
    check_equivalent(load_system_file(fx("ex_translation_sin.json")), testsys::ex1("2 + sin(x2)"));
    check_equivalent(load_system_file(fx("ex_translation_quad.json")), testsys::ex1("1 + x1^2"));
    check_equivalent(load_system_file(fx("ex_cascade.json")), testsys::ex2());
    check_equivalent(load_system_file(fx("ex_nilpotent.json")), testsys::nilframe(1));
    check_equivalent(load_system_file(fx("ex_nonterminating.json")), testsys::solvnotint());
    check_equivalent(load_system_file(fx("ex_hierarchy.json")), testsys::sys6());
}

TEST_CASE("the echoed definition reloads to the same system") {
    for (const char* name : {"ex_scaling.json", "ex_cascade.json", "ex_hierarchy.json"}) {
        SystemDef sys = load_system_file(fx(name));
        ordered_json echo = system_json(sys);
        SystemDef back = load_system(echo);
        check_equivalent(sys, back);
        CHECK(dump_json(system_json(back)) == dump_json(echo));
    }
}

TEST_CASE("malformed descriptions are rejected") {
    CHECK_NOTHROW(load_system(base_json()));

    auto j = base_json();
    j.erase("schema");
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["schema"] = 2;
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["dimension"] = 3;
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["variables"] = {"x1", "x1"};
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["box"]["lo"] = {-1.0};
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["x0"] = {1.0, 0.0};
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["fields"]["G"][0] = "x1 +";
    CHECK_THROWS_WITH_AS(load_system(j), doctest::Contains("does not parse"), InputError);

    j = base_json();
    j["fields"]["G"][0] = "x9";
    CHECK_THROWS_WITH_AS(load_system(j), doctest::Contains("unknown symbol"), InputError);

    j = base_json();
    j["dynamic"] = "H";
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["mode"] = "fast";
    CHECK_THROWS_AS(load_system(j), InputError);

    j = base_json();
    j["typo"] = 1;
    CHECK_THROWS_WITH_AS(load_system(j), doctest::Contains("unknown key"), InputError);

    j = base_json();
    j["parameters"] = ordered_json{{"x1", 2.0}};
    CHECK_THROWS_AS(load_system(j), InputError);

    CHECK_THROWS_AS(load_system_file(fx("no_such_file.json")), InputError);
}

TEST_CASE("parameters substitute as constants") {
    auto j = base_json();
    j["parameters"] = ordered_json{{"a", 0.5}, {"b", 2.0}};
    j["fields"]["G"][0] = "a*x1 + b";
    SystemDef sys = load_system(j);
    std::map<std::string, double> env{{"x1", 0.3}, {"x2", 0.0}};
    CHECK(eval(sys.frame.fields[0].comp[0], env) == doctest::Approx(2.15).epsilon(1e-15));
    CHECK(free_vars(sys.frame.fields[0].comp[0]) == std::vector<std::string>{"x1"});
}

TEST_CASE("check classifies the fixtures and sets the exit status") {
    Outcome scaling = run_check(load_system_file(fx("ex_scaling.json")));
    CHECK(scaling.code == exit_code::integrable);
    CHECK(scaling.report["integrable"] == "yes");
    CHECK(scaling.report["order"] == 1);
    CHECK(scaling.report["verdicts"]["closure"]["value"] == "true");
    CHECK(scaling.report["attempts"] == std::vector<std::string>{"lie"});

    Outcome nil = run_check(load_system_file(fx("ex_nilpotent.json")));
    CHECK(nil.code == exit_code::integrable);
    CHECK(nil.report["order"] == 2);
    CHECK(nil.report["lie"]["solvable"] == true);
    CHECK(nil.report["lie"]["nilpotent"] == true);
    CHECK(nil.report["lie"]["gamma"]["abelian_index"] == 1);

    Outcome stuck = run_check(load_system_file(fx("ex_nonterminating.json")));
    CHECK(stuck.code == exit_code::not_integrable);
    CHECK(stuck.report["integrable"] == "no");
    CHECK(stuck.report["lie"]["gamma"]["end"] == "stabilized");
    CHECK(stuck.report["order"].is_null());

    Outcome cascade = run_check(load_system_file(fx("ex_cascade.json")));
    CHECK(cascade.code == exit_code::integrable);
    CHECK(cascade.report["order"] == 3);
    CHECK(cascade.report["attempts"] == std::vector<std::string>{"lie", "distributional"});
    CHECK(cascade.report["lie"]["closure"]["closed"] == false);
    CHECK(cascade.report["verdicts"]["regular"]["value"] == "true");
    CHECK(cascade.report["distributional"]["gamma"]["dims"] == std::vector<std::size_t>{3, 2, 1});

    SystemDef forced = load_system_file(fx("ex_cascade.json"));
    forced.mode = "lie";
    Outcome indet = run_check(forced);
    CHECK(indet.code == exit_code::indeterminate);
    CHECK(indet.report["integrable"] == "indeterminate");

    Outcome hier = run_check(load_system_file(fx("ex_hierarchy.json")));
    CHECK(hier.code == exit_code::integrable);
    CHECK(hier.report["order"] == 2);
    CHECK(hier.report["verdicts"]["frame"]["value"] == "false");
    CHECK(hier.report["lie"]["nilpotent"] == true);
}

TEST_CASE("reports are byte deterministic for a fixed seed") {
    Outcome a = run_check(load_system_file(fx("ex_cascade.json")));
    Outcome b = run_check(load_system_file(fx("ex_cascade.json")));
    CHECK(dump_json(a.report) == dump_json(b.report));

    SystemDef sys = load_system_file(fx("ex_scaling.json"));
    sys.dom.seed = 7;
    Outcome c = run_check(sys);
    CHECK(c.report["seed"] == 7);
}

TEST_CASE("rectify reports the chart diagnostics") {
    Outcome nil = run_rectify(load_system_file(fx("ex_nilpotent.json")));
    CHECK(nil.code == exit_code::integrable);
    REQUIRE(nil.report.contains("chart"));
    const auto& c = nil.report["chart"];
    CHECK(c["ok"] == true);
    CHECK(c["stage_dims"] == std::vector<std::size_t>{2, 2});
    CHECK(c["q0_norm"]["value"].get<double>() < 1e-8);
    CHECK(c["xi"] == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    CHECK(c["stages"][0]["covectors"] == 2);
    for (const auto& r : c["stages"][0]["closedness"]) CHECK(r.get<double>() < 1e-7);
    CHECK(c["jacobian_condition"].get<double>() < 100.0);

    Outcome stuck = run_rectify(load_system_file(fx("ex_nonterminating.json")));
    CHECK(stuck.code == exit_code::not_integrable);
    CHECK(!stuck.report.contains("chart"));

    Outcome hier = run_rectify(load_system_file(fx("ex_hierarchy.json")));
    CHECK(hier.code == exit_code::chart_failure);
    CHECK(hier.report["chart"]["ok"] == false);
    CHECK(!hier.report["chart"]["error"].get<std::string>().empty());
}

TEST_CASE("flow reaches the closed form and compare stays within tolerance") {
    SystemDef sys = load_system_file(fx("ex_scaling.json"));
    FlowRequest req;
    Outcome flow = run_flow(sys, req);
    CHECK(flow.code == exit_code::integrable);
    const auto& pts = flow.report["flow"]["points"];
    REQUIRE(pts.size() == 11);
    for (const auto& p : pts) {
        double t = p["t"].get<double>();
        double x1 = p["x"][0].get<double>();
        CHECK(p["ok"] == true);
        CHECK(x1 == doctest::Approx(std::exp(t)).epsilon(1e-8));
    }

    Outcome cmp = run_compare(sys, req);
    CHECK(cmp.code == exit_code::integrable);
    CHECK(cmp.report["comparison"]["ok"] == true);
    CHECK(cmp.report["comparison"]["max_deviation"].get<double>() < tol::flow);
    CHECK(cmp.report["comparison"]["compared"] == 11);

    FlowRequest strict = req;
    strict.tol = 1e-16;
    Outcome tight = run_compare(sys, strict);
    CHECK(tight.code == exit_code::indeterminate);
    CHECK(tight.report["comparison"]["ok"] == false);
}

TEST_CASE("flow requests are validated") {
    SystemDef sys = load_system_file(fx("ex_scaling.json"));
    FlowRequest req;
    req.x0 = {1.0};
    CHECK_THROWS_AS(run_flow(sys, req), InputError);
    req.x0 = {9.0, 0.0};
    CHECK_THROWS_AS(run_flow(sys, req), InputError);
    req.x0.clear();
    req.steps = 0;
    CHECK_THROWS_AS(run_flow(sys, req), InputError);
    req.steps = 11;
    req.t1 = -0.5;
    CHECK_THROWS_AS(run_flow(sys, req), InputError);
    req.t0 = -1.0;
    CHECK_THROWS_AS(run_compare(sys, req), InputError);
}

TEST_CASE("flow exit status flags a start that produced nothing") {
    FlowResult fr;
    fr.truncated = true;
    CHECK(flow_exit_code(fr) == exit_code::no_flow);
    FlowPoint p;
    p.ok = false;
    fr.points.push_back(p);
    CHECK(flow_exit_code(fr) == exit_code::no_flow);
    fr.points[0].ok = true;
    CHECK(flow_exit_code(fr) == exit_code::integrable);
}

TEST_CASE("error reports carry the message and the input exit status") {
    ordered_json r = error_report("check", "cannot open \"nope.json\"");
    CHECK(r["exit"] == exit_code::input_error);
    CHECK(r["error"]["message"] == "cannot open \"nope.json\"");
    CHECK(human_summary(r).find("input error") != std::string::npos);
}
