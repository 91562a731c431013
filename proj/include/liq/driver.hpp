#pragma once

#include <liq/quad.hpp>
#include <liq/system_io.hpp>
#include <liq/tolerances.hpp>

#include <string>
#include <vector>

namespace liq {

namespace exit_code {
inline constexpr int integrable = 0;
inline constexpr int input_error = 1;
inline constexpr int indeterminate = 2;
inline constexpr int not_integrable = 3;
inline constexpr int chart_failure = 4;
inline constexpr int no_flow = 5;
} // namespace exit_code

// report plus the process status derived from its verdicts
struct Outcome {
    nlohmann::ordered_json report;
    int code = 0;
};

struct FlowRequest {
    std::vector<double> x0;  // empty means the reference point
    double t0 = 0.0;
    double t1 = 0.5;
    int steps = 11;
    double tol = tol::flow;  // compare only
};

/**
 * Classification pipeline. Always starts with the pointwise frame check,
 * then brackets: a closed algebra runs the Lie series, mode "auto" falls
 * through to the module series when the brackets leave the span (both
 * attempts stay in the report), mode "distributional" skips straight
 * there. Exit 0 when the dynamic series terminates, 3 when it stabilizes,
 * 2 when no certificate either way.
 */
Outcome run_check(const SystemDef& sys);

// check, then the chart over the certifying chain; diagnostics on
// success, exit 4 with the failing stage in the message otherwise
Outcome run_rectify(const SystemDef& sys);

// chart flow on a uniform grid; exit 5 when not even the first grid point
// comes out
Outcome run_flow(const SystemDef& sys, const FlowRequest& req);

// chart flow against the Runge-Kutta reference on the same grid; exit 0
// iff every point compares below req.tol
Outcome run_compare(const SystemDef& sys, const FlowRequest& req);

int flow_exit_code(const FlowResult& fr);

nlohmann::ordered_json error_report(const std::string& command, const std::string& message);

// few-line digest of a report, for stderr
std::string human_summary(const nlohmann::ordered_json& report);

} // namespace liq
