#include <liq/driver.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<double> parse_point(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw liq::InputError("x0 component \"" + tok + "\" is not a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"integrability certificates and rectifying flows for frame-embedded dynamics"};
    app.require_subcommand(1);

    std::string file;
    std::string mode;
    unsigned seed = 0;
    int samples = 64;
    std::string x0s;
    double t0 = 0.0;
    double t1 = 0.5;
    int steps = 11;
    double tolf = liq::tol::flow;
    bool quiet = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("file", file, "system description (JSON)")->required();
        c->add_option("--mode", mode, "lie, dist, or auto (overrides the file)");
        c->add_option("--seed", seed, "sampling seed (default 0)");
        c->add_option("--samples", samples, "sample count for the numeric checks");
        c->add_flag("--quiet,-q", quiet, "suppress the stderr summary");
    };
    auto add_grid = [&](CLI::App* c) {
        c->add_option("--x0", x0s, "comma-separated start point (defaults to the reference point)");
        c->add_option("--t0", t0, "first grid time");
        c->add_option("--t1", t1, "last grid time");
        c->add_option("--steps", steps, "number of grid points");
    };

    CLI::App* ccheck = app.add_subcommand("check", "classify the system and certify integrability");
    add_common(ccheck);
    CLI::App* crect =
        app.add_subcommand("rectify", "build the rectifying chart and report its diagnostics");
    add_common(crect);
    CLI::App* cflow = app.add_subcommand("flow", "reconstruct the dynamic flow through the chart");
    add_common(cflow);
    add_grid(cflow);
    CLI::App* ccomp =
        app.add_subcommand("compare", "check the reconstructed flow against a Runge-Kutta reference");
    add_common(ccomp);
    add_grid(ccomp);
    ccomp->add_option("--tol", tolf, "acceptance threshold for the relative deviation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        liq::Outcome out{liq::error_report("", e.what()), liq::exit_code::input_error};
        std::cout << liq::dump_json(out.report);
        std::cerr << liq::human_summary(out.report);
        return out.code;
    }

    std::string cmd = app.get_subcommands().front()->get_name();
    auto tick = std::chrono::steady_clock::now();
    liq::Outcome out;
    try {
        liq::SystemDef sys = liq::load_system_file(file);
        if (!mode.empty()) {
            std::string m = mode == "dist" ? "distributional" : mode;
            if (m != "lie" && m != "distributional" && m != "auto")
                throw liq::InputError("mode must be lie, dist, or auto");
            sys.mode = m;
        }
        if (samples < 8) throw liq::InputError("samples must be at least 8");
        sys.dom.seed = seed;
        sys.dom.nsamples = samples;

        if (cmd == "check") {
            out = liq::run_check(sys);
        } else if (cmd == "rectify") {
            out = liq::run_rectify(sys);
        } else {
            liq::FlowRequest req;
            if (!x0s.empty()) req.x0 = parse_point(x0s);
            req.t0 = t0;
            req.t1 = t1;
            req.steps = steps;
            req.tol = tolf;
            out = cmd == "flow" ? liq::run_flow(sys, req) : liq::run_compare(sys, req);
        }
    } catch (const liq::InputError& e) {
        out = {liq::error_report(cmd, e.what()), liq::exit_code::input_error};
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick)
                    .count();

    std::cout << liq::dump_json(out.report);
    if (!quiet) {
        std::cerr << liq::human_summary(out.report);
        std::fprintf(stderr, "completed in %.1f ms; exit %d\n", ms, out.code);
    }
    return out.code;
}
