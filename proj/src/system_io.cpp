#include <liq/system_io.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <utility>

namespace liq {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw InputError(msg); }

const ordered_json& want(const ordered_json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing key \"") + key + "\"");
    return *it;
}

std::vector<double> number_list(const ordered_json& j, const std::string& what, std::size_t n) {
    if (!j.is_array() || j.size() != n)
        fail(what + " must be an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(what + " must contain numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

ExprPtr subst(const ExprPtr& e, const std::map<std::string, double>& params) {
    switch (e->kind) {
    case Kind::Var: {
        auto it = params.find(e->name);
        return it == params.end() ? e : num_auto(it->second);
    }
    case Kind::Sum:
    case Kind::Product: {
        std::vector<ExprPtr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(subst(k, params));
        return e->kind == Kind::Sum ? sum(std::move(kids)) : prod(std::move(kids));
    }
    case Kind::Power:
        return pow(subst(e->kids[0], params), e->rat);
    case Kind::Func:
        return func(e->fid, subst(e->kids[0], params));
    default:
        return e;
    }
}

void dump_rec(std::string& out, const ordered_json& j, int indent, int depth) {
    switch (j.type()) {
    case ordered_json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& item : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out.append((depth + 1) * indent, ' ');
            out += ordered_json(item.key()).dump();
            out += ": ";
            dump_rec(out, item.value(), indent, depth + 1);
        }
        out += "\n";
        out.append(depth * indent, ' ');
        out += "}";
        return;
    }
    case ordered_json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        bool first = true;
        for (const auto& v : j) {
            if (!first) out += ",\n";
            first = false;
            out.append((depth + 1) * indent, ' ');
            dump_rec(out, v, indent, depth + 1);
        }
        out += "\n";
        out.append(depth * indent, ' ');
        out += "]";
        return;
    }
    case ordered_json::value_t::string:
        out += j.dump();
        return;
    case ordered_json::value_t::boolean:
        out += j.get<bool>() ? "true" : "false";
        return;
    case ordered_json::value_t::number_integer:
        out += std::to_string(j.get<long long>());
        return;
    case ordered_json::value_t::number_unsigned:
        out += std::to_string(j.get<unsigned long long>());
        return;
    case ordered_json::value_t::number_float: {
        double d = j.get<double>();
        if (!std::isfinite(d)) {
            out += "null";
            return;
        }
        if (d == 0.0) {
            out += "0";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", d);
        out += buf;
        return;
    }
    default:
        out += "null";
        return;
    }
}

} // namespace

SystemDef load_system(const ordered_json& j) {
    if (!j.is_object()) fail("top level must be a JSON object");
    static const std::set<std::string> known = {"schema", "dimension", "variables", "parameters",
                                                "box",    "x0",        "fields",    "dynamic",
                                                "mode"};
    for (const auto& item : j.items())
        if (!known.count(item.key())) fail("unknown key \"" + item.key() + "\"");

    const auto& schema = want(j, "schema");
    if (!schema.is_number_integer() || schema.get<long long>() != 1)
        fail("schema must be the integer 1");

    const auto& jdim = want(j, "dimension");
    if (!jdim.is_number_integer() || jdim.get<long long>() < 1)
        fail("dimension must be a positive integer");
    auto n = jdim.get<std::size_t>();

    SystemDef sys;
    const auto& jvars = want(j, "variables");
    if (!jvars.is_array() || jvars.size() != n) fail("variables must list one name per dimension");
    for (const auto& v : jvars) {
        if (!v.is_string() || v.get<std::string>().empty())
            fail("variable names must be nonempty strings");
        sys.dom.vars.push_back(v.get<std::string>());
    }
    std::set<std::string> vset(sys.dom.vars.begin(), sys.dom.vars.end());
    if (vset.size() != n) fail("variable names must be distinct");

    if (j.contains("parameters")) {
        const auto& jp = j["parameters"];
        if (!jp.is_object()) fail("parameters must map names to numbers");
        for (const auto& item : jp.items()) {
            if (!item.value().is_number())
                fail("parameter \"" + item.key() + "\" must be a number");
            if (vset.count(item.key()))
                fail("parameter \"" + item.key() + "\" collides with a variable");
            sys.params[item.key()] = item.value().get<double>();
        }
    }

    const auto& jbox = want(j, "box");
    if (!jbox.is_object()) fail("box must be an object with lo and hi");
    sys.dom.lo = number_list(want(jbox, "lo"), "box.lo", n);
    sys.dom.hi = number_list(want(jbox, "hi"), "box.hi", n);
    sys.dom.x0 = number_list(want(j, "x0"), "x0", n);

    const auto& jf = want(j, "fields");
    if (!jf.is_object() || jf.empty()) fail("fields must be a nonempty object");
    for (const auto& item : jf.items()) {
        VectorField f;
        f.name = item.key();
        if (!item.value().is_array() || item.value().size() != n)
            fail("field \"" + f.name + "\" must list one expression per dimension");
        std::size_t ci = 0;
        for (const auto& comp : item.value()) {
            ++ci;
            std::string where = "field \"" + f.name + "\" component " + std::to_string(ci);
            if (!comp.is_string()) fail(where + " must be a string");
            ExprPtr e;
            try {
                e = parse_expr(comp.get<std::string>());
            } catch (const ParseError& pe) {
                fail(where + " does not parse: " + pe.what());
            }
            e = subst(e, sys.params);
            for (const auto& name : free_vars(e))
                if (!vset.count(name))
                    fail(where + " references unknown symbol \"" + name + "\"");
            f.comp.push_back(std::move(e));
        }
        sys.frame.fields.push_back(std::move(f));
    }

    const auto& jdyn = want(j, "dynamic");
    if (!jdyn.is_string()) fail("dynamic must name a field");
    auto dyn = jdyn.get<std::string>();
    sys.gamma = sys.frame.fields.size();
    for (std::size_t i = 0; i < sys.frame.fields.size(); ++i)
        if (sys.frame.fields[i].name == dyn) {
            sys.gamma = i;
            break;
        }
    if (sys.gamma == sys.frame.fields.size())
        fail("dynamic field \"" + dyn + "\" is not defined");

    if (j.contains("mode")) {
        if (!j["mode"].is_string()) fail("mode must be a string");
        auto m = j["mode"].get<std::string>();
        if (m == "dist") m = "distributional";
        if (m != "lie" && m != "distributional" && m != "auto")
            fail("mode must be lie, distributional, or auto");
        sys.mode = m;
    }

    try {
        sys.dom.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    return sys;
}

SystemDef load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open \"" + path + "\"");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("JSON syntax: ") + e.what());
    }
    return load_system(j);
}

nlohmann::ordered_json system_json(const SystemDef& sys) {
    ordered_json j;
    j["schema"] = 1;
    j["dimension"] = sys.dom.dim();
    j["variables"] = sys.dom.vars;
    ordered_json jp = ordered_json::object();
    for (const auto& [k, v] : sys.params) jp[k] = v;
    j["parameters"] = jp;
    ordered_json jbox;
    jbox["lo"] = sys.dom.lo;
    jbox["hi"] = sys.dom.hi;
    j["box"] = jbox;
    j["x0"] = sys.dom.x0;
    ordered_json jf = ordered_json::object();
    for (const auto& f : sys.frame.fields) {
        ordered_json comps = ordered_json::array();
        for (const auto& c : f.comp) comps.push_back(to_string(c));
        jf[f.name] = comps;
    }
    j["fields"] = jf;
    j["dynamic"] = sys.gamma_field().name;
    j["mode"] = sys.mode;
    return j;
}

std::string dump_json(const ordered_json& j, int indent) {
    std::string out;
    dump_rec(out, j, indent, 0);
    out += "\n";
    return out;
}

} // namespace liq
