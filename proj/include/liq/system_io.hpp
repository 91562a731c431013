#pragma once

#include <liq/vfield.hpp>

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace liq {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Parses and validates a system description. Expressions are parsed with
 * parameters substituted as constants; any defect (missing key, count
 * mismatch, parse failure, unknown symbol, reference point on or outside
 * the box) throws InputError naming the offending spot.
 */
SystemDef load_system(const nlohmann::ordered_json& j);

// Reads the file at `path`; I/O and JSON syntax failures become InputError.
SystemDef load_system_file(const std::string& path);

// Echo that load_system accepts back to an equivalent definition. Field
// components are reprinted from the parsed trees, so parameter values
// appear inline while the bindings stay listed.
nlohmann::ordered_json system_json(const SystemDef& sys);

// Two-space indent, keys in insertion order, doubles at 17 significant
// digits so values survive a round trip byte for byte.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

} // namespace liq
