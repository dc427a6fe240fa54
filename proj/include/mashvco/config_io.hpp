#pragma once
// SimConfig <-> JSON (schema 1). Parsing is layered: fields present in the
// document override the supplied base config, so recipe defaults, a user
// file, and command-line key=value overrides stack naturally.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mashvco/mash.hpp"
#include "nlohmann/json.hpp"

namespace mashvco {

// Bad user input (config files, CLI values). CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fully explicit dump (curves expanded, pulse-width arrays materialized):
// parsing it back yields an identical config regardless of how the original
// was specified.
nlohmann::json config_to_json(const SimConfig& cfg);

// Apply a JSON document on top of base. Unknown keys are rejected; type or
// value problems throw ValidationError naming the field. Curves accept a
// preset name, {"preset": name}, {"table": csv_path, "order": n}, or
// explicit {f0, gain_k, nl_poly, x_min, x_max} fields.
SimConfig config_from_json(const nlohmann::json& j, const SimConfig& base = {});

SimConfig read_config_file(const std::string& path, const SimConfig& base = {});

// Recursive merge: object onto object merges per key, anything else replaces.
void merge_json(nlohmann::json& base, const nlohmann::json& overlay);

// "a.b=3" -> {"a":{"b":3}}. The value text is parsed as JSON when it is
// valid JSON (numbers, booleans, null, arrays), else taken as a string.
nlohmann::json parse_kv_override(const std::string& kv);

std::uint64_t fnv1a(std::string_view bytes);

// Hash of the canonical serialization (sorted keys, shortest-round-trip
// numbers): equal configs hash equal on any host.
std::uint64_t config_hash(const nlohmann::json& canonical);

} // namespace mashvco
