#pragma once
// Named experiment runner. A spec is a JSON document selecting one of five
// execution kinds (theory | single | set | sweep | calibration) plus a
// simulator config and analysis options; bundled recipes are specs built in
// code that a user file or key=value overrides can layer on top of.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mashvco/config_io.hpp"

namespace mashvco {

struct RecipeInfo {
    std::string name;
    std::string summary;
};

// The nine bundled reproduction recipes.
std::vector<RecipeInfo> bundled_recipes();
bool is_bundled_recipe(const std::string& name);
nlohmann::json recipe_spec(const std::string& name);

struct RunManifest {
    int schema = 1;
    std::string name;
    std::string kind;
    std::string timestamp; // ISO 8601 UTC; excluded from the hash
    std::uint64_t seed = 0;
    std::string config_hash; // hex of FNV-1a over the resolved spec
    std::vector<std::string> files; // relative to the output directory
    std::map<std::string, double> headline;
    std::string output_dir; // where the run landed; not serialized
};

RunManifest read_manifest(const std::string& path);

struct RunOptions {
    std::string output_dir;   // empty: $MASHVCO_OUT/<name> or ./out/<name>
    unsigned max_workers = 0; // sweep pool size; 0 = hardware
    bool save_streams = true; // write sample streams next to spectra
};

// Resolve a spec argument: a bundled recipe name, or a JSON file (which may
// itself name a "recipe" to start from). Overrides merge on top.
nlohmann::json resolve_spec(const std::string& name_or_path,
                            const std::vector<std::string>& kv_overrides);

// Execute and persist. Writes streams/spectra (CSV), metrics (JSON), and
// manifest.json into the output directory; removes partial outputs on
// failure. Deterministic for a given spec+seed up to the manifest timestamp.
RunManifest run_experiment(const nlohmann::json& spec,
                           const RunOptions& opt = {});

struct CompareRow {
    std::string key;
    double a = 0.0;
    double b = 0.0;
    double delta = 0.0; // b - a
    bool breach = false;
};

struct CompareReport {
    std::string name;
    double tolerance_db = 0.0;
    std::vector<CompareRow> rows;
    bool breach = false;
};

// Manifest-vs-manifest headline comparison; throws on recipe name mismatch.
CompareReport compare_manifests(const std::string& manifest_a,
                                const std::string& manifest_b,
                                double tolerance_db);

void write_spectrum_csv(const std::string& path, const Spectrum& sp);

} // namespace mashvco
