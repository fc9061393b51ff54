#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "specswap/filter_bank.hpp"
#include "specswap/grid.hpp"
#include "specswap/source.hpp"
#include "specswap/swap_mixed.hpp"
#include "specswap/timetag.hpp"

namespace specswap {

// Flat key = value store. Only keys from the schema are accepted, so a
// typo fails loudly instead of silently running on defaults.
class ConfigMap {
  public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_text(const std::string& text);

    // --set key=value; the key must be part of the schema
    void set(const std::string& key, const std::string& value);
    // SPECSWAP_OUT / SPECSWAP_SEED, the only environment hooks
    void apply_environment();

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    // canonical serialization in schema order, for params_used.txt and
    // the manifest hash
    std::string canonical_text() const;

    static const std::vector<std::string>& schema();

  private:
    std::map<std::string, std::string> values_;
};

// Everything a subcommand needs, fully validated.
struct RunConfig {
    JsaParams params;
    double source2_offset = 0.0;
    double eta = 0.0;
    FilterBank bank;
    SpectralGrid grid_signal;
    SpectralGrid grid_idler;
    std::vector<double> tau;
    double select_epsilon = 0.0;
    double select_min_weight = 0.0;
    BackgroundModel background;
    TofsConfig tofs;
    CoincidenceConfig coincidence;
    SynthSettings synth;
    std::uint64_t seed = 0;
    std::string out_dir;

    static RunConfig from_map(const ConfigMap& map);
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> info;      // derived quantities
    std::vector<std::string> warnings;  // valid but suspicious
    std::vector<std::string> errors;    // per-field diagnostics
};

ValidationReport validate_config(const ConfigMap& map);

}  // namespace specswap
