#include "specswap/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "specswap/errors.hpp"
#include "specswap/manifest.hpp"
#include "specswap/spectral.hpp"
#include "specswap/swap_pure.hpp"
#include "specswap/units.hpp"

namespace specswap {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

const std::vector<std::string> kSchema = {
    "source.center_nm",
    "source.sigma_s",
    "source.sigma_i",
    "source.alpha",
    "source.eta",
    "source2.offset",
    "grid.n_points",
    "grid.span_sigmas",
    "bank.center_nm",
    "bank.pitch_nm",
    "bank.half_extent",
    "bank.width_nm",
    "bank.shape",
    "bank.nodes",
    "tau.span_inv_sigma",
    "tau.n_points",
    "select.epsilon",
    "select.min_weight_fraction",
    "background.fraction_source1",
    "background.fraction_source2",
    "tofs.signal.dispersion_ps_per_nm",
    "tofs.signal.reference_nm",
    "tofs.signal.jitter_fwhm_ps",
    "tofs.signal.window_nm",
    "tofs.signal.base_delay_ps",
    "tofs.idler.dispersion_ps_per_nm",
    "tofs.idler.reference_nm",
    "tofs.idler.jitter_fwhm_ps",
    "tofs.idler.window_nm",
    "tofs.idler.base_delay_ps",
    "tofs.rep_period_ps",
    "coincidence.window_ps",
    "coincidence.efficiency.s1",
    "coincidence.efficiency.s2",
    "coincidence.efficiency.ic",
    "coincidence.efficiency.id",
    "coincidence.delay.s1",
    "coincidence.delay.s2",
    "coincidence.delay.ic",
    "coincidence.delay.id",
    "synth.n_pulses",
    "synth.experiment",
    "synth.block_source",
    "synth.tau_ps",
    "run.seed",
    "run.out_dir",
};

bool known_key(const std::string& key) {
    return std::find(kSchema.begin(), kSchema.end(), key) != kSchema.end();
}

}  // namespace

const std::vector<std::string>& ConfigMap::schema() { return kSchema; }

ConfigMap ConfigMap::parse_file(const std::string& path) {
    return parse_text(read_text_file(path));
}

ConfigMap ConfigMap::parse_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (!known_key(key)) {
            throw ConfigError("unknown config key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        }
        if (map.values_.count(key)) {
            throw ConfigError("duplicate config key '" + key + "'");
        }
        if (value.empty()) {
            throw ConfigError("config key '" + key + "' has no value");
        }
        map.values_[key] = value;
    }
    return map;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    if (trim(value).empty()) {
        throw ConfigError("config key '" + key + "' has no value");
    }
    values_[key] = trim(value);
}

void ConfigMap::apply_environment() {
    if (const char* out = std::getenv("SPECSWAP_OUT")) set("run.out_dir", out);
    if (const char* seed = std::getenv("SPECSWAP_SEED")) set("run.seed", seed);
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& ConfigMap::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("missing config key '" + key + "'");
    }
    return it->second;
}

double ConfigMap::get_double(const std::string& key) const {
    const std::string& raw = get(key);
    try {
        std::size_t used = 0;
        double value = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return value;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
    }
}

int ConfigMap::get_int(const std::string& key) const {
    double value = get_double(key);
    int as_int = static_cast<int>(value);
    if (static_cast<double>(as_int) != value) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return as_int;
}

std::uint64_t ConfigMap::get_u64(const std::string& key) const {
    const std::string& raw = get(key);
    try {
        std::size_t used = 0;
        std::uint64_t value = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return value;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + raw +
                          "' is not a non-negative integer");
    }
}

std::string ConfigMap::canonical_text() const {
    std::ostringstream out;
    for (const std::string& key : kSchema) {
        // the output location is not a physics parameter; identical runs
        // into different directories must hash identically
        if (key == "run.out_dir") continue;
        if (has(key)) out << key << " = " << get(key) << "\n";
    }
    return out.str();
}

RunConfig RunConfig::from_map(const ConfigMap& map) {
    RunConfig rc;
    rc.params.omega0 = nm_to_rad_ps(map.get_double("source.center_nm"));
    rc.params.sigma_s = map.get_double("source.sigma_s");
    rc.params.sigma_i = map.get_double("source.sigma_i");
    rc.params.alpha = map.get_double("source.alpha");
    rc.params.eta = map.get_double("source.eta");
    rc.params.validate();
    rc.eta = rc.params.eta;
    rc.source2_offset = map.get_double("source2.offset");

    int grid_n = map.get_int("grid.n_points");
    double span = map.get_double("grid.span_sigmas");
    rc.grid_signal = default_signal_grid(rc.params, grid_n, span);
    rc.grid_idler = default_idler_grid(rc.params, grid_n, span);

    rc.bank = make_filter_bank(map.get_double("bank.center_nm"),
                               map.get_double("bank.pitch_nm"),
                               map.get_int("bank.half_extent"),
                               map.get_double("bank.width_nm"),
                               parse_filter_shape(map.get("bank.shape")),
                               map.get_int("bank.nodes"));

    rc.tau = default_tau_grid(rc.params, map.get_double("tau.span_inv_sigma"),
                              map.get_int("tau.n_points"));

    rc.select_epsilon = map.get_double("select.epsilon");
    rc.select_min_weight = map.get_double("select.min_weight_fraction");
    if (!(rc.select_epsilon > 0.0 && rc.select_epsilon <= 1.0)) {
        throw ConfigError("select.epsilon must lie in (0, 1]");
    }
    if (rc.select_min_weight < 0.0 || rc.select_min_weight >= 1.0) {
        throw ConfigError("select.min_weight_fraction must lie in [0, 1)");
    }

    rc.background.fraction_source1 = map.get_double("background.fraction_source1");
    rc.background.fraction_source2 = map.get_double("background.fraction_source2");

    auto arm = [&](const std::string& prefix) {
        TofsChannelConfig a;
        a.dispersion_ps_nm = map.get_double(prefix + ".dispersion_ps_per_nm");
        a.reference_nm = map.get_double(prefix + ".reference_nm");
        a.jitter_fwhm_ps = map.get_double(prefix + ".jitter_fwhm_ps");
        a.window_nm = map.get_double(prefix + ".window_nm");
        a.base_delay_ps = map.get_double(prefix + ".base_delay_ps");
        return a;
    };
    rc.tofs.signal = arm("tofs.signal");
    rc.tofs.idler = arm("tofs.idler");
    rc.tofs.rep_period_ps = map.get_double("tofs.rep_period_ps");
    rc.tofs.validate();

    rc.coincidence.window_ps = map.get_double("coincidence.window_ps");
    const char* names[4] = {"s1", "s2", "ic", "id"};
    for (int c = 0; c < kChannelCount; ++c) {
        rc.coincidence.efficiency[c] =
            map.get_double(std::string("coincidence.efficiency.") + names[c]);
        rc.coincidence.delay_ps[c] =
            map.get_double(std::string("coincidence.delay.") + names[c]);
    }
    rc.coincidence.validate();

    rc.synth.n_pulses = map.get_u64("synth.n_pulses");
    rc.synth.experiment = parse_experiment(map.get("synth.experiment"));
    const std::string& block = map.get("synth.block_source");
    if (block == "none") {
        rc.synth.block_source = 0;
    } else if (block == "1" || block == "2") {
        rc.synth.block_source = block[0] - '0';
    } else {
        throw ConfigError("synth.block_source must be none, 1, or 2");
    }
    rc.synth.tau_ps = map.get_double("synth.tau_ps");
    rc.synth.eta = rc.eta;
    if (!(rc.eta > 0.0) || 2.0 * rc.eta + 2.0 * rc.eta * rc.eta > 1.0) {
        throw ConfigError("source.eta out of range: per-pulse class "
                          "probabilities must not exceed 1");
    }

    rc.seed = map.get_u64("run.seed");
    rc.out_dir = map.get("run.out_dir");
    if (rc.out_dir.empty()) throw ConfigError("run.out_dir must not be empty");
    return rc;
}

ValidationReport validate_config(const ConfigMap& map) {
    ValidationReport report;
    RunConfig rc;
    try {
        rc = RunConfig::from_map(map);
    } catch (const ConfigError& err) {
        report.ok = false;
        report.errors.push_back(err.what());
        return report;
    }

    std::ostringstream line;
    auto push = [&]() {
        report.info.push_back(line.str());
        line.str("");
    };

    line << "source: t = " << rc.params.t()
         << ", schmidt K = " << rc.params.schmidt_number();
    push();
    line << "source: marginal widths " << rc.params.marginal_sigma_s() << " / "
         << rc.params.marginal_sigma_i() << " rad/ps";
    push();
    line << "grid: signal span " << rc.grid_signal.span << " rad/ps, idler span "
         << rc.grid_idler.span << " rad/ps, " << rc.grid_signal.n << " points";
    push();
    for (const Filter& f : rc.bank.filters) {
        line << "bin " << f.index << ": " << f.center_nm << " nm, " << f.center
             << " rad/ps";
        push();
    }

    try {
        AmplitudeMatrix jsa = build_jsa(rc.params, rc.grid_signal, rc.grid_idler);
        line << "grid: mass at edge = " << edge_mass(jsa);
        push();
    } catch (const NumericError& err) {
        report.warnings.push_back(std::string("grid: ") + err.what());
    }
    return report;
}

}  // namespace specswap
