#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specswap/filter_bank.hpp"
#include "specswap/source.hpp"

namespace specswap {

// Detector channels. The two signal spectrometers take one photon each;
// the idler pair leaves the swap beamsplitter toward c and d.
inline constexpr int kSignal1 = 0;
inline constexpr int kSignal2 = 1;
inline constexpr int kIdlerC = 2;
inline constexpr int kIdlerD = 3;
inline constexpr int kChannelCount = 4;

struct TimeTag {
    std::uint64_t time = 0;  // ps since run start
    std::uint8_t channel = 0;
};

// One dispersive spectrometer arm. window_nm is the full accepted width
// centered on reference_nm; photons outside never register.
struct TofsChannelConfig {
    double dispersion_ps_nm = 0.0;  // signed
    double reference_nm = 0.0;
    double jitter_fwhm_ps = 0.0;
    double window_nm = 0.0;
    double base_delay_ps = 0.0;
};

struct TofsConfig {
    TofsChannelConfig signal;
    TofsChannelConfig idler;
    double rep_period_ps = 0.0;

    const TofsChannelConfig& arm(int channel) const {
        return channel <= kSignal2 ? signal : idler;
    }
    void validate() const;
};

struct CoincidenceConfig {
    double window_ps = 0.0;
    std::array<double, kChannelCount> efficiency{1.0, 1.0, 1.0, 1.0};
    std::array<double, kChannelCount> delay_ps{0.0, 0.0, 0.0, 0.0};

    void validate() const;
};

enum class Experiment { swap_jsi, swap_fringe };
Experiment parse_experiment(const std::string& name);

struct SynthSettings {
    std::uint64_t n_pulses = 0;
    Experiment experiment = Experiment::swap_jsi;
    int block_source = 0;  // 0 = none
    double tau_ps = 0.0;   // swap delay, fringe experiment only
    double eta = 0.0;      // pair emission probability per source per pulse
};

// Per-pulse event classes. Four-fold classes: both sources fire (the swap
// signal) or one source double-fires (flat background). Single classes
// give the exclusive signal+idler doubles used for source spectroscopy.
struct ClassCounts {
    std::uint64_t psi12 = 0;
    std::uint64_t psi11 = 0;
    std::uint64_t psi22 = 0;
    std::uint64_t single1 = 0;
    std::uint64_t single2 = 0;
    std::uint64_t none = 0;
    std::uint64_t emitted_tags = 0;
    std::uint64_t clipped_tags = 0;  // outside a spectral window
    std::uint64_t thinned_tags = 0;  // lost to sub-unity efficiency

    std::uint64_t fourfold_generated() const { return psi12 + psi11 + psi22; }
};

struct SegmentInfo {
    double tau_ps = 0.0;
    std::uint64_t n_pulses = 0;
    std::uint64_t n_records = 0;
};

// Binary stream layout (little-endian, packed):
//   "SWTG" u32:version f64:rep_period_ps u64:n_segments
//   per segment: f64 tau_ps, u64 n_pulses, u64 n_records,
//                then n_records x { u8 channel, u64 time_ps }
class TagWriter {
  public:
    TagWriter(const std::string& path, double rep_period_ps);
    ~TagWriter();
    void begin_segment(double tau_ps, std::uint64_t n_pulses);
    void write(const TimeTag& tag);
    void close();

  private:
    void end_segment();
    std::ofstream out_;
    std::string path_;
    std::uint64_t segments_ = 0;
    std::uint64_t records_ = 0;
    std::streampos segment_header_;
    bool in_segment_ = false;
};

class TagReader {
  public:
    explicit TagReader(const std::string& path);
    double rep_period_ps() const { return rep_period_; }
    const std::vector<SegmentInfo>& segments() const { return segments_; }
    // Sequential scan across all segments; returns false at end of stream.
    bool next(TimeTag& tag, int& segment);
    void rewind();

  private:
    std::ifstream in_;
    std::string path_;
    double rep_period_ = 0.0;
    std::vector<SegmentInfo> segments_;
    std::streampos first_segment_;
    std::uint64_t remaining_ = 0;
    int segment_ = -1;
};

// Streams synthetic tags for one run to out_path. Deterministic per seed.
ClassCounts synth_timetags(const JsaParams& params, const TofsConfig& tofs,
                           const CoincidenceConfig& coinc, const SynthSettings& synth,
                           std::uint64_t seed, const std::string& out_path);

// Delay scan: one segment per tau value, synth.n_pulses pulses each.
ClassCounts synth_timetag_scan(const JsaParams& params, const TofsConfig& tofs,
                               const CoincidenceConfig& coinc, const SynthSettings& synth,
                               const std::vector<double>& tau_values, std::uint64_t seed,
                               const std::string& out_path);

void write_tag_csv(TagReader& reader, const std::string& path);

// Inverts the arrival-time map for a tag in a known pulse.
double tag_wavelength(const TofsChannelConfig& arm, double rep_period_ps,
                      const TimeTag& tag);

struct CoincidenceEvent {
    std::uint64_t pulse = 0;
    int segment = 0;
    std::uint8_t mask = 0;  // bit per channel
    std::array<std::int64_t, kChannelCount> time{-1, -1, -1, -1};
};

struct CoincidenceStats {
    std::uint64_t events = 0;
    std::uint64_t window_rejects = 0;
    std::uint64_t surplus_tags = 0;      // beyond the first per channel per pulse
    std::uint64_t incomplete_pulses = 0;  // occupancy below the requested order
    std::uint64_t peak_pulse_tags = 0;    // resident-memory proxy
};

// order 4: all four channels present; order 2: exactly two distinct
// channels. One event per pulse at most; the window is a veto applied
// after per-channel delay alignment.
std::vector<CoincidenceEvent> find_coincidences(TagReader& reader,
                                                const CoincidenceConfig& config,
                                                int order,
                                                CoincidenceStats* stats = nullptr);

struct HistogramSettings {
    int jsi_bins = 64;
};

struct TagHistograms {
    // idler-pair counts, rows = bin of channel c, cols = bin of channel d
    Eigen::MatrixXd pjk_counts;
    std::vector<Eigen::MatrixXd> pjk_by_segment;
    std::uint64_t fourfolds_binned = 0;
    std::uint64_t out_of_bank = 0;

    // exclusive signal+idler doubles, wavelength-binned source spectrum
    Eigen::MatrixXd jsi_counts;  // rows = signal bin, cols = idler bin
    std::vector<double> signal_edges_nm;
    std::vector<double> idler_edges_nm;
    std::uint64_t doubles_binned = 0;
    std::uint64_t out_of_window = 0;
    std::uint64_t other_doubles = 0;  // same-side pairs, not spectroscopy

    // signal-pair spectra per idler bin pair, for heralded-JSI maps
    // keyed by (j + half, k + half) flattened; empty unless requested
    std::vector<Eigen::MatrixXd> signal_pair_counts;
    int bank_half = 0;
};

TagHistograms histograms_from_tags(const std::vector<CoincidenceEvent>& fourfolds,
                                   const std::vector<CoincidenceEvent>& doubles,
                                   int n_segments, const TofsConfig& tofs,
                                   const FilterBank& bank,
                                   const HistogramSettings& settings,
                                   bool signal_pair_maps = false);

struct CalibrationFit {
    double slope = 0.0;  // ps/nm
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double stderr_intercept = 0.0;
    double rms_residual = 0.0;
    int n = 0;
};

// Least-squares line through (wavelength nm, time ps) scan points.
CalibrationFit calibrate_dispersion(const std::vector<std::pair<double, double>>& scan);

// Simulated narrowband-laser sweep across the arm's window: n_points set
// wavelengths, one jittered, tick-rounded tag time each.
std::vector<std::pair<double, double>> synth_calibration_scan(
    const TofsChannelConfig& arm, int n_points, std::uint64_t seed);

// Expected per-event probability that an idler pair lands in ordered bank
// bins (j,k), including timing-blur leakage across bin edges. sign +1
// selects the bunched same-source density, -1 the antibunched swap density.
Eigen::MatrixXd expected_pair_masses(const JsaParams& params, const FilterBank& bank,
                                     const TofsChannelConfig& idler_arm, int sign);

// Expected bin masses for the exclusive-doubles source spectrum on the
// histogram grid of histograms_from_tags, blur included, normalized to
// the in-window total.
Eigen::MatrixXd expected_jsi_masses(const JsaParams& params, const TofsConfig& tofs,
                                    const HistogramSettings& settings);

struct PjkGoodness {
    Eigen::MatrixXd corrected;  // full - b1 - b2, pulse-count scaled
    Eigen::MatrixXd expected;
    Eigen::MatrixXd variance;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

// Chi-squared comparison of background-corrected four-fold counts against
// the model, over cells with expected counts >= min_expected.
PjkGoodness pjk_goodness(const Eigen::MatrixXd& full, std::uint64_t pulses_full,
                         const Eigen::MatrixXd& blocked1, std::uint64_t pulses_b1,
                         const Eigen::MatrixXd& blocked2, std::uint64_t pulses_b2,
                         const JsaParams& params, const FilterBank& bank,
                         const TofsChannelConfig& idler_arm, double eta,
                         double min_expected = 10.0);

// Jensen-Shannon divergence (natural log) between two histograms after
// normalization. Zero cells contribute zero.
double js_divergence(const Eigen::MatrixXd& counts, const Eigen::MatrixXd& model);

}  // namespace specswap
