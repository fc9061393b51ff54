#include "specswap/timetag.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "specswap/errors.hpp"
#include "specswap/rng.hpp"
#include "specswap/units.hpp"

namespace specswap {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'T', 'G'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint64_t kSamplerCap = 1000000;

void put_bytes(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ofstream& out, T value) {
    put_bytes(out, &value, sizeof value);
}

template <typename T>
bool get(std::ifstream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    return in.gcount() == static_cast<std::streamsize>(sizeof value);
}

double arm_offset(const TofsChannelConfig& arm, double lambda_nm) {
    return arm.base_delay_ps +
           arm.dispersion_ps_nm * (lambda_nm - arm.reference_nm);
}

// timing std including the 1 ps tick quantization
double arm_time_sigma(const TofsChannelConfig& arm) {
    double s = fwhm_to_sigma(arm.jitter_fwhm_ps);
    return std::sqrt(s * s + 1.0 / 12.0);
}

// probability that the measured wavelength falls in [lo, hi], given the
// true wavelength; timing noise scaled through the dispersion
double bin_weight(double lambda_true, double lo, double hi, double sigma_lambda) {
    double inv = 1.0 / (std::sqrt(2.0) * sigma_lambda);
    return 0.5 * (std::erf((hi - lambda_true) * inv) -
                  std::erf((lo - lambda_true) * inv));
}

struct PulseBuffer {
    std::array<TimeTag, 8> tags;
    int count = 0;

    void add(std::uint8_t channel, std::uint64_t time) {
        tags[count].channel = channel;
        tags[count].time = time;
        ++count;
    }
    void sort_and_flush(TagWriter& writer) {
        std::sort(tags.begin(), tags.begin() + count,
                  [](const TimeTag& a, const TimeTag& b) { return a.time < b.time; });
        for (int i = 0; i < count; ++i) writer.write(tags[i]);
        count = 0;
    }
};

}  // namespace

void TofsConfig::validate() const {
    if (rep_period_ps <= 0.0) throw ConfigError("tofs: rep period must be positive");
    for (const TofsChannelConfig* arm : {&signal, &idler}) {
        if (arm->dispersion_ps_nm == 0.0) {
            throw ConfigError("tofs: dispersion must be nonzero");
        }
        if (arm->jitter_fwhm_ps < 0.0) {
            throw ConfigError("tofs: jitter must be non-negative");
        }
        if (arm->window_nm <= 0.0) {
            throw ConfigError("tofs: spectral window must be positive");
        }
        if (arm->reference_nm <= 0.0) {
            throw ConfigError("tofs: reference wavelength must be positive");
        }
        double margin = 6.0 * fwhm_to_sigma(arm->jitter_fwhm_ps) + 1.0;
        double half = 0.5 * arm->window_nm * std::abs(arm->dispersion_ps_nm);
        double lo = arm->base_delay_ps - half;
        double hi = arm->base_delay_ps + half;
        if (lo < margin || hi > rep_period_ps - margin) {
            throw ConfigError("tofs: arrival window leaves the pulse period");
        }
    }
}

void CoincidenceConfig::validate() const {
    if (window_ps <= 0.0) throw ConfigError("coincidence: window must be positive");
    for (double e : efficiency) {
        if (!(e > 0.0 && e <= 1.0)) {
            throw ConfigError("coincidence: efficiency must lie in (0, 1]");
        }
    }
}

Experiment parse_experiment(const std::string& name) {
    if (name == "swap-jsi") return Experiment::swap_jsi;
    if (name == "swap-fringe") return Experiment::swap_fringe;
    throw ConfigError("unknown experiment '" + name + "'");
}

TagWriter::TagWriter(const std::string& path, double rep_period_ps)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    put_bytes(out_, kMagic, 4);
    put(out_, kFormatVersion);
    put(out_, rep_period_ps);
    put(out_, std::uint64_t{0});  // segment count, patched on close
}

TagWriter::~TagWriter() {
    if (out_.is_open()) close();
}

void TagWriter::begin_segment(double tau_ps, std::uint64_t n_pulses) {
    if (in_segment_) end_segment();
    segment_header_ = out_.tellp();
    put(out_, tau_ps);
    put(out_, n_pulses);
    put(out_, std::uint64_t{0});  // record count, patched by end_segment
    records_ = 0;
    in_segment_ = true;
    ++segments_;
}

void TagWriter::write(const TimeTag& tag) {
    if (!in_segment_) throw IoError("tag written outside a segment");
    put(out_, tag.channel);
    put(out_, tag.time);
    ++records_;
}

void TagWriter::end_segment() {
    std::streampos here = out_.tellp();
    out_.seekp(segment_header_ + std::streampos(16));
    put(out_, records_);
    out_.seekp(here);
    in_segment_ = false;
}

void TagWriter::close() {
    if (in_segment_) end_segment();
    out_.seekp(4 + 4 + 8);  // past magic, version, rep period
    put(out_, segments_);
    out_.close();
    if (out_.fail()) throw IoError("failed writing " + path_);
}

TagReader::TagReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path);
    char magic[4];
    in_.read(magic, 4);
    std::uint32_t version = 0;
    if (in_.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0 ||
        !get(in_, version) || version != kFormatVersion) {
        throw IoError("not a tag stream: " + path);
    }
    std::uint64_t n_segments = 0;
    if (!get(in_, rep_period_) || !get(in_, n_segments)) {
        throw IoError("truncated tag stream header: " + path);
    }
    first_segment_ = in_.tellg();
    for (std::uint64_t s = 0; s < n_segments; ++s) {
        SegmentInfo info;
        if (!get(in_, info.tau_ps) || !get(in_, info.n_pulses) ||
            !get(in_, info.n_records)) {
            throw IoError("truncated segment header: " + path);
        }
        segments_.push_back(info);
        in_.seekg(static_cast<std::streamoff>(info.n_records * 9), std::ios::cur);
        if (!in_) throw IoError("truncated tag stream: " + path);
    }
    rewind();
}

void TagReader::rewind() {
    in_.clear();
    in_.seekg(first_segment_);
    segment_ = -1;
    remaining_ = 0;
}

bool TagReader::next(TimeTag& tag, int& segment) {
    while (remaining_ == 0) {
        if (segment_ + 1 >= static_cast<int>(segments_.size())) return false;
        ++segment_;
        in_.seekg(24, std::ios::cur);  // past the segment header
        remaining_ = segments_[segment_].n_records;
    }
    if (!get(in_, tag.channel) || !get(in_, tag.time)) {
        throw IoError("truncated tag record in " + path_);
    }
    --remaining_;
    segment = segment_;
    return true;
}

double tag_wavelength(const TofsChannelConfig& arm, double rep_period_ps,
                      const TimeTag& tag) {
    std::uint64_t rep = static_cast<std::uint64_t>(std::llround(rep_period_ps));
    std::uint64_t pulse = tag.time / rep;
    double offset = static_cast<double>(tag.time - pulse * rep);
    return arm.reference_nm +
           (offset - arm.base_delay_ps) / arm.dispersion_ps_nm;
}

namespace {

void check_synth_inputs(const JsaParams& params, const TofsConfig& tofs,
                        const CoincidenceConfig& coinc, const SynthSettings& synth) {
    params.validate();
    tofs.validate();
    coinc.validate();
    if (synth.n_pulses < 1) throw ConfigError("synth: need at least one pulse");
    if (!(synth.eta > 0.0) || 2.0 * synth.eta + 2.0 * synth.eta * synth.eta > 1.0) {
        throw ConfigError("synth: pair probability out of range");
    }
    if (synth.block_source < 0 || synth.block_source > 2) {
        throw ConfigError("synth: block_source must be 0, 1, or 2");
    }
}

// One tag-file segment at a fixed delay. The caller owns the writer and the
// generator so the segments of a scan share a single stream.
void run_synth_segment(const JsaParams& params, const TofsConfig& tofs,
                       const CoincidenceConfig& coinc, const SynthSettings& synth,
                       double tau_ps, std::uint64_t pulse_offset, Rng& rng,
                       TagWriter& writer, ClassCounts& counts) {
    const double eta = synth.eta;
    const bool fringe = synth.experiment == Experiment::swap_fringe;
    const double tau = fringe ? tau_ps : 0.0;
    const double envelope = std::exp(-params.sigma_s * params.sigma_s * tau * tau);

    // cumulative per-pulse class probabilities; blocking zeroes the classes
    // that need the blocked source, with no renormalization
    double q[5] = {eta * eta, 0.5 * eta * eta, 0.5 * eta * eta, eta, eta};
    if (synth.block_source == 1) q[0] = q[1] = q[3] = 0.0;
    if (synth.block_source == 2) q[0] = q[2] = q[4] = 0.0;
    double cum[5];
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) {
        acc += q[i];
        cum[i] = acc;
    }

    const double marg_s = params.marginal_sigma_s();
    const double marg_i = params.marginal_sigma_i();
    const double omega0 = params.omega0;
    const double slope_si = params.t() * params.sigma_i / params.sigma_s;

    // one joint draw from the source intensity
    auto sample_pair = [&](double& ws, double& wi) {
        double x = marg_s * rng.normal();
        ws = omega0 + x;
        wi = omega0 - slope_si * x + params.sigma_i * rng.normal();
    };
    // idler pair behind the swap beamsplitter; antibunch factor carries the
    // fringe phase when the delay is scanned
    auto sample_swap_idlers = [&](double& W1, double& W2) -> bool {
        for (std::uint64_t it = 0; it < kSamplerCap; ++it) {
            double a = omega0 + marg_i * rng.normal();
            double b = omega0 + marg_i * rng.normal();
            double mo = params.mode_overlap(a, b);
            double accept;
            if (fringe) {
                double phase = (params.cond_center(a) - params.cond_center(b)) * tau;
                accept = 0.5 * (1.0 + envelope * std::cos(phase) -
                                mo * mo * (1.0 + envelope));
                accept = std::clamp(accept, 0.0, 1.0);
                // thinning, not resampling: the four-fold rate follows the fringe
                if (rng.uniform() < accept) {
                    W1 = a;
                    W2 = b;
                    return true;
                }
                return false;
            }
            accept = 1.0 - mo * mo;
            if (rng.uniform() < accept) {
                W1 = a;
                W2 = b;
                return true;
            }
        }
        throw NumericError("idler pair sampler stalled");
    };
    // same-source double emission: two correlated pairs, idler bunching
    auto sample_double_emission = [&](double& ws1, double& ws2, double& Wi1,
                                      double& Wi2) {
        for (std::uint64_t it = 0; it < kSamplerCap; ++it) {
            sample_pair(ws1, Wi1);
            sample_pair(ws2, Wi2);
            double mo = params.mode_overlap(Wi1, Wi2);
            if (rng.uniform() < 0.5 * (1.0 + mo * mo)) return;
        }
        throw NumericError("double emission sampler stalled");
    };
    // signal pair conditioned on the herald, antisymmetrized
    auto sample_heralded_signals = [&](double Wa, double Wb, double& w1, double& w2) {
        double ca = params.cond_center(Wa);
        double cb = params.cond_center(Wb);
        double s = params.sigma_s;
        for (std::uint64_t it = 0; it < kSamplerCap; ++it) {
            bool flip = rng.uniform() < 0.5;
            double m1 = flip ? cb : ca;
            double m2 = flip ? ca : cb;
            double z1 = m1 + s * rng.normal();
            double z2 = m2 + s * rng.normal();
            double x = std::exp(-((z1 - ca) * (z1 - ca) + (z2 - cb) * (z2 - cb)) /
                                (4.0 * s * s));
            double y = std::exp(-((z1 - cb) * (z1 - cb) + (z2 - ca) * (z2 - ca)) /
                                (4.0 * s * s));
            double d = x - y;
            double accept = d * d / (2.0 * (x * x + y * y));
            if (rng.uniform() < accept) {
                w1 = z1;
                w2 = z2;
                return;
            }
        }
        throw NumericError("signal pair sampler stalled");
    };

    PulseBuffer buffer;

    auto emit = [&](std::uint64_t pulse, int channel, double omega) {
        const TofsChannelConfig& arm = tofs.arm(channel);
        double lambda = rad_ps_to_nm(omega);
        if (std::abs(lambda - arm.reference_nm) > 0.5 * arm.window_nm) {
            ++counts.clipped_tags;
            return;
        }
        double t = static_cast<double>(pulse) * tofs.rep_period_ps +
                   arm_offset(arm, lambda) +
                   fwhm_to_sigma(arm.jitter_fwhm_ps) * rng.normal();
        if (coinc.efficiency[channel] < 1.0 &&
            rng.uniform() >= coinc.efficiency[channel]) {
            ++counts.thinned_tags;
            return;
        }
        buffer.add(static_cast<std::uint8_t>(channel),
                   static_cast<std::uint64_t>(std::llround(t)));
        ++counts.emitted_tags;
    };

    for (std::uint64_t local = 0; local < synth.n_pulses; ++local) {
        const std::uint64_t pulse = pulse_offset + local;
        double u = rng.uniform();
        if (u < cum[0]) {
            double W1, W2;
            if (!sample_swap_idlers(W1, W2)) {
                ++counts.none;
                continue;
            }
            ++counts.psi12;
            double w1, w2;
            sample_heralded_signals(W1, W2, w1, w2);
            bool swap_cd = rng.uniform() < 0.5;
            emit(pulse, kSignal1, w1);
            emit(pulse, kSignal2, w2);
            emit(pulse, kIdlerC, swap_cd ? W2 : W1);
            emit(pulse, kIdlerD, swap_cd ? W1 : W2);
        } else if (u < cum[1]) {
            ++counts.psi11;
            double w1, w2, W1, W2;
            sample_double_emission(w1, w2, W1, W2);
            bool swap_cd = rng.uniform() < 0.5;
            emit(pulse, kSignal1, w1);
            emit(pulse, kSignal2, w2);
            emit(pulse, kIdlerC, swap_cd ? W2 : W1);
            emit(pulse, kIdlerD, swap_cd ? W1 : W2);
        } else if (u < cum[2]) {
            ++counts.psi22;
            double w1, w2, W1, W2;
            sample_double_emission(w1, w2, W1, W2);
            bool swap_cd = rng.uniform() < 0.5;
            emit(pulse, kSignal1, w1);
            emit(pulse, kSignal2, w2);
            emit(pulse, kIdlerC, swap_cd ? W2 : W1);
            emit(pulse, kIdlerD, swap_cd ? W1 : W2);
        } else if (u < cum[3]) {
            ++counts.single1;
            double ws, wi;
            sample_pair(ws, wi);
            emit(pulse, kSignal1, ws);
            emit(pulse, rng.uniform() < 0.5 ? kIdlerC : kIdlerD, wi);
        } else if (u < cum[4]) {
            ++counts.single2;
            double ws, wi;
            sample_pair(ws, wi);
            emit(pulse, kSignal2, ws);
            emit(pulse, rng.uniform() < 0.5 ? kIdlerC : kIdlerD, wi);
        } else {
            ++counts.none;
        }
        buffer.sort_and_flush(writer);
    }
}

}  // namespace

ClassCounts synth_timetags(const JsaParams& params, const TofsConfig& tofs,
                           const CoincidenceConfig& coinc, const SynthSettings& synth,
                           std::uint64_t seed, const std::string& out_path) {
    check_synth_inputs(params, tofs, coinc, synth);
    Rng rng(seed);
    TagWriter writer(out_path, tofs.rep_period_ps);
    ClassCounts counts;
    writer.begin_segment(synth.tau_ps, synth.n_pulses);
    run_synth_segment(params, tofs, coinc, synth, synth.tau_ps, 0, rng, writer, counts);
    writer.close();
    return counts;
}

ClassCounts synth_timetag_scan(const JsaParams& params, const TofsConfig& tofs,
                               const CoincidenceConfig& coinc, const SynthSettings& synth,
                               const std::vector<double>& tau_values, std::uint64_t seed,
                               const std::string& out_path) {
    check_synth_inputs(params, tofs, coinc, synth);
    if (tau_values.empty()) throw ConfigError("synth: empty delay scan");
    Rng rng(seed);
    TagWriter writer(out_path, tofs.rep_period_ps);
    ClassCounts counts;
    std::uint64_t offset = 0;
    for (double tau_ps : tau_values) {
        writer.begin_segment(tau_ps, synth.n_pulses);
        run_synth_segment(params, tofs, coinc, synth, tau_ps, offset, rng, writer,
                          counts);
        offset += synth.n_pulses;
    }
    writer.close();
    return counts;
}

void write_tag_csv(TagReader& reader, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "channel,time_ps,segment,tau_ps\n";
    TimeTag tag;
    int segment = 0;
    reader.rewind();
    while (reader.next(tag, segment)) {
        out << static_cast<int>(tag.channel) << ',' << tag.time << ',' << segment
            << ',' << reader.segments()[segment].tau_ps << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

std::vector<CoincidenceEvent> find_coincidences(TagReader& reader,
                                                const CoincidenceConfig& config,
                                                int order, CoincidenceStats* stats) {
    config.validate();
    if (order != 2 && order != 4) {
        throw ConfigError("coincidence order must be 2 or 4");
    }
    std::uint64_t rep =
        static_cast<std::uint64_t>(std::llround(reader.rep_period_ps()));
    if (rep == 0) throw ConfigError("tag stream has no rep period");

    std::vector<CoincidenceEvent> events;
    CoincidenceStats local;
    std::array<std::uint64_t, kChannelCount> last_time{};
    std::array<bool, kChannelCount> seen{};

    std::array<std::int64_t, kChannelCount> first{-1, -1, -1, -1};
    std::uint64_t group_pulse = 0;
    int group_segment = -1;
    std::uint64_t group_tags = 0;

    auto flush = [&]() {
        if (group_tags == 0) return;
        local.peak_pulse_tags = std::max(local.peak_pulse_tags, group_tags);
        int occupied = 0;
        for (int c = 0; c < kChannelCount; ++c) {
            if (first[c] >= 0) ++occupied;
        }
        bool complete = (order == 4) ? occupied == kChannelCount
                                     : (occupied == 2 && group_tags == 2);
        if (!complete) {
            ++local.incomplete_pulses;
        } else {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (int c = 0; c < kChannelCount; ++c) {
                if (first[c] < 0) continue;
                double aligned = static_cast<double>(first[c]) - config.delay_ps[c];
                lo = std::min(lo, aligned);
                hi = std::max(hi, aligned);
            }
            if (hi - lo <= config.window_ps) {
                CoincidenceEvent event;
                event.pulse = group_pulse;
                event.segment = group_segment;
                event.time = first;
                for (int c = 0; c < kChannelCount; ++c) {
                    if (first[c] >= 0) event.mask |= static_cast<std::uint8_t>(1u << c);
                }
                events.push_back(event);
                ++local.events;
            } else {
                ++local.window_rejects;
            }
        }
        first = {-1, -1, -1, -1};
        group_tags = 0;
    };

    reader.rewind();
    TimeTag tag;
    int segment = 0;
    while (reader.next(tag, segment)) {
        if (tag.channel >= kChannelCount) {
            throw NumericError("tag channel out of range");
        }
        if (seen[tag.channel] && tag.time < last_time[tag.channel]) {
            throw NumericError("tag stream not time-sorted within a channel");
        }
        seen[tag.channel] = true;
        last_time[tag.channel] = tag.time;

        std::uint64_t pulse = tag.time / rep;
        if (group_tags > 0 && (pulse != group_pulse || segment != group_segment)) {
            flush();
        }
        group_pulse = pulse;
        group_segment = segment;
        ++group_tags;
        if (first[tag.channel] < 0) {
            first[tag.channel] = static_cast<std::int64_t>(tag.time);
        } else {
            ++local.surplus_tags;
        }
    }
    flush();
    if (stats) *stats = local;
    return events;
}

TagHistograms histograms_from_tags(const std::vector<CoincidenceEvent>& fourfolds,
                                   const std::vector<CoincidenceEvent>& doubles,
                                   int n_segments, const TofsConfig& tofs,
                                   const FilterBank& bank,
                                   const HistogramSettings& settings,
                                   bool signal_pair_maps) {
    tofs.validate();
    if (settings.jsi_bins < 2) throw ConfigError("histogram needs at least 2 bins");
    if (n_segments < 1) throw ConfigError("histogram needs at least one segment");

    TagHistograms h;
    int nb = bank.size();
    int half = (nb - 1) / 2;
    h.bank_half = half;
    double center0 = bank.at_index(0).center_nm;
    double pitch = bank.pitch_nm;
    h.pjk_counts = Eigen::MatrixXd::Zero(nb, nb);
    h.pjk_by_segment.assign(n_segments, Eigen::MatrixXd::Zero(nb, nb));

    auto bank_bin = [&](double lambda) -> int {
        double rel = (lambda - center0) / pitch;
        int j = static_cast<int>(std::llround(rel));
        if (j < -half || j > half) return std::numeric_limits<int>::min();
        return j;
    };

    auto make_edges = [&](const TofsChannelConfig& arm) {
        std::vector<double> edges(settings.jsi_bins + 1);
        double lo = arm.reference_nm - 0.5 * arm.window_nm;
        for (int i = 0; i <= settings.jsi_bins; ++i) {
            edges[i] = lo + arm.window_nm * i / settings.jsi_bins;
        }
        return edges;
    };
    h.signal_edges_nm = make_edges(tofs.signal);
    h.idler_edges_nm = make_edges(tofs.idler);
    h.jsi_counts = Eigen::MatrixXd::Zero(settings.jsi_bins, settings.jsi_bins);

    auto edge_bin = [&](const std::vector<double>& edges, double lambda) -> int {
        if (lambda < edges.front() || lambda >= edges.back()) return -1;
        int i = static_cast<int>((lambda - edges.front()) /
                                 (edges[1] - edges[0]));
        return std::clamp(i, 0, settings.jsi_bins - 1);
    };

    if (signal_pair_maps) {
        h.signal_pair_counts.assign(
            static_cast<std::size_t>(nb) * nb,
            Eigen::MatrixXd::Zero(settings.jsi_bins, settings.jsi_bins));
    }

    double rep = tofs.rep_period_ps;
    auto wavelength = [&](const CoincidenceEvent& event, int channel) {
        TimeTag tag;
        tag.channel = static_cast<std::uint8_t>(channel);
        tag.time = static_cast<std::uint64_t>(event.time[channel]);
        return tag_wavelength(tofs.arm(channel), rep, tag);
    };

    for (const CoincidenceEvent& event : fourfolds) {
        if (event.mask != 0b1111) continue;
        double lc = wavelength(event, kIdlerC);
        double ld = wavelength(event, kIdlerD);
        int j = bank_bin(lc);
        int k = bank_bin(ld);
        if (j == std::numeric_limits<int>::min() ||
            k == std::numeric_limits<int>::min()) {
            ++h.out_of_bank;
            continue;
        }
        h.pjk_counts(j + half, k + half) += 1.0;
        if (event.segment >= 0 && event.segment < n_segments) {
            h.pjk_by_segment[event.segment](j + half, k + half) += 1.0;
        }
        ++h.fourfolds_binned;
        if (signal_pair_maps) {
            int a = edge_bin(h.signal_edges_nm, wavelength(event, kSignal1));
            int b = edge_bin(h.signal_edges_nm, wavelength(event, kSignal2));
            if (a >= 0 && b >= 0) {
                h.signal_pair_counts[static_cast<std::size_t>(j + half) * nb +
                                     (k + half)](a, b) += 1.0;
            }
        }
    }

    for (const CoincidenceEvent& event : doubles) {
        bool s1 = event.mask & (1u << kSignal1);
        bool s2 = event.mask & (1u << kSignal2);
        bool ic = event.mask & (1u << kIdlerC);
        bool id = event.mask & (1u << kIdlerD);
        int signal_ch = s1 ? kSignal1 : (s2 ? kSignal2 : -1);
        int idler_ch = ic ? kIdlerC : (id ? kIdlerD : -1);
        if (signal_ch < 0 || idler_ch < 0 || (s1 && s2) || (ic && id)) {
            ++h.other_doubles;
            continue;
        }
        int a = edge_bin(h.signal_edges_nm, wavelength(event, signal_ch));
        int b = edge_bin(h.idler_edges_nm, wavelength(event, idler_ch));
        if (a < 0 || b < 0) {
            ++h.out_of_window;
            continue;
        }
        h.jsi_counts(a, b) += 1.0;
        ++h.doubles_binned;
    }
    return h;
}

CalibrationFit calibrate_dispersion(
    const std::vector<std::pair<double, double>>& scan) {
    int n = static_cast<int>(scan.size());
    if (n < 3) throw NumericError("calibration needs at least 3 scan points");
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : scan) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (auto [x, y] : scan) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx <= 0.0) throw NumericError("calibration scan is rank-deficient");

    CalibrationFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    double sx2 = 0.0;
    for (auto [x, y] : scan) {
        double r = y - (fit.intercept + fit.slope * x);
        ssr += r * r;
        sx2 += x * x;
    }
    fit.rms_residual = std::sqrt(ssr / n);
    double var = ssr / (n - 2);
    fit.stderr_slope = std::sqrt(var / sxx);
    fit.stderr_intercept = std::sqrt(var * sx2 / (n * sxx));
    return fit;
}

std::vector<std::pair<double, double>> synth_calibration_scan(
    const TofsChannelConfig& arm, int n_points, std::uint64_t seed) {
    if (n_points < 3) throw ConfigError("calibration scan needs at least 3 points");
    Rng rng(seed);
    std::vector<std::pair<double, double>> scan;
    double lo = arm.reference_nm - 0.5 * arm.window_nm;
    double sigma = fwhm_to_sigma(arm.jitter_fwhm_ps);
    for (int i = 0; i < n_points; ++i) {
        double lambda = lo + arm.window_nm * i / (n_points - 1);
        double t = arm_offset(arm, lambda) + sigma * rng.normal();
        scan.emplace_back(lambda, static_cast<double>(std::llround(t)));
    }
    return scan;
}

Eigen::MatrixXd expected_pair_masses(const JsaParams& params, const FilterBank& bank,
                                     const TofsChannelConfig& idler_arm, int sign) {
    if (sign != 1 && sign != -1) throw ConfigError("sign must be +1 or -1");
    params.validate();
    int nb = bank.size();
    int half = (nb - 1) / 2;
    double center0 = bank.at_index(0).center_nm;
    double pitch = bank.pitch_nm;
    double sigma_lambda = arm_time_sigma(idler_arm) / std::abs(idler_arm.dispersion_ps_nm);

    const int nq = 512;
    std::vector<double> nodes, weights;
    gauss_legendre(nq, nodes, weights);

    // integrate over the spectral window in frequency
    double w_lo = nm_to_rad_ps(idler_arm.reference_nm + 0.5 * idler_arm.window_nm);
    double w_hi = nm_to_rad_ps(idler_arm.reference_nm - 0.5 * idler_arm.window_nm);
    double mid = 0.5 * (w_lo + w_hi);
    double rad = 0.5 * (w_hi - w_lo);

    double marg = params.marginal_sigma_i();
    Eigen::VectorXd dens(nq);
    Eigen::MatrixXd binw(nb, nq);
    std::vector<double> freq(nq);
    for (int m = 0; m < nq; ++m) {
        double w = mid + rad * nodes[m];
        freq[m] = w;
        double z = (w - params.omega0) / marg;
        // gauss_legendre weights sum to 1 on [-1,1]; restore the 2*rad measure
        dens[m] = weights[m] * 2.0 * rad *
                  std::exp(-0.5 * z * z) / (marg * std::sqrt(kTwoPi));
        double lambda = rad_ps_to_nm(w);
        for (int a = 0; a < nb; ++a) {
            double c = center0 + pitch * (a - half);
            binw(a, m) = bin_weight(lambda, c - 0.5 * pitch, c + 0.5 * pitch,
                                    sigma_lambda);
        }
    }

    Eigen::MatrixXd kernel(nq, nq);
    for (int m = 0; m < nq; ++m) {
        for (int n = 0; n < nq; ++n) {
            double mo = params.mode_overlap(freq[m], freq[n]);
            kernel(m, n) = dens[m] * dens[n] * (1.0 + sign * mo * mo);
        }
    }
    double purity = 1.0 / params.schmidt_number();
    Eigen::MatrixXd masses = binw * kernel * binw.transpose();
    return masses / (1.0 + sign * purity);
}

Eigen::MatrixXd expected_jsi_masses(const JsaParams& params, const TofsConfig& tofs,
                                    const HistogramSettings& settings) {
    params.validate();
    int nbins = settings.jsi_bins;
    const int nq = 600;
    std::vector<double> nodes, weights;
    gauss_legendre(nq, nodes, weights);

    auto axis = [&](const TofsChannelConfig& arm, Eigen::MatrixXd& binw,
                    std::vector<double>& freq, std::vector<double>& meas) {
        double w_lo = nm_to_rad_ps(arm.reference_nm + 0.5 * arm.window_nm);
        double w_hi = nm_to_rad_ps(arm.reference_nm - 0.5 * arm.window_nm);
        double mid = 0.5 * (w_lo + w_hi);
        double rad = 0.5 * (w_hi - w_lo);
        double sigma_lambda = arm_time_sigma(arm) / std::abs(arm.dispersion_ps_nm);
        double lam_lo = arm.reference_nm - 0.5 * arm.window_nm;
        double width = arm.window_nm / nbins;
        binw.resize(nbins, nq);
        freq.resize(nq);
        meas.resize(nq);
        for (int m = 0; m < nq; ++m) {
            double w = mid + rad * nodes[m];
            freq[m] = w;
            meas[m] = weights[m] * 2.0 * rad;
            double lambda = rad_ps_to_nm(w);
            for (int a = 0; a < nbins; ++a) {
                binw(a, m) = bin_weight(lambda, lam_lo + a * width,
                                        lam_lo + (a + 1) * width, sigma_lambda);
            }
        }
    };

    Eigen::MatrixXd binw_s, binw_i;
    std::vector<double> freq_s, freq_i, meas_s, meas_i;
    axis(tofs.signal, binw_s, freq_s, meas_s);
    axis(tofs.idler, binw_i, freq_i, meas_i);

    Eigen::MatrixXd kernel(nq, nq);
    for (int m = 0; m < nq; ++m) {
        for (int n = 0; n < nq; ++n) {
            double amp = std::abs(params.amplitude(freq_s[m], freq_i[n]));
            kernel(m, n) = meas_s[m] * meas_i[n] * amp * amp;
        }
    }
    Eigen::MatrixXd masses = binw_s * kernel * binw_i.transpose();
    double total = masses.sum();
    if (total <= 0.0) throw NumericError("source spectrum mass vanished");
    return masses / total;
}

PjkGoodness pjk_goodness(const Eigen::MatrixXd& full, std::uint64_t pulses_full,
                         const Eigen::MatrixXd& blocked1, std::uint64_t pulses_b1,
                         const Eigen::MatrixXd& blocked2, std::uint64_t pulses_b2,
                         const JsaParams& params, const FilterBank& bank,
                         const TofsChannelConfig& idler_arm, double eta,
                         double min_expected) {
    if (pulses_full == 0 || pulses_b1 == 0 || pulses_b2 == 0) {
        throw ConfigError("pulse counts must be positive");
    }
    if (full.rows() != blocked1.rows() || full.rows() != blocked2.rows() ||
        full.cols() != blocked1.cols() || full.cols() != blocked2.cols()) {
        throw ConfigError("count matrices must share a shape");
    }
    Eigen::MatrixXd anti = expected_pair_masses(params, bank, idler_arm, -1);
    Eigen::MatrixXd bunch = expected_pair_masses(params, bank, idler_arm, +1);
    double n = static_cast<double>(pulses_full);
    double s1 = n / static_cast<double>(pulses_b1);
    double s2 = n / static_cast<double>(pulses_b2);

    PjkGoodness g;
    g.corrected = full - s1 * blocked1 - s2 * blocked2;
    g.expected = n * eta * eta * anti;
    // per-pulse mass of one same-source background class
    Eigen::MatrixXd e_bg = 0.5 * eta * eta * n * bunch;
    // the full run carries both background classes; each blocked run adds
    // its own, amplified by the pulse-count scaling
    g.variance = g.expected + (2.0 + s1 + s2) * e_bg;

    g.chi2 = 0.0;
    g.dof = 0;
    for (int r = 0; r < full.rows(); ++r) {
        for (int c = 0; c < full.cols(); ++c) {
            double full_expect = g.expected(r, c) + 2.0 * e_bg(r, c);
            if (full_expect < min_expected) continue;
            g.chi2 += (g.corrected(r, c) - g.expected(r, c)) *
                      (g.corrected(r, c) - g.expected(r, c)) / g.variance(r, c);
            ++g.dof;
        }
    }
    if (g.dof == 0) throw NumericError("no cells pass the expected-count floor");
    boost::math::chi_squared dist(static_cast<double>(g.dof));
    g.p_value = 1.0 - boost::math::cdf(dist, g.chi2);
    return g;
}

double js_divergence(const Eigen::MatrixXd& counts, const Eigen::MatrixXd& model) {
    if (counts.rows() != model.rows() || counts.cols() != model.cols()) {
        throw ConfigError("histograms must share a shape");
    }
    double tc = counts.sum();
    double tm = model.sum();
    if (tc <= 0.0 || tm <= 0.0) throw NumericError("empty histogram");
    double js = 0.0;
    for (int r = 0; r < counts.rows(); ++r) {
        for (int c = 0; c < counts.cols(); ++c) {
            double p = counts(r, c) / tc;
            double q = model(r, c) / tm;
            double m = 0.5 * (p + q);
            if (p > 0.0) js += 0.5 * p * std::log(p / m);
            if (q > 0.0) js += 0.5 * q * std::log(q / m);
        }
    }
    return js;
}

}  // namespace specswap
