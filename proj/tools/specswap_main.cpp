// Command-line front end. Every subcommand reads one config, writes CSV
// plot data plus a checksum manifest into the run directory, and exits
// 0 / 2 / 3 / 4 (ok / config / numeric / io).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "specswap/config.hpp"
#include "specswap/csv.hpp"
#include "specswap/errors.hpp"
#include "specswap/filter_bank.hpp"
#include "specswap/manifest.hpp"
#include "specswap/mode_select.hpp"
#include "specswap/source.hpp"
#include "specswap/spectral.hpp"
#include "specswap/swap_mixed.hpp"
#include "specswap/swap_pure.hpp"
#include "specswap/timetag.hpp"
#include "specswap/units.hpp"

namespace {

using namespace specswap;

using Summary = std::vector<std::pair<std::string, double>>;

void append(Summary& all, const Summary& part) {
    all.insert(all.end(), part.begin(), part.end());
}

void write_summary_csv(RunRecorder& rec, const std::string& name, const Summary& rows) {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> columns;
    for (const auto& [key, value] : rows) {
        headers.push_back(key);
        columns.push_back({value});
    }
    write_columns_csv(rec.path(name), headers, columns);
    rec.record(name);
}

void say(bool quiet, const std::string& line) {
    if (!quiet) std::cout << line << '\n';
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

std::vector<double> bank_indices(const FilterBank& bank) {
    std::vector<double> idx;
    int half = (bank.size() - 1) / 2;
    for (int j = -half; j <= half; ++j) idx.push_back(j);
    return idx;
}

// strongest off-diagonal herald in the bank
std::pair<int, int> best_pair(const JsaParams& params, const FilterBank& bank) {
    int half = (bank.size() - 1) / 2;
    double best = -1.0;
    std::pair<int, int> arg{-1, 1};
    for (int j = -half; j <= half; ++j) {
        for (int k = j + 1; k <= half; ++k) {
            double p = herald_probability(params, bank.at_index(j).center,
                                          bank.at_index(k).center);
            if (p > best) {
                best = p;
                arg = {j, k};
            }
        }
    }
    return arg;
}

Summary cmd_jsi(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    AmplitudeMatrix jsa = build_jsa(rc.params, rc.grid_signal, rc.grid_idler);
    write_matrix_csv(rec.path("source_jsi.csv"), "omega_s", rc.grid_signal.points(),
                     "omega_i", rc.grid_idler.points(), "intensity",
                     jsa.values.cwiseAbs2());
    rec.record("source_jsi.csv");

    const FilterBank& bank = rc.bank;
    std::vector<double> idx = bank_indices(bank);
    int nb = bank.size();
    int half = (nb - 1) / 2;
    Eigen::MatrixXd dens(nb, nb);
    for (int j = -half; j <= half; ++j) {
        for (int k = -half; k <= half; ++k) {
            dens(j + half, k + half) = herald_probability(
                rc.params, bank.at_index(j).center, bank.at_index(k).center);
        }
    }
    write_matrix_csv(rec.path("herald_density.csv"), "j", idx, "k", idx, "density",
                     dens);
    rec.record("herald_density.csv");

    std::vector<std::string> headers{"omega"};
    std::vector<std::vector<double>> columns{rc.grid_signal.points()};
    for (int j = -half; j <= half; ++j) {
        ConditionalMode mode =
            conditional_mode(rc.params, bank.at_index(j).center, rc.grid_signal);
        std::vector<double> col(rc.grid_signal.n);
        for (int i = 0; i < rc.grid_signal.n; ++i) col[i] = std::norm(mode.values(i));
        headers.push_back("phi_" + std::to_string(j));
        columns.push_back(std::move(col));
    }
    write_columns_csv(rec.path("conditional_modes.csv"), headers, columns);
    rec.record("conditional_modes.csv");

    auto [bj, bk] = best_pair(rc.params, bank);
    double p_best = herald_probability(rc.params, bank.at_index(bj).center,
                                       bank.at_index(bk).center);
    Summary s{{"edge_mass", edge_mass(jsa)},
              {"schmidt_number_closed", rc.params.schmidt_number()},
              {"best_j", static_cast<double>(bj)},
              {"best_k", static_cast<double>(bk)},
              {"herald_density_best", p_best}};
    if (p_best > 1e-30 && !herald_is_null(rc.params, bank.at_index(bj).center,
                                          bank.at_index(bk).center)) {
        HeraldedJsi hj = heralded_jsi(rc.params, bank.at_index(bj).center,
                                      bank.at_index(bk).center, rc.grid_signal,
                                      rc.grid_signal);
        write_matrix_csv(rec.path("heralded_jsi.csv"), "omega_1",
                         rc.grid_signal.points(), "omega_2", rc.grid_signal.points(),
                         "density", hj.values);
        rec.record("heralded_jsi.csv");

        double p_nodes = mixed_herald_probability(rc.params, bank, bj, bk);
        if (p_nodes > 1e-12) {
            MixedHeralded state = mixed_heralded_state(rc.params, bank, bj, bk,
                                                       rc.grid_signal);
            MixedObservables obs =
                mixed_observables(rc.params, state, rc.grid_signal, rc.grid_signal,
                                  std::vector<double>{0.0});
            write_matrix_csv(rec.path("heralded_jsi_filtered.csv"), "omega_1",
                             rc.grid_signal.points(), "omega_2",
                             rc.grid_signal.points(), "density", obs.jsi.values);
            rec.record("heralded_jsi_filtered.csv");
            s.emplace_back("herald_probability_filtered", state.p_jk);
            s.emplace_back("herald_probability_nodes", p_nodes);
        }
    }
    write_summary_csv(rec, "jsi_summary.csv", s);
    say(quiet, "jsi: strongest herald at (" + std::to_string(bj) + "," +
                   std::to_string(bk) + "), density " + fmt(p_best));
    return s;
}

Summary cmd_fringes(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    const FilterBank& bank = rc.bank;
    int half = (bank.size() - 1) / 2;
    const std::vector<double>& tau = rc.tau;
    std::size_t nt = tau.size();

    std::vector<double> c_tau, c_j, c_k, c_exact, c_approx;
    std::vector<double> s_j, s_k, s_p, s_vis, s_beat, s_lock;
    for (int j = -half; j <= half; ++j) {
        for (int k = j + 1; k <= half; ++k) {
            double Oj = bank.at_index(j).center;
            double Ok = bank.at_index(k).center;
            double p = herald_probability(rc.params, Oj, Ok);
            bool live = p > 1e-30 && !herald_is_null(rc.params, Oj, Ok);
            FringeCurve exact, approx;
            exact.tau = tau;
            approx.tau = tau;
            if (live) {
                exact = fringe_pure(rc.params, Oj, Ok, tau, FringeModel::exact);
                approx = fringe_pure(rc.params, Oj, Ok, tau, FringeModel::approximate);
            } else {
                exact.probability.assign(nt, 0.0);
                approx.probability.assign(nt, 0.0);
            }
            for (std::size_t i = 0; i < nt; ++i) {
                c_tau.push_back(tau[i]);
                c_j.push_back(j);
                c_k.push_back(k);
                c_exact.push_back(exact.probability[i]);
                c_approx.push_back(approx.probability[i]);
            }
            s_j.push_back(j);
            s_k.push_back(k);
            s_p.push_back(p);
            double beat = rc.params.beat(Oj, Ok);
            s_beat.push_back(beat);
            s_vis.push_back(live ? fringe_visibility(exact) : 0.0);
            s_lock.push_back(live ? lock_in_amplitude(exact, beat) : 0.0);
        }
    }
    write_columns_csv(rec.path("fringes.csv"), {"tau_ps", "j", "k", "p_exact", "p_approx"},
                      {c_tau, c_j, c_k, c_exact, c_approx});
    rec.record("fringes.csv");
    write_columns_csv(rec.path("fringe_summary.csv"),
                      {"j", "k", "herald_density", "visibility", "beat_rad_ps", "lock_in"},
                      {s_j, s_k, s_p, s_vis, s_beat, s_lock});
    rec.record("fringe_summary.csv");

    // resolution-free sum rules on a uniform delta-limit tiling
    const int nbins = 64;
    double span = 4.0 * rc.params.marginal_sigma_i();
    std::vector<double> centers(nbins);
    double step = 2.0 * span / nbins;
    for (int i = 0; i < nbins; ++i) {
        centers[i] = rc.params.omega0 - span + (i + 0.5) * step;
    }
    IntegratedObservables io = integrated_observables(rc.params, centers,
                                                      rc.grid_signal, rc.grid_signal,
                                                      tau);
    {
        std::vector<double> w1, w2, vsum, vclosed;
        for (int a = 0; a < io.grid1.n; ++a) {
            for (int b = 0; b < io.grid2.n; ++b) {
                w1.push_back(io.grid1.point(a));
                w2.push_back(io.grid2.point(b));
                vsum.push_back(io.jsi_sum(a, b));
                vclosed.push_back(io.jsi_closed(a, b));
            }
        }
        write_columns_csv(rec.path("integrated_jsi.csv"),
                          {"omega_1", "omega_2", "jsi_sum", "jsi_closed"},
                          {w1, w2, vsum, vclosed});
        rec.record("integrated_jsi.csv");
    }
    write_columns_csv(rec.path("integrated_fringe.csv"),
                      {"tau_ps", "fringe_sum", "fringe_closed"},
                      {io.tau, io.fringe_sum, io.fringe_closed});
    rec.record("integrated_fringe.csv");

    // finite-filter curve for the strongest pair, next to its sharp limit
    auto [bj, bk] = best_pair(rc.params, bank);
    double p_best = herald_probability(rc.params, bank.at_index(bj).center,
                                       bank.at_index(bk).center);
    {
        std::vector<double> filtered(nt, 0.0), sharp(nt, 0.0);
        if (p_best > 1e-30 &&
            !herald_is_null(rc.params, bank.at_index(bj).center,
                            bank.at_index(bk).center) &&
            mixed_herald_probability(rc.params, bank, bj, bk) > 1e-12) {
            MixedHeralded state = mixed_heralded_state(rc.params, bank, bj, bk,
                                                       rc.grid_signal);
            MixedObservables obs = mixed_observables(rc.params, state, rc.grid_signal,
                                                     rc.grid_signal, tau);
            FringeCurve pure = fringe_pure(rc.params, bank.at_index(bj).center,
                                           bank.at_index(bk).center, tau,
                                           FringeModel::exact);
            filtered = obs.fringe.probability;
            sharp = pure.probability;
        }
        write_columns_csv(rec.path("fringe_filtered.csv"),
                          {"tau_ps", "p_filtered", "p_sharp"},
                          {tau, filtered, sharp});
        rec.record("fringe_filtered.csv");
    }

    Summary s{{"bin_coverage", io.coverage},
              {"jsi_sum_rule_rel_err", io.jsi_max_rel_discrepancy},
              {"fringe_sum_rule_rel_err", io.fringe_max_rel_discrepancy},
              {"herald_weight_binned", io.total_weight_ordered},
              {"herald_weight_closed", io.closed_weight_unordered},
              {"pairs", static_cast<double>(s_j.size())}};
    write_summary_csv(rec, "fringes_summary.csv", s);
    say(quiet, "fringes: " + std::to_string(s_j.size()) + " pairs, sum-rule errors " +
                   fmt(io.jsi_max_rel_discrepancy) + " / " +
                   fmt(io.fringe_max_rel_discrepancy));
    return s;
}

Summary cmd_schmidt(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    AmplitudeMatrix jsa = build_jsa(rc.params, rc.grid_signal, rc.grid_idler);
    SchmidtResult sharp = schmidt_decompose(jsa);

    double lambda0 = rad_ps_to_nm(rc.params.omega0);
    double blur_sigma = width_nm_to_rad_ps(fwhm_to_sigma(0.5), lambda0);
    AmplitudeMatrix blurred = blurred_amplitude(jsa, blur_sigma, blur_sigma);
    SchmidtResult blur = schmidt_decompose(blurred);

    std::size_t n_out = std::min<std::size_t>(
        32, std::min(sharp.coefficients.size(), blur.coefficients.size()));
    std::vector<double> mode(n_out), coef(n_out), coef_blur(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        mode[i] = static_cast<double>(i);
        coef[i] = sharp.coefficients[i];
        coef_blur[i] = blur.coefficients[i];
    }
    write_columns_csv(rec.path("schmidt_coefficients.csv"),
                      {"mode", "coefficient", "coefficient_blurred"},
                      {mode, coef, coef_blur});
    rec.record("schmidt_coefficients.csv");

    double trace_purity = purity(reduced_density(jsa, Side::idler));
    Summary s{{"K", sharp.K},
              {"K_blurred", blur.K},
              {"K_closed", rc.params.schmidt_number()},
              {"purity_numeric", trace_purity},
              {"blur_sigma_rad_ps", blur_sigma}};
    write_summary_csv(rec, "schmidt_summary.csv", s);
    say(quiet, "schmidt: K " + fmt(sharp.K) + ", blurred " + fmt(blur.K));
    return s;
}

Summary cmd_purity(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    double lambda0 = rad_ps_to_nm(rc.params.omega0);
    const std::vector<double> widths_nm{0.375, 0.75, 1.5, 3.0, 6.0};
    std::vector<double> sigmas, purities;
    for (double w : widths_nm) {
        double sf = width_nm_to_rad_ps(fwhm_to_sigma(w), lambda0);
        sigmas.push_back(sf);
        purities.push_back(rc.params.purity_filtered(sf));
    }
    write_columns_csv(rec.path("purity_sweep.csv"),
                      {"width_fwhm_nm", "sigma_rad_ps", "purity"},
                      {widths_nm, sigmas, purities});
    rec.record("purity_sweep.csv");

    double sf_cfg = width_nm_to_rad_ps(fwhm_to_sigma(rc.bank.width_nm), lambda0);
    double sf_wide = width_nm_to_rad_ps(fwhm_to_sigma(40.0), lambda0);

    auto [bj, bk] = best_pair(rc.params, rc.bank);
    PurityReport pr = purity_and_hom(rc.params, rc.bank, bj, bk);
    MixedHeralded state = mixed_heralded_state(rc.params, rc.bank, bj, bk,
                                               rc.grid_signal);
    double fid = fidelity_with_pure(rc.params, state);

    // ensemble-vs-quadrature kernel residual, small grid on purpose
    SpectralGrid small = default_signal_grid(rc.params, 24, 4.0);
    FilterBank smallbank = make_filter_bank(
        rad_ps_to_nm(rc.params.omega0), rc.bank.pitch_nm,
        (rc.bank.size() - 1) / 2, rc.bank.width_nm, rc.bank.shape, 4);
    MixedHeralded st_small = mixed_heralded_state(rc.params, smallbank, bj, bk, small);
    Eigen::MatrixXcd kr = reconstruct_kernel(st_small);
    Eigen::MatrixXcd kq = kernel_by_quadrature(rc.params, smallbank, bj, bk, small);
    double kernel_residual = (kr - kq).cwiseAbs().maxCoeff();

    Summary s{{"purity_filtered_config_width", rc.params.purity_filtered(sf_cfg)},
              {"purity_unresolved", rc.params.purity_filtered(sf_wide)},
              {"purity_pair_j", pr.purity_j},
              {"purity_pair_k", pr.purity_k},
              {"hom_visibility", pr.hom_visibility},
              {"bell_fidelity", fid},
              {"herald_probability_pair", state.p_jk},
              {"kernel_residual", kernel_residual}};
    write_summary_csv(rec, "purity_summary.csv", s);
    say(quiet, "purity: filtered " + fmt(rc.params.purity_filtered(sf_cfg)) +
                   ", bell fidelity " + fmt(fid));
    return s;
}

Summary cmd_mismatch(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    double delta = rc.source2_offset != 0.0 ? rc.source2_offset
                                            : rc.params.offset_for_overlap(0.80);
    JsaParams second = rc.params.with_center_offset(delta);
    auto [bj, bk] = best_pair(rc.params, rc.bank);
    MismatchReport mr = source_mismatch(rc.params, second,
                                        rc.bank.at_index(bj).center,
                                        rc.bank.at_index(bk).center, rc.grid_signal,
                                        rc.grid_idler);
    write_columns_csv(rec.path("mismatch_fringe.csv"),
                      {"pump_phase_rad", "p_plus", "p_minus"},
                      {mr.phase, mr.fringe_plus, mr.fringe_minus});
    rec.record("mismatch_fringe.csv");

    Summary s{{"center_offset_rad_ps", delta},
              {"amplitude_overlap", mr.overlap_f1_f2},
              {"overlap_closed", rc.params.displaced_overlap(delta)},
              {"contrast", mr.contrast},
              {"v_jk", mr.v_jk},
              {"overlap_sq_bound", mr.overlap_f1_f2 * mr.overlap_f1_f2}};
    write_summary_csv(rec, "mismatch_summary.csv", s);
    say(quiet, "mismatch: overlap " + fmt(mr.overlap_f1_f2) + ", contrast " +
                   fmt(mr.contrast));
    return s;
}

Summary cmd_select(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    JsiTable table = model_jsi_table(rc.params, rc.bank, rc.grid_signal,
                                     rc.grid_signal);
    SymmetrizeResult sym = symmetrize(table);
    Eigen::MatrixXd overlaps = overlap_matrix(sym.table);
    Eigen::MatrixXd overlaps_raw = raw_overlap_matrix(sym.table);

    std::vector<double> e_j, e_k, e_w, e_cov;
    for (const JsiEntry& entry : sym.table.entries) {
        e_j.push_back(entry.j);
        e_k.push_back(entry.k);
        e_w.push_back(entry.weight);
        e_cov.push_back(entry.support_coverage);
    }
    write_columns_csv(rec.path("jsi_table.csv"), {"j", "k", "weight", "coverage"},
                      {e_j, e_k, e_w, e_cov});
    rec.record("jsi_table.csv");

    std::vector<double> entry_idx(sym.table.entries.size());
    for (std::size_t i = 0; i < entry_idx.size(); ++i) entry_idx[i] = i;
    write_matrix_csv(rec.path("overlaps.csv"), "a", entry_idx, "b", entry_idx,
                     "overlap", overlaps);
    rec.record("overlaps.csv");
    write_matrix_csv(rec.path("overlaps_raw.csv"), "a", entry_idx, "b", entry_idx,
                     "overlap", overlaps_raw);
    rec.record("overlaps_raw.csv");

    ModeSet set = select_orthogonal(sym.table, rc.select_epsilon, rc.select_min_weight);
    ChannelReport report = multiplex_report(set, sym.table);
    std::vector<double> m_j, m_k, m_share, m_cross;
    for (const auto& ch : report.channels) {
        m_j.push_back(ch.j);
        m_k.push_back(ch.k);
        m_share.push_back(ch.rate_share);
        m_cross.push_back(ch.max_crosstalk);
    }
    write_columns_csv(rec.path("modes.csv"), {"j", "k", "rate_share", "max_crosstalk"},
                      {m_j, m_k, m_share, m_cross});
    rec.record("modes.csv");

    double worst = 0.0;
    for (int a = 0; a < set.overlaps.rows(); ++a) {
        for (int b = a + 1; b < set.overlaps.cols(); ++b) {
            worst = std::max(worst, set.overlaps(a, b));
        }
    }
    double K = rc.params.schmidt_number();
    Summary s{{"n_modes", static_cast<double>(set.modes.size())},
              {"epsilon", rc.select_epsilon},
              {"worst_selected_overlap", worst},
              {"selection_margin", rc.select_epsilon - worst},
              {"discarded_fraction", report.discarded_fraction},
              {"residual_asymmetry", sym.max_residual_asymmetry},
              {"pair_bound", std::floor(K * (K - 1.0) / 2.0)}};
    write_summary_csv(rec, "select_summary.csv", s);
    say(quiet, "select-modes: " + std::to_string(set.modes.size()) +
                   " channels, margin " + fmt(rc.select_epsilon - worst));
    return s;
}

Summary synth_run(const RunConfig& rc, RunRecorder& rec, const SynthSettings& settings,
                  std::uint64_t seed, const std::string& tag_name,
                  const std::vector<double>& scan, bool dump_csv, bool quiet) {
    ClassCounts counts;
    if (scan.size() > 1) {
        counts = synth_timetag_scan(rc.params, rc.tofs, rc.coincidence, settings, scan,
                                    seed, rec.path(tag_name));
    } else {
        counts = synth_timetags(rc.params, rc.tofs, rc.coincidence, settings, seed,
                                rec.path(tag_name));
    }
    rec.record(tag_name);

    std::string stem = tag_name.substr(0, tag_name.find_last_of('.'));
    TagReader reader(rec.path(tag_name));
    {
        std::vector<double> seg, tau, pulses, records;
        for (std::size_t i = 0; i < reader.segments().size(); ++i) {
            const SegmentInfo& info = reader.segments()[i];
            seg.push_back(i);
            tau.push_back(info.tau_ps);
            pulses.push_back(static_cast<double>(info.n_pulses));
            records.push_back(static_cast<double>(info.n_records));
        }
        write_columns_csv(rec.path(stem + "_segments.csv"),
                          {"segment", "tau_ps", "n_pulses", "n_records"},
                          {seg, tau, pulses, records});
        rec.record(stem + "_segments.csv");
    }
    if (dump_csv) {
        reader.rewind();
        write_tag_csv(reader, rec.path(stem + "_tags.csv"));
        rec.record(stem + "_tags.csv");
    }

    auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    std::uint64_t total_pulses =
        settings.n_pulses * std::max<std::size_t>(1, scan.size());
    Summary s{{stem + "_pulses", d(total_pulses)},
              {stem + "_psi12", d(counts.psi12)},
              {stem + "_psi11", d(counts.psi11)},
              {stem + "_psi22", d(counts.psi22)},
              {stem + "_single1", d(counts.single1)},
              {stem + "_single2", d(counts.single2)},
              {stem + "_none", d(counts.none)},
              {stem + "_fourfolds_generated", d(counts.fourfold_generated())},
              {stem + "_tags_emitted", d(counts.emitted_tags)},
              {stem + "_tags_clipped", d(counts.clipped_tags)},
              {stem + "_tags_thinned", d(counts.thinned_tags)}};
    write_summary_csv(rec, stem + "_counts.csv", s);
    say(quiet, "synth: " + stem + ".swtg, " + std::to_string(counts.emitted_tags) +
                   " tags from " + std::to_string(total_pulses) + " pulses");
    return s;
}

Summary cmd_analyze(const RunConfig& rc, RunRecorder& rec,
                    const std::vector<std::string>& files, bool quiet) {
    if (files.size() != 1 && files.size() != 3) {
        throw ConfigError("analyze takes one tag file or three (full blocked1 blocked2)");
    }
    TagReader full(files[0]);
    CoincidenceStats st4, st2;
    std::vector<CoincidenceEvent> fourfolds =
        find_coincidences(full, rc.coincidence, 4, &st4);
    std::vector<CoincidenceEvent> doubles =
        find_coincidences(full, rc.coincidence, 2, &st2);
    int n_segments = static_cast<int>(full.segments().size());
    std::uint64_t n_full = 0;
    for (const SegmentInfo& seg : full.segments()) n_full += seg.n_pulses;

    HistogramSettings hset;
    TagHistograms hist = histograms_from_tags(fourfolds, doubles, n_segments, rc.tofs,
                                              rc.bank, hset, false);

    std::vector<double> idx = bank_indices(rc.bank);
    write_matrix_csv(rec.path("pjk_counts.csv"), "j", idx, "k", idx, "count",
                     hist.pjk_counts);
    rec.record("pjk_counts.csv");

    auto midpoints = [](const std::vector<double>& edges) {
        std::vector<double> mid(edges.size() - 1);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            mid[i] = 0.5 * (edges[i] + edges[i + 1]);
        }
        return mid;
    };
    std::vector<double> smid = midpoints(hist.signal_edges_nm);
    std::vector<double> imid = midpoints(hist.idler_edges_nm);
    write_matrix_csv(rec.path("jsi_counts.csv"), "signal_nm", smid, "idler_nm", imid,
                     "count", hist.jsi_counts);
    rec.record("jsi_counts.csv");

    Eigen::MatrixXd jsi_model = expected_jsi_masses(rc.params, rc.tofs, hset);
    write_matrix_csv(rec.path("jsi_model.csv"), "signal_nm", smid, "idler_nm", imid,
                     "mass", jsi_model);
    rec.record("jsi_model.csv");
    double js = js_divergence(hist.jsi_counts, jsi_model);

    Eigen::MatrixXd pair_model = expected_pair_masses(rc.params, rc.bank,
                                                      rc.tofs.idler, -1);
    write_matrix_csv(rec.path("pjk_model.csv"), "j", idx, "k", idx, "mass", pair_model);
    rec.record("pjk_model.csv");

    // per-segment four-fold rates
    std::vector<double> seg_idx, seg_tau, seg_pulses, seg_four;
    {
        std::vector<double> per_seg(n_segments, 0.0);
        for (const CoincidenceEvent& ev : fourfolds) per_seg[ev.segment] += 1.0;
        for (int i = 0; i < n_segments; ++i) {
            seg_idx.push_back(i);
            seg_tau.push_back(full.segments()[i].tau_ps);
            seg_pulses.push_back(static_cast<double>(full.segments()[i].n_pulses));
            seg_four.push_back(per_seg[i]);
        }
    }
    write_columns_csv(rec.path("segment_rates.csv"),
                      {"segment", "tau_ps", "n_pulses", "fourfolds"},
                      {seg_idx, seg_tau, seg_pulses, seg_four});
    rec.record("segment_rates.csv");

    auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    Summary s{{"pulses", d(n_full)},
              {"fourfolds", d(fourfolds.size())},
              {"fourfolds_binned", d(hist.fourfolds_binned)},
              {"out_of_bank", d(hist.out_of_bank)},
              {"doubles", d(doubles.size())},
              {"doubles_binned", d(hist.doubles_binned)},
              {"other_doubles", d(hist.other_doubles)},
              {"out_of_window", d(hist.out_of_window)},
              {"window_rejects", d(st4.window_rejects)},
              {"surplus_tags", d(st4.surplus_tags)},
              {"peak_pulse_tags", d(st4.peak_pulse_tags)},
              {"js_divergence", js}};

    double blocked_rate = 0.0;
    bool have_blocked = files.size() == 3;
    if (have_blocked) {
        Eigen::MatrixXd bcounts[2];
        std::uint64_t bpulses[2] = {0, 0};
        std::uint64_t bfour[2] = {0, 0};
        for (int b = 0; b < 2; ++b) {
            TagReader reader(files[1 + b]);
            CoincidenceStats st;
            std::vector<CoincidenceEvent> four =
                find_coincidences(reader, rc.coincidence, 4, &st);
            TagHistograms bh = histograms_from_tags(four, {},
                                                    static_cast<int>(reader.segments().size()),
                                                    rc.tofs, rc.bank, hset, false);
            bcounts[b] = bh.pjk_counts;
            bfour[b] = four.size();
            for (const SegmentInfo& seg : reader.segments()) bpulses[b] += seg.n_pulses;
        }
        PjkGoodness fit = pjk_goodness(hist.pjk_counts, n_full, bcounts[0], bpulses[0],
                                       bcounts[1], bpulses[1], rc.params, rc.bank,
                                       rc.tofs.idler, rc.eta);
        write_matrix_csv(rec.path("pjk_corrected.csv"), "j", idx, "k", idx,
                         "corrected", fit.corrected);
        rec.record("pjk_corrected.csv");
        write_matrix_csv(rec.path("pjk_expected.csv"), "j", idx, "k", idx, "expected",
                         fit.expected);
        rec.record("pjk_expected.csv");
        write_matrix_csv(rec.path("pjk_variance.csv"), "j", idx, "k", idx, "variance",
                         fit.variance);
        rec.record("pjk_variance.csv");
        s.emplace_back("chi2", fit.chi2);
        s.emplace_back("chi2_dof", fit.dof);
        s.emplace_back("chi2_p_value", fit.p_value);
        double fr1 = bpulses[0] ? d(bfour[0]) / d(bpulses[0]) : 0.0;
        double fr2 = bpulses[1] ? d(bfour[1]) / d(bpulses[1]) : 0.0;
        blocked_rate = fr1 + fr2;
        double full_rate = n_full ? d(fourfolds.size()) / d(n_full) : 0.0;
        s.emplace_back("blocked_fraction",
                       full_rate > 0.0 ? blocked_rate / full_rate : 0.0);
    }

    if (n_segments >= 3) {
        FringeCurve raw;
        raw.tau = seg_tau;
        raw.label = "measured";
        for (int i = 0; i < n_segments; ++i) {
            raw.probability.push_back(seg_pulses[i] > 0.0 ? seg_four[i] / seg_pulses[i]
                                                          : 0.0);
        }
        FringeCurve corrected = have_blocked
                                    ? background_correct_level(raw, blocked_rate)
                                    : background_correct(raw, rc.background);
        write_columns_csv(rec.path("fringe_measured.csv"),
                          {"tau_ps", "rate_per_pulse", "p_corrected"},
                          {raw.tau, raw.probability, corrected.probability});
        rec.record("fringe_measured.csv");
        s.emplace_back("fringe_visibility_corrected", fringe_visibility(corrected));
    }

    write_summary_csv(rec, "analysis_summary.csv", s);
    say(quiet, "analyze: " + std::to_string(fourfolds.size()) + " four-folds, JS " +
                   fmt(js));
    return s;
}

Summary cmd_calibrate(const RunConfig& rc, RunRecorder& rec, int n_points,
                      bool quiet) {
    std::vector<double> c_arm, c_lambda, c_time;
    Summary s;
    const char* names[2] = {"signal", "idler"};
    int channels[2] = {kSignal1, kIdlerC};
    for (int a = 0; a < 2; ++a) {
        const TofsChannelConfig& arm = rc.tofs.arm(channels[a]);
        auto scan = synth_calibration_scan(arm, n_points, rc.seed + a);
        CalibrationFit fit = calibrate_dispersion(scan);
        double roundtrip = 0.0;
        for (const auto& [lambda, time] : scan) {
            c_arm.push_back(a);
            c_lambda.push_back(lambda);
            c_time.push_back(time);
            TimeTag tag{static_cast<std::uint64_t>(std::llround(time)),
                        static_cast<std::uint8_t>(channels[a])};
            double back = tag_wavelength(arm, rc.tofs.rep_period_ps, tag);
            roundtrip = std::max(roundtrip, std::abs(back - lambda));
        }
        std::string p = names[a];
        s.emplace_back(p + "_slope_ps_nm", fit.slope);
        s.emplace_back(p + "_slope_stderr", fit.stderr_slope);
        s.emplace_back(p + "_intercept_ps", fit.intercept);
        s.emplace_back(p + "_intercept_stderr", fit.stderr_intercept);
        s.emplace_back(p + "_rms_residual_ps", fit.rms_residual);
        s.emplace_back(p + "_roundtrip_max_nm", roundtrip);
    }
    s.emplace_back("scan_points", n_points);
    write_columns_csv(rec.path("calibration_scan.csv"), {"arm", "lambda_nm", "time_ps"},
                      {c_arm, c_lambda, c_time});
    rec.record("calibration_scan.csv");
    write_summary_csv(rec, "calibration_summary.csv", s);
    say(quiet, "calibrate: slopes " + fmt(s[0].second) + " / " + fmt(s[6].second) +
                   " ps/nm");
    return s;
}

Summary cmd_report(const RunConfig& rc, RunRecorder& rec, bool quiet) {
    Summary all;
    append(all, cmd_jsi(rc, rec, quiet));
    append(all, cmd_fringes(rc, rec, quiet));
    append(all, cmd_schmidt(rc, rec, quiet));
    append(all, cmd_purity(rc, rec, quiet));
    append(all, cmd_mismatch(rc, rec, quiet));
    append(all, cmd_select(rc, rec, quiet));

    // the coincidence pipeline runs at zero swap delay with each source
    // blocked in turn for the background correction
    SynthSettings ss = rc.synth;
    ss.experiment = Experiment::swap_jsi;
    ss.block_source = 0;
    append(all, synth_run(rc, rec, ss, rc.seed, "full.swtg", {}, false, quiet));
    ss.block_source = 1;
    append(all, synth_run(rc, rec, ss, rc.seed + 1, "blocked1.swtg", {}, false, quiet));
    ss.block_source = 2;
    append(all, synth_run(rc, rec, ss, rc.seed + 2, "blocked2.swtg", {}, false, quiet));
    append(all, cmd_analyze(rc, rec,
                            {rec.path("full.swtg"), rec.path("blocked1.swtg"),
                             rec.path("blocked2.swtg")},
                            quiet));
    append(all, cmd_calibrate(rc, rec, 64, quiet));
    write_summary_csv(rec, "report_summary.csv", all);
    return all;
}

int run_validate(const ConfigMap& map, bool quiet) {
    ValidationReport report = validate_config(map);
    if (!quiet) {
        for (const std::string& line : report.info) std::cout << line << '\n';
    }
    for (const std::string& line : report.warnings) {
        std::cout << "warning: " << line << '\n';
    }
    for (const std::string& line : report.errors) {
        std::cerr << "error: config: " << line << '\n';
    }
    if (!report.ok) return static_cast<int>(ExitCode::config);
    say(quiet, "config valid, " + std::to_string(report.warnings.size()) +
                   " warnings");
    return static_cast<int>(ExitCode::ok);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-multiplexed entanglement swap model and pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    std::vector<std::string> sets;
    bool quiet = false;
    app.add_option("--config", config_path, "config file (key = value)");
    app.add_option("--out", out_override, "output directory override");
    auto* seed_opt = app.add_option("--seed", seed_override, "seed override");
    app.add_option("--set", sets, "config override key=value, repeatable");
    app.add_flag("--quiet", quiet, "suppress progress output");

    auto* sub_jsi = app.add_subcommand("jsi", "source and heralded joint spectra");
    auto* sub_fringes =
        app.add_subcommand("fringes", "per-pair and integrated delay fringes");
    auto* sub_schmidt = app.add_subcommand("schmidt", "mode decomposition");
    auto* sub_purity = app.add_subcommand("purity", "heralded purity and fidelity");
    auto* sub_mismatch =
        app.add_subcommand("mismatch", "two-source distinguishability fringes");
    auto* sub_select =
        app.add_subcommand("select-modes", "quasi-orthogonal channel selection");
    auto* sub_synth = app.add_subcommand("synth", "synthesize a time-tag stream");
    auto* sub_analyze = app.add_subcommand("analyze", "histogram a time-tag stream");
    auto* sub_calibrate =
        app.add_subcommand("calibrate", "dispersion fit from a simulated sweep");
    auto* sub_report = app.add_subcommand("report", "full model-to-pipeline run");
    auto* sub_validate = app.add_subcommand("validate", "check a config, run nothing");

    std::string tag_name = "tags.swtg";
    bool dump_csv = false;
    int scan_n = 0;
    double scan_span = 0.0;
    sub_synth->add_option("--tag-file", tag_name, "output tag file name");
    sub_synth->add_flag("--csv", dump_csv, "also dump tags as CSV");
    sub_synth->add_option("--scan", scan_n, "delay-scan segments (fringe experiment)");
    sub_synth->add_option("--scan-span", scan_span, "delay scan half-span, ps");

    std::vector<std::string> tag_files;
    sub_analyze->add_option("files", tag_files, "tag files: full [blocked1 blocked2]")
        ->expected(1, 3);

    int cal_points = 64;
    sub_calibrate->add_option("--points", cal_points, "sweep points per arm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config);
    }

    try {
        if (config_path.empty()) {
            throw ConfigError("no config file given (--config PATH)");
        }
        ConfigMap map = ConfigMap::parse_file(config_path);
        map.apply_environment();
        for (const std::string& kv : sets) {
            std::size_t eq = kv.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            }
            map.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!out_override.empty()) map.set("run.out_dir", out_override);
        if (seed_opt->count() > 0) map.set("run.seed", std::to_string(seed_override));

        if (sub_validate->parsed()) return run_validate(map, quiet);

        RunConfig rc = RunConfig::from_map(map);
        auto t0 = std::chrono::steady_clock::now();
        RunRecorder rec(rc.out_dir, map.canonical_text(), rc.seed);

        if (sub_jsi->parsed()) {
            cmd_jsi(rc, rec, quiet);
        } else if (sub_fringes->parsed()) {
            cmd_fringes(rc, rec, quiet);
        } else if (sub_schmidt->parsed()) {
            cmd_schmidt(rc, rec, quiet);
        } else if (sub_purity->parsed()) {
            cmd_purity(rc, rec, quiet);
        } else if (sub_mismatch->parsed()) {
            cmd_mismatch(rc, rec, quiet);
        } else if (sub_select->parsed()) {
            cmd_select(rc, rec, quiet);
        } else if (sub_synth->parsed()) {
            std::vector<double> scan;
            if (scan_n > 1) {
                double span = scan_span > 0.0
                                  ? scan_span
                                  : (rc.tau.empty() ? 0.0 : std::abs(rc.tau.back()));
                if (!(span > 0.0)) throw ConfigError("synth: scan needs a span");
                for (int i = 0; i < scan_n; ++i) {
                    scan.push_back(-span + 2.0 * span * i / (scan_n - 1));
                }
            }
            synth_run(rc, rec, rc.synth, rc.seed, tag_name, scan, dump_csv, quiet);
        } else if (sub_analyze->parsed()) {
            cmd_analyze(rc, rec, tag_files, quiet);
        } else if (sub_calibrate->parsed()) {
            cmd_calibrate(rc, rec, cal_points, quiet);
        } else if (sub_report->parsed()) {
            cmd_report(rc, rec, quiet);
        }

        double elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        std::string manifest = rec.finalize(elapsed);
        say(quiet, "manifest: " + manifest);
        return static_cast<int>(ExitCode::ok);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config);
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numeric);
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io);
    } catch (const std::exception& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numeric);
    }
}
