#include "specswap/swap_mixed.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "specswap/errors.hpp"
#include "specswap/units.hpp"

namespace specswap {

namespace {

using cd = std::complex<double>;

// Gram matrix of raw amplitude slices f(., Omega_a) under grid weights.
// All ensemble bookkeeping derives from this one discretization so the
// ensemble and the direct-quadrature kernel agree to rounding.
Eigen::MatrixXcd slice_gram(const JsaParams& params, const SpectralGrid& grid,
                            const std::vector<double>& freqs) {
    int m = static_cast<int>(freqs.size());
    Eigen::MatrixXcd slices(grid.n, m);
    for (int a = 0; a < m; ++a) {
        for (int i = 0; i < grid.n; ++i) {
            slices(i, a) = params.amplitude(grid.point(i), freqs[a]);
        }
    }
    Eigen::MatrixXcd weighted = slices;
    for (int i = 0; i < grid.n; ++i) weighted.row(i) *= grid.weight(i);
    return slices.adjoint() * weighted;
}

double far_tau_baseline(const FringeCurve& curve) {
    double tmax = 0.0;
    for (double t : curve.tau) tmax = std::max(tmax, std::abs(t));
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < curve.tau.size(); ++i) {
        if (std::abs(curve.tau[i]) >= 0.9 * tmax) {
            acc += curve.probability[i];
            ++count;
        }
    }
    if (count == 0) throw NumericError("fringe curve has no far-delay samples");
    return acc / count;
}

}  // namespace

double mixed_herald_probability(const JsaParams& params, const FilterBank& bank,
                                int j, int k) {
    params.validate();
    const Filter& fj = bank.at_index(j);
    const Filter& fk = bank.at_index(k);
    double p = 0.0;
    for (std::size_t m = 0; m < fj.nodes.size(); ++m) {
        for (std::size_t n = 0; n < fk.nodes.size(); ++n) {
            p += fj.weights[m] * fk.weights[n] *
                 params.herald_density(fj.nodes[m], fk.nodes[n]);
        }
    }
    return p;
}

MixedHeralded mixed_heralded_state(const JsaParams& params, const FilterBank& bank,
                                   int j, int k, const SpectralGrid& grid) {
    const Filter& fj = bank.at_index(j);
    const Filter& fk = bank.at_index(k);
    MixedHeralded state;
    state.j = j;
    state.k = k;
    state.grid = grid;
    state.p_jk = mixed_herald_probability(params, bank, j, k);
    if (state.p_jk <= 1e-12) {
        throw NumericError("null herald: p_jk " + std::to_string(state.p_jk) +
                           " below threshold for bins (" + std::to_string(j) +
                           "," + std::to_string(k) + ")");
    }

    int mj = static_cast<int>(fj.nodes.size());
    int mk = static_cast<int>(fk.nodes.size());
    state.split = mj;
    state.node_freqs = fj.nodes;
    state.node_freqs.insert(state.node_freqs.end(), fk.nodes.begin(), fk.nodes.end());
    Eigen::MatrixXcd gram = slice_gram(params, grid, state.node_freqs);

    for (int a = 0; a < mj + mk; ++a) {
        double nsq = std::real(gram(a, a));
        if (nsq < 1e-24) {
            throw NumericError("degenerate herald node at " +
                               std::to_string(state.node_freqs[a]) + " rad/ps");
        }
        Eigen::VectorXcd mode(grid.n);
        for (int i = 0; i < grid.n; ++i) {
            mode(i) = params.amplitude(grid.point(i), state.node_freqs[a]);
        }
        state.node_modes.push_back(mode / std::sqrt(nsq));
    }

    double wsum = 0.0;
    for (int m = 0; m < mj; ++m) {
        for (int n = 0; n < mk; ++n) {
            int a = m;
            int b = mj + n;
            // ||A||^2 = 2 [ g(aa) g(bb) - |g(ab)|^2 ] for the raw slices
            double nsq = 2.0 * (std::real(gram(a, a)) * std::real(gram(b, b)) -
                                std::norm(gram(a, b)));
            double w = fj.weights[m] * fk.weights[n] * nsq;
            if (w <= 0.0) continue;
            double csq = 1.0 - std::norm(gram(a, b)) /
                                   (std::real(gram(a, a)) * std::real(gram(b, b)));
            if (csq < 1e-12) continue;  // weight ~ csq, negligible
            MixedHeralded::Member member;
            member.a = a;
            member.b = b;
            member.weight = w;
            member.norm_sq = nsq;
            state.members.push_back(member);
            wsum += w;
        }
    }
    if (state.members.empty() || wsum <= 0.0) {
        throw NumericError("null herald: ensemble carries no weight");
    }
    for (auto& member : state.members) member.weight /= wsum;
    return state;
}

MixedObservables mixed_observables(const JsaParams& params, const MixedHeralded& state,
                                   const SpectralGrid& grid1, const SpectralGrid& grid2,
                                   const std::vector<double>& tau) {
    MixedObservables out;
    out.jsi.grid1 = grid1;
    out.jsi.grid2 = grid2;
    out.jsi.values = Eigen::MatrixXd::Zero(grid1.n, grid2.n);

    // modes on the requested axes (state.grid may differ)
    std::vector<Eigen::VectorXcd> modes1, modes2;
    for (double freq : state.node_freqs) {
        modes1.push_back(conditional_mode(params, freq, grid1).values);
        modes2.push_back(conditional_mode(params, freq, grid2).values);
    }

    for (const auto& member : state.members) {
        const Eigen::VectorXcd& ua1 = modes1[member.a];
        const Eigen::VectorXcd& ub1 = modes1[member.b];
        const Eigen::VectorXcd& ua2 = modes2[member.a];
        const Eigen::VectorXcd& ub2 = modes2[member.b];
        cd o = overlap_integral(grid1, ua1, ub1);
        double csq = 1.0 - std::norm(o);
        double scale = member.weight / (2.0 * csq);
        for (int i = 0; i < grid1.n; ++i) {
            for (int jcol = 0; jcol < grid2.n; ++jcol) {
                cd amp = ua1(i) * ub2(jcol) - ub1(i) * ua2(jcol);
                out.jsi.values(i, jcol) += scale * std::norm(amp);
            }
        }
    }

    out.fringe.tau = tau;
    out.fringe.model = FringeModel::exact;
    out.fringe.label = "mixed";
    out.fringe.probability.assign(tau.size(), 0.0);
    for (const auto& member : state.members) {
        double wa = state.node_freqs[member.a];
        double wb = state.node_freqs[member.b];
        double osq = std::norm(params.mode_overlap(wa, wb));
        if (1.0 - osq < 1e-12) continue;
        double domega = params.cond_center(wa) - params.cond_center(wb);
        for (std::size_t it = 0; it < tau.size(); ++it) {
            out.fringe.probability[it] +=
                member.weight *
                fringe_kernel_exact(params.sigma_s, domega, osq, tau[it]);
        }
    }
    return out;
}

Eigen::MatrixXcd reconstruct_kernel(const MixedHeralded& state) {
    int n = state.grid.n;
    Eigen::MatrixXcd kernel = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (const auto& member : state.members) {
        const Eigen::VectorXcd& ua = state.node_modes[member.a];
        const Eigen::VectorXcd& ub = state.node_modes[member.b];
        cd o_ab = overlap_integral(state.grid, ua, ub);
        double nsq = 2.0 * (1.0 - std::norm(o_ab));
        Eigen::VectorXcd amp(n * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                amp(i * n + j) = (ua(i) * ub(j) - ub(i) * ua(j)) / std::sqrt(nsq);
            }
        }
        kernel.noalias() += member.weight * amp * amp.adjoint();
    }
    return kernel;
}

Eigen::MatrixXcd kernel_by_quadrature(const JsaParams& params, const FilterBank& bank,
                                      int j, int k, const SpectralGrid& grid) {
    const Filter& fj = bank.at_index(j);
    const Filter& fk = bank.at_index(k);
    int n = grid.n;
    int mj = static_cast<int>(fj.nodes.size());
    int mk = static_cast<int>(fk.nodes.size());

    std::vector<double> freqs = fj.nodes;
    freqs.insert(freqs.end(), fk.nodes.begin(), fk.nodes.end());
    Eigen::MatrixXcd slices(n, mj + mk);
    for (int a = 0; a < mj + mk; ++a) {
        for (int i = 0; i < n; ++i) {
            slices(i, a) = params.amplitude(grid.point(i), freqs[a]);
        }
    }

    // normalization chosen so the kernel matches the ensemble route: half
    // the total weight of the antisymmetrized members on this grid
    Eigen::MatrixXcd gram = slice_gram(params, grid, freqs);
    double total = 0.0;
    for (int m = 0; m < mj; ++m) {
        for (int nn = 0; nn < mk; ++nn) {
            total += fj.weights[m] * fk.weights[nn] *
                     (std::real(gram(m, m)) * std::real(gram(mj + nn, mj + nn)) -
                      std::norm(gram(m, mj + nn)));
        }
    }
    if (total <= 0.0) throw NumericError("null herald in quadrature kernel");

    Eigen::MatrixXcd kernel = Eigen::MatrixXcd::Zero(n * n, n * n);
    Eigen::VectorXcd amp(n * n);
    for (int m = 0; m < mj; ++m) {
        for (int nn = 0; nn < mk; ++nn) {
            double w = fj.weights[m] * fk.weights[nn];
            for (int i = 0; i < n; ++i) {
                for (int jj = 0; jj < n; ++jj) {
                    amp(i * n + jj) = slices(i, m) * slices(jj, mj + nn) -
                                      slices(i, mj + nn) * slices(jj, m);
                }
            }
            kernel.noalias() += (w / (2.0 * total)) * amp * amp.adjoint();
        }
    }
    return kernel;
}

double fidelity_with_pure(const JsaParams& params, const MixedHeralded& state) {
    // pure reference: antisymmetrized modes at the mean node frequency of
    // each filter's quadrature (the filter centers)
    double cj = 0.0, ck = 0.0;
    for (int a = 0; a < state.split; ++a) cj += state.node_freqs[a];
    for (int b = state.split; b < static_cast<int>(state.node_freqs.size()); ++b) {
        ck += state.node_freqs[b];
    }
    cj /= state.split;
    ck /= static_cast<double>(state.node_freqs.size() - state.split);
    Eigen::VectorXcd uj = conditional_mode(params, cj, state.grid).values;
    Eigen::VectorXcd uk = conditional_mode(params, ck, state.grid).values;
    double c_jk = 1.0 - std::norm(overlap_integral(state.grid, uj, uk));
    if (c_jk < 1e-12) throw NumericError("null pure reference state");

    double fidelity = 0.0;
    for (const auto& member : state.members) {
        const Eigen::VectorXcd& ua = state.node_modes[member.a];
        const Eigen::VectorXcd& ub = state.node_modes[member.b];
        double c_ab = 1.0 - std::norm(overlap_integral(state.grid, ua, ub));
        cd jm = overlap_integral(state.grid, uj, ua);
        cd kn = overlap_integral(state.grid, uk, ub);
        cd jn = overlap_integral(state.grid, uj, ub);
        cd km = overlap_integral(state.grid, uk, ua);
        cd inner = (jm * kn - jn * km) / std::sqrt(c_jk * c_ab);
        fidelity += member.weight * std::norm(inner);
    }
    return fidelity;
}

PurityReport purity_and_hom(const JsaParams& params, const FilterBank& bank,
                            int j, int k) {
    params.validate();
    const Filter& fj = bank.at_index(j);
    const Filter& fk = bank.at_index(k);

    auto filtered_trace = [&](const Filter& f) {
        double tr = 0.0;
        for (std::size_t m = 0; m < f.nodes.size(); ++m) {
            tr += f.weights[m] * params.rho_idler(f.nodes[m], f.nodes[m]);
        }
        return tr;
    };
    auto cross = [&](const Filter& fa, const Filter& fb) {
        double acc = 0.0;
        for (std::size_t m = 0; m < fa.nodes.size(); ++m) {
            for (std::size_t n = 0; n < fb.nodes.size(); ++n) {
                double r = params.rho_idler(fa.nodes[m], fb.nodes[n]);
                acc += fa.weights[m] * fb.weights[n] * r * r;
            }
        }
        return acc;
    };

    double trj = filtered_trace(fj);
    double trk = filtered_trace(fk);
    if (trj <= 0.0 || trk <= 0.0) throw NumericError("herald filter sees no marginal");
    PurityReport report;
    report.purity_j = cross(fj, fj) / (trj * trj);
    report.purity_k = cross(fk, fk) / (trk * trk);
    report.hom_visibility = cross(fj, fk) / (trj * trk);
    return report;
}

MismatchReport source_mismatch(const JsaParams& params1, const JsaParams& params2,
                               double Omega_j, double Omega_k,
                               const SpectralGrid& grid_s, const SpectralGrid& grid_i,
                               int phase_points) {
    if (phase_points < 2) throw ConfigError("phase scan needs at least 2 points");
    MismatchReport report;

    ConditionalMode m1j = conditional_mode(params1, Omega_j, grid_s);
    ConditionalMode m2j = conditional_mode(params2, Omega_j, grid_s);
    ConditionalMode m1k = conditional_mode(params1, Omega_k, grid_s);
    ConditionalMode m2k = conditional_mode(params2, Omega_k, grid_s);
    cd oj = overlap_integral(grid_s, m1j.values, m2j.values);
    cd ok = overlap_integral(grid_s, m1k.values, m2k.values);
    report.v_jk = std::abs(oj * ok);

    AmplitudeMatrix f1 = build_jsa(params1, grid_s, grid_i);
    AmplitudeMatrix f2 = build_jsa(params2, grid_s, grid_i);
    cd big = overlap_integral(f1, f2);
    report.overlap_f1_f2 = std::abs(big);

    report.phase.resize(phase_points);
    report.fringe_plus.resize(phase_points);
    report.fringe_minus.resize(phase_points);
    for (int i = 0; i < phase_points; ++i) {
        double phi = kTwoPi * i / phase_points;
        cd rotated = big * cd(std::cos(phi), std::sin(phi));
        report.phase[i] = phi;
        report.fringe_plus[i] = 0.5 * (1.0 + std::real(rotated));
        report.fringe_minus[i] = 0.5 * (1.0 - std::real(rotated));
    }
    report.contrast = std::abs(big);
    return report;
}

FringeCurve background_correct(const FringeCurve& raw, const BackgroundModel& bg) {
    if (bg.fraction_source1 < 0.0 || bg.fraction_source1 > 1.0 ||
        bg.fraction_source2 < 0.0 || bg.fraction_source2 > 1.0 ||
        bg.fraction_source1 + bg.fraction_source2 >= 1.0) {
        throw ConfigError("background fractions must lie in [0,1] and sum below 1");
    }
    if (raw.probability.empty()) throw NumericError("empty fringe curve");
    double mean = 0.0;
    for (double v : raw.probability) mean += v;
    mean /= static_cast<double>(raw.probability.size());
    return background_correct_level(
        raw, (bg.fraction_source1 + bg.fraction_source2) * mean);
}

FringeCurve background_correct_level(const FringeCurve& raw, double flat_level) {
    if (flat_level < 0.0) throw NumericError("negative background level");
    double lo = raw.probability.empty() ? 0.0 : raw.probability[0];
    for (double v : raw.probability) lo = std::min(lo, v);
    if (flat_level > 0.0 && flat_level >= lo) {
        throw NumericError("background level " + std::to_string(flat_level) +
                           " exceeds the fringe minimum " + std::to_string(lo));
    }
    FringeCurve corrected = raw;
    for (double& v : corrected.probability) v -= flat_level;
    if (flat_level > 0.0) {
        double baseline = far_tau_baseline(corrected);
        if (baseline <= 0.0) {
            throw NumericError("corrected fringe baseline is not positive");
        }
        for (double& v : corrected.probability) v *= 0.5 / baseline;
    }
    return corrected;
}

}  // namespace specswap
