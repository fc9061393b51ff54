#include "specswap/swap_pure.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "specswap/errors.hpp"
#include "specswap/units.hpp"

namespace specswap {

namespace {

constexpr double kNullStateThreshold = 1e-12;

}  // namespace

ConditionalMode conditional_mode(const JsaParams& params, double Omega,
                                 const SpectralGrid& grid) {
    params.validate();
    ConditionalMode mode;
    mode.grid = grid;
    mode.herald = Omega;
    mode.center = params.cond_center(Omega);
    mode.width = params.cond_width();
    mode.values.resize(grid.n);
    double norm_sq = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        mode.values(i) = params.amplitude(grid.point(i), Omega);
        norm_sq += std::norm(mode.values(i)) * grid.weight(i);
    }
    if (norm_sq < 1e-24) {  // amplitude norm below 1e-12
        throw NumericError("degenerate herald: idler frequency " +
                           std::to_string(Omega) + " rad/ps carries no amplitude");
    }
    mode.values /= std::sqrt(norm_sq);
    return mode;
}

double herald_probability(const JsaParams& params, double Omega_j, double Omega_k) {
    return params.herald_density(Omega_j, Omega_k);
}

bool herald_is_null(const JsaParams& params, double Omega_j, double Omega_k) {
    double osq = std::norm(params.mode_overlap(Omega_j, Omega_k));
    return 1.0 - osq < kNullStateThreshold;
}

HeraldedBellPure heralded_pair(const JsaParams& params, int j, int k,
                               double Omega_j, double Omega_k,
                               const SpectralGrid& grid) {
    HeraldedBellPure pair;
    pair.j = j;
    pair.k = k;
    pair.mode_j = conditional_mode(params, Omega_j, grid);
    pair.mode_k = conditional_mode(params, Omega_k, grid);
    std::complex<double> o =
        overlap_integral(grid, pair.mode_j.values, pair.mode_k.values);
    pair.overlap_sq = std::norm(o);
    pair.c_jk = 1.0 - pair.overlap_sq;
    pair.p_jk = herald_probability(params, Omega_j, Omega_k);
    return pair;
}

HeraldedJsi heralded_jsi(const JsaParams& params, double Omega_j, double Omega_k,
                         const SpectralGrid& grid1, const SpectralGrid& grid2) {
    ConditionalMode mj1 = conditional_mode(params, Omega_j, grid1);
    ConditionalMode mk1 = conditional_mode(params, Omega_k, grid1);
    ConditionalMode mj2 = conditional_mode(params, Omega_j, grid2);
    ConditionalMode mk2 = conditional_mode(params, Omega_k, grid2);
    std::complex<double> o = overlap_integral(grid1, mj1.values, mk1.values);
    double c = 1.0 - std::norm(o);
    if (c < kNullStateThreshold) {
        throw NumericError("null heralded state: identical heralds leave no "
                           "antisymmetric component");
    }
    HeraldedJsi out;
    out.grid1 = grid1;
    out.grid2 = grid2;
    out.values.resize(grid1.n, grid2.n);
    double total = 0.0;
    for (int a = 0; a < grid1.n; ++a) {
        for (int b = 0; b < grid2.n; ++b) {
            std::complex<double> amp =
                mj1.values(a) * mk2.values(b) - mk1.values(a) * mj2.values(b);
            out.values(a, b) = std::norm(amp);
            total += out.values(a, b) * grid1.weight(a) * grid2.weight(b);
        }
    }
    out.values /= total;
    return out;
}

double fringe_kernel_exact(double sigma, double domega, double overlap_sq,
                           double tau) {
    double c = 1.0 - overlap_sq;
    if (c < kNullStateThreshold) {
        throw NumericError("null heralded state: fringe kernel undefined at "
                           "unit mode overlap");
    }
    double env = std::exp(-sigma * sigma * tau * tau);
    return 0.5 * (1.0 + env * (std::cos(domega * tau) - overlap_sq) / c);
}

double fringe_kernel_approx(double sigma, double domega, double tau) {
    double env = std::exp(-sigma * sigma * tau * tau);
    return 0.5 * (1.0 + env * std::cos(domega * tau));
}

FringeCurve fringe_pure(const JsaParams& params, double Omega_j, double Omega_k,
                        const std::vector<double>& tau, FringeModel model) {
    double overlap_sq = std::norm(params.mode_overlap(Omega_j, Omega_k));
    double domega = params.cond_center(Omega_j) - params.cond_center(Omega_k);
    if (model == FringeModel::exact && 1.0 - overlap_sq < kNullStateThreshold) {
        throw NumericError("null heralded state: fringe kernel undefined at "
                           "unit mode overlap");
    }
    FringeCurve curve;
    curve.tau = tau;
    curve.model = model;
    curve.probability.resize(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        curve.probability[i] =
            (model == FringeModel::exact)
                ? fringe_kernel_exact(params.sigma_s, domega, overlap_sq, tau[i])
                : fringe_kernel_approx(params.sigma_s, domega, tau[i]);
    }
    return curve;
}

std::vector<double> default_tau_grid(const JsaParams& params, double span_inv_sigma,
                                     int n) {
    if (n < 2) throw ConfigError("tau grid needs at least 2 points");
    double half = span_inv_sigma / params.sigma_s;
    std::vector<double> tau(n);
    for (int i = 0; i < n; ++i) {
        tau[i] = -half + 2.0 * half * i / (n - 1);
    }
    return tau;
}

IntegratedObservables integrated_observables(const JsaParams& params,
                                             const std::vector<double>& bin_centers,
                                             const SpectralGrid& grid1,
                                             const SpectralGrid& grid2,
                                             const std::vector<double>& tau) {
    params.validate();
    int nb = static_cast<int>(bin_centers.size());
    if (nb < 2) throw ConfigError("need at least two herald bins");
    double spacing = bin_centers[1] - bin_centers[0];
    for (int i = 1; i < nb; ++i) {
        if (std::abs(bin_centers[i] - bin_centers[i - 1] - spacing) >
            1e-9 * std::abs(spacing)) {
            throw ConfigError("herald bins must be uniformly spaced");
        }
    }
    if (spacing <= 0.0) throw ConfigError("herald bins must increase");

    // coverage of the idler marginal (std sigma_i * K) by the tiled window
    double marg = params.marginal_sigma_i();
    double lo = bin_centers.front() - 0.5 * spacing;
    double hi = bin_centers.back() + 0.5 * spacing;
    auto cdf = [&](double w) {
        return 0.5 * (1.0 + std::erf((w - params.omega0) / (marg * std::sqrt(2.0))));
    };
    double coverage = cdf(hi) - cdf(lo);
    if (coverage < 0.999) {
        throw NumericError("herald bins cover only " + std::to_string(coverage) +
                           " of the idler marginal");
    }

    IntegratedObservables out;
    out.grid1 = grid1;
    out.grid2 = grid2;
    out.bin_centers = bin_centers;
    out.coverage = coverage;
    out.tau = tau;

    // p matrix and conditional-mode table at the bin centers
    out.p = Eigen::MatrixXd::Zero(nb, nb);
    std::vector<ConditionalMode> modes1(nb), modes2(nb);
    for (int a = 0; a < nb; ++a) {
        modes1[a] = conditional_mode(params, bin_centers[a], grid1);
        modes2[a] = conditional_mode(params, bin_centers[a], grid2);
        for (int b = 0; b < nb; ++b) {
            out.p(a, b) = herald_probability(params, bin_centers[a], bin_centers[b]);
        }
    }
    double measure = spacing * spacing;

    // sum route: JSI
    out.jsi_sum = Eigen::MatrixXd::Zero(grid1.n, grid2.n);
    double wsum = 0.0;
    for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) {
            if (a == b) continue;
            double w = out.p(a, b) * measure;
            wsum += w;
            double c = 1.0 - std::norm(params.mode_overlap(bin_centers[a],
                                                           bin_centers[b]));
            if (c < kNullStateThreshold) continue;
            double scale = w / (2.0 * c);
            for (int i = 0; i < grid1.n; ++i) {
                std::complex<double> ja = modes1[a].values(i);
                std::complex<double> jb = modes1[b].values(i);
                for (int jcol = 0; jcol < grid2.n; ++jcol) {
                    std::complex<double> amp = ja * modes2[b].values(jcol) -
                                               jb * modes2[a].values(jcol);
                    out.jsi_sum(i, jcol) += scale * std::norm(amp);
                }
            }
        }
    }
    out.total_weight_ordered = wsum;

    // closed route: JSI from the signal density matrix
    SpectralGrid gi = default_idler_grid(params, grid1.n, 5.0);
    AmplitudeMatrix jsa = build_jsa(params, grid1, gi);
    DensityMatrix rho_s = reduced_density(jsa, Side::signal);
    out.jsi_closed.resize(grid1.n, grid2.n);
    if (!grid1.same_axis(grid2)) {
        throw ConfigError("integrated observables expect one shared signal axis");
    }
    for (int i = 0; i < grid1.n; ++i) {
        for (int j = 0; j < grid2.n; ++j) {
            double d = std::real(rho_s.values(i, i)) * std::real(rho_s.values(j, j)) -
                       std::norm(rho_s.values(i, j));
            out.jsi_closed(i, j) = 0.5 * d;
        }
    }

    // JSI discrepancy on unit-normalized densities
    double sum_a = 0.0, sum_b = 0.0;
    for (int i = 0; i < grid1.n; ++i) {
        for (int j = 0; j < grid2.n; ++j) {
            sum_a += out.jsi_sum(i, j) * grid1.weight(i) * grid2.weight(j);
            sum_b += out.jsi_closed(i, j) * grid1.weight(i) * grid2.weight(j);
        }
    }
    double peak = 0.0, worst = 0.0;
    if (sum_a > 0.0 && sum_b > 0.0) {
        for (int i = 0; i < grid1.n; ++i) {
            for (int j = 0; j < grid2.n; ++j) {
                double a = out.jsi_sum(i, j) / sum_a;
                double b = out.jsi_closed(i, j) / sum_b;
                peak = std::max(peak, b);
                worst = std::max(worst, std::abs(a - b));
            }
        }
    }
    out.jsi_max_rel_discrepancy = peak > 0.0 ? worst / peak : 0.0;

    // fringes, sum route
    out.fringe_sum.assign(tau.size(), 0.0);
    for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) {
            if (a == b) continue;
            double w = out.p(a, b) * measure;
            if (w <= 0.0) continue;
            double osq = std::norm(params.mode_overlap(bin_centers[a],
                                                       bin_centers[b]));
            if (1.0 - osq < kNullStateThreshold) continue;
            double domega = params.cond_center(bin_centers[a]) -
                            params.cond_center(bin_centers[b]);
            for (std::size_t it = 0; it < tau.size(); ++it) {
                out.fringe_sum[it] +=
                    w * fringe_kernel_exact(params.sigma_s, domega, osq, tau[it]);
            }
        }
    }

    // fringes, closed route:
    //   P = [1 + |M|^2 - Tr rho_i^2 - S(tau)] / 4
    //   M(tau)  = int dw m(w) e^{i w tau},  m(w) = int dW f^2(w, W)
    //   S(tau)  = int dw dw' |rho_s(w,w')|^2 e^{i (w-w') tau}
    DensityMatrix rho_i = reduced_density(jsa, Side::idler);
    double tr_rho_i_sq = purity(rho_i);
    out.closed_weight_unordered = 0.25 * (1.0 - tr_rho_i_sq);

    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(grid1.n);
    for (int i = 0; i < grid1.n; ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < gi.n; ++j) {
            std::complex<double> v = jsa.values(i, j);
            acc += v * v * gi.weight(j);
        }
        m(i) = acc;
    }
    // anti-diagonal grouping: same w - w' difference shares one phase factor
    std::vector<double> diag_groups(grid1.n, 0.0);
    for (int d = 0; d < grid1.n; ++d) {
        double acc = 0.0;
        for (int i = 0; i + d < grid1.n; ++i) {
            acc += std::norm(rho_s.values(i, i + d)) * grid1.weight(i) *
                   grid1.weight(i + d);
        }
        diag_groups[d] = acc;
    }
    double step = grid1.step();
    out.fringe_closed.assign(tau.size(), 0.0);
    for (std::size_t it = 0; it < tau.size(); ++it) {
        double t = tau[it];
        std::complex<double> big(0.0, 0.0);
        for (int i = 0; i < grid1.n; ++i) {
            double ph = grid1.point(i) * t;
            big += m(i) * std::complex<double>(std::cos(ph), std::sin(ph)) *
                   grid1.weight(i);
        }
        double s = diag_groups[0];
        for (int d = 1; d < grid1.n; ++d) {
            if (diag_groups[d] == 0.0) continue;
            s += 2.0 * diag_groups[d] * std::cos(d * step * t);
        }
        out.fringe_closed[it] = 0.25 * (1.0 + std::norm(big) - tr_rho_i_sq - s);
    }

    double fpeak = 0.0, fworst = 0.0;
    for (std::size_t it = 0; it < tau.size(); ++it) {
        fpeak = std::max(fpeak, out.fringe_closed[it]);
        fworst = std::max(fworst, std::abs(out.fringe_sum[it] - out.fringe_closed[it]));
    }
    out.fringe_max_rel_discrepancy = fpeak > 0.0 ? fworst / fpeak : 0.0;
    return out;
}

double fringe_visibility(const FringeCurve& curve) {
    if (curve.probability.empty()) throw NumericError("empty fringe curve");
    double lo = curve.probability[0], hi = curve.probability[0];
    for (double v : curve.probability) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi + lo <= 0.0) return 0.0;
    return (hi - lo) / (hi + lo);
}

double lock_in_amplitude(const FringeCurve& curve, double beta) {
    if (curve.probability.empty()) throw NumericError("empty fringe curve");
    double mean = 0.0;
    for (double v : curve.probability) mean += v;
    mean /= static_cast<double>(curve.probability.size());
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < curve.probability.size(); ++i) {
        double ph = beta * curve.tau[i];
        acc += (curve.probability[i] - mean) *
               std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(curve.probability.size());
}

}  // namespace specswap
