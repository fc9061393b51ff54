#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "specswap/errors.hpp"
#include "specswap/fft.hpp"
#include "specswap/filter_bank.hpp"
#include "specswap/source.hpp"
#include "specswap/spectral.hpp"
#include "specswap/swap_pure.hpp"
#include "specswap/units.hpp"

using namespace specswap;

namespace {

JsaParams shipped_params() {
    JsaParams p;
    p.omega0 = nm_to_rad_ps(830.0);
    p.sigma_s = 0.525917670581;
    p.sigma_i = 2.069824616198;
    p.alpha = 0.446427660685;
    p.eta = 0.1;
    return p;
}

FilterBank shipped_bank() {
    return make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
}

// brute-force idler density by direct quadrature of the model amplitude,
// bypassing the closed-form kernels entirely
double rho_brute(const JsaParams& p, double W1, double W2, int n = 1024) {
    SpectralGrid g = default_signal_grid(p, n, 6.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += p.amplitude(g.point(i), W1) * p.amplitude(g.point(i), W2) * g.weight(i);
    }
    return acc;
}

// coincidence probability behind a 50:50 beamsplitter with delay tau in
// one arm, from the antisymmetrized two-photon amplitude itself:
//   P(tau) = 1/2 - 1/2 Re sum A(a,b) conj(A(b,a)) e^{i(w_b - w_a) tau} w_a w_b
double fringe_brute(const SpectralGrid& g, const Eigen::MatrixXcd& A, double tau) {
    std::complex<double> acc(0.0, 0.0);
    for (int a = 0; a < g.n; ++a) {
        for (int b = 0; b < g.n; ++b) {
            double ph = (g.point(b) - g.point(a)) * tau;
            acc += A(a, b) * std::conj(A(b, a)) *
                   std::complex<double>(std::cos(ph), std::sin(ph)) * g.weight(a) *
                   g.weight(b);
        }
    }
    return 0.5 - 0.5 * acc.real();
}

Eigen::MatrixXcd singlet_amplitude(const JsaParams& p, double Wj, double Wk,
                                   const SpectralGrid& g) {
    ConditionalMode mj = conditional_mode(p, Wj, g);
    ConditionalMode mk = conditional_mode(p, Wk, g);
    double osq = std::norm(overlap_integral(g, mj.values, mk.values));
    Eigen::MatrixXcd A(g.n, g.n);
    for (int a = 0; a < g.n; ++a) {
        for (int b = 0; b < g.n; ++b) {
            A(a, b) = mj.values(a) * mk.values(b) - mk.values(a) * mj.values(b);
        }
    }
    return A / std::sqrt(2.0 * (1.0 - osq));
}

// index of the largest power-spectrum bin away from dc
int spectral_peak_bin(const std::vector<double>& series) {
    std::vector<double> ps = power_spectrum(series);
    int best = 1;
    for (std::size_t k = 2; k < ps.size() / 2; ++k) {
        if (ps[k] > ps[best]) best = static_cast<int>(k);
    }
    return best;
}

}  // namespace

TEST_CASE("conditional mode center follows the herald") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 512, 6.0);

    ConditionalMode center = conditional_mode(p, p.omega0, g);
    CHECK(center.center == doctest::Approx(p.omega0));
    CHECK(center.width == doctest::Approx(p.sigma_s));

    double nrm = 0.0;
    for (int i = 0; i < g.n; ++i) nrm += std::norm(center.values(i)) * g.weight(i);
    CHECK(nrm == doctest::Approx(1.0).epsilon(1e-10));

    JsaParams sep = p;
    sep.alpha = 0.0;
    for (double det : {-3.0, 0.0, 2.0}) {
        CHECK(conditional_mode(sep, p.omega0 + det, g).center ==
              doctest::Approx(p.omega0));
    }

    // argmax oracle: locate the peak of the model slice on a fine grid
    double Omega = p.omega0 + 4.0;
    ConditionalMode m = conditional_mode(p, Omega, g);
    int best = 0;
    double best_v = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double v = p.amplitude(g.point(i), Omega);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    CHECK(std::abs(m.center - g.point(best)) <= g.step());
    // anti-correlated model steers the other way
    JsaParams anti = p;
    anti.alpha = -p.alpha;
    CHECK(conditional_mode(anti, Omega, g).center ==
          doctest::Approx(p.omega0 + 2.0 * p.alpha * p.sigma_s * p.sigma_s * 4.0));
    // frozen: center heralded by bin +1 of the default bank
    CHECK(conditional_mode(p, shipped_bank().at_index(1).center, g).center ==
          doctest::Approx(2270.470759099855).epsilon(1e-12));
}

TEST_CASE("far-detuned herald is rejected") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    CHECK_THROWS_AS(conditional_mode(p, p.omega0 + 500.0, g), NumericError);
}

TEST_CASE("herald probability against brute-force quadrature") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    double Wj = bank.at_index(-1).center;
    double Wk = bank.at_index(+1).center;

    double r11 = rho_brute(p, Wj, Wj);
    double r22 = rho_brute(p, Wk, Wk);
    double r12 = rho_brute(p, Wj, Wk);
    double brute = 0.5 * (r11 * r22 - r12 * r12);
    double lib = herald_probability(p, Wj, Wk);
    CHECK(lib == doctest::Approx(brute).epsilon(1e-6));
    // frozen: closed form on the shipped parameters
    CHECK(lib == doctest::Approx(0.0008071674286373198).epsilon(1e-12));
    CHECK(herald_probability(p, Wk, Wj) == lib);
}

TEST_CASE("herald probability vanishes on the diagonal and for separable models") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    for (int j = -4; j <= 4; ++j) {
        double W = bank.at_index(j).center;
        CHECK(herald_probability(p, W, W) == 0.0);
    }
    JsaParams sep = p;
    sep.alpha = 0.0;
    for (int j = -4; j <= 4; ++j) {
        for (int k = j + 1; k <= 4; ++k) {
            CHECK(herald_probability(sep, bank.at_index(j).center,
                                     bank.at_index(k).center) == 0.0);
        }
    }
}

TEST_CASE("heralded pair carries consistent overlap bookkeeping") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    double Wj = bank.at_index(-1).center;
    double Wk = bank.at_index(+1).center;
    HeraldedBellPure pair = heralded_pair(p, -1, +1, Wj, Wk, g);

    // grid overlap vs the closed-form correlation exp(-gamma d^2)
    double closed = p.mode_overlap(Wj, Wk);
    CHECK(pair.overlap_sq == doctest::Approx(closed * closed).epsilon(1e-9));
    // frozen correlation for bins (-1, +1)
    CHECK(closed == doctest::Approx(0.15652116021928691).epsilon(1e-12));
    CHECK(pair.c_jk == doctest::Approx(1.0 - pair.overlap_sq));
    CHECK(pair.p_jk == herald_probability(p, Wj, Wk));
    CHECK(pair.c_jk >= 0.0);
    CHECK(pair.c_jk <= 1.0);
}

TEST_CASE("heralded joint spectrum is antisymmetric, symmetric, normalized") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    HeraldedJsi hj = heralded_jsi(p, bank.at_index(-1).center,
                                  bank.at_index(+1).center, g, g);

    double diag = 0.0, total = 0.0, asym = 0.0;
    for (int a = 0; a < g.n; ++a) {
        diag = std::max(diag, hj.values(a, a));
        for (int b = 0; b < g.n; ++b) {
            total += hj.values(a, b) * g.weight(a) * g.weight(b);
            asym = std::max(asym, std::abs(hj.values(a, b) - hj.values(b, a)));
        }
    }
    CHECK(diag < 1e-12);
    CHECK(asym < 1e-14);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

    CHECK_THROWS_AS(heralded_jsi(p, bank.at_index(2).center, bank.at_index(2).center,
                                 g, g),
                    NumericError);
}

TEST_CASE("widely split bins put the two lobes at the conditional centers") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    double Wj = bank.at_index(-4).center;
    double Wk = bank.at_index(+4).center;
    HeraldedJsi hj = heralded_jsi(p, Wj, Wk, g, g);

    int ar = 0, ac = 0;
    hj.values.maxCoeff(&ar, &ac);
    double cj = conditional_mode(p, Wj, g).center;
    double ck = conditional_mode(p, Wk, g).center;
    // one lobe at (w_j, w_k); its mirror is the same cell transposed
    double lo = std::min(cj, ck), hi = std::max(cj, ck);
    double got_lo = std::min(g.point(ar), g.point(ac));
    double got_hi = std::max(g.point(ar), g.point(ac));
    CHECK(std::abs(got_lo - lo) <= g.step());
    CHECK(std::abs(got_hi - hi) <= g.step());
    CHECK(hj.values(ac, ar) == doctest::Approx(hj.values(ar, ac)));
}

TEST_CASE("exact fringe matches the beamsplitter integral") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    double Wj = bank.at_index(-1).center;
    double Wk = bank.at_index(+1).center;
    Eigen::MatrixXcd A = singlet_amplitude(p, Wj, Wk, g);

    std::vector<double> tau{0.0, 0.3, 0.7, 1.1, 2.0, 5.0};
    FringeCurve exact = fringe_pure(p, Wj, Wk, tau, FringeModel::exact);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        CHECK(exact.probability[i] ==
              doctest::Approx(fringe_brute(g, A, tau[i])).epsilon(1e-8));
    }
    // frozen: closed-form sample away from the extremes
    CHECK(fringe_pure(p, Wj, Wk, {0.7}, FringeModel::exact).probability[0] ==
          doctest::Approx(0.5571512501985243).epsilon(1e-10));
}

TEST_CASE("fringe endpoints: unity at zero delay, half far out") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    double Wj = bank.at_index(-2).center;
    double Wk = bank.at_index(+2).center;
    std::vector<double> tau{0.0, 10.0 / p.sigma_s, -10.0 / p.sigma_s};

    FringeCurve exact = fringe_pure(p, Wj, Wk, tau, FringeModel::exact);
    FringeCurve approx = fringe_pure(p, Wj, Wk, tau, FringeModel::approximate);
    CHECK(approx.probability[0] == 1.0);
    CHECK(exact.probability[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i : {1, 2}) {
        CHECK(exact.probability[i] == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(approx.probability[i] == doctest::Approx(0.5).epsilon(1e-6));
    }
    for (double v : exact.probability) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    CHECK_THROWS_AS(fringe_pure(p, Wj, Wj, tau, FringeModel::exact), NumericError);
}

TEST_CASE("fringe oscillates at the conditional-center difference") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    std::vector<double> tau = default_tau_grid(p, 6.0, 2048);
    double dtau = tau[1] - tau[0];
    double bin = kTwoPi / (dtau * static_cast<double>(tau.size()));

    for (auto [j, k] : {std::pair{-2, 2}, {-1, 3}, {-4, 4}}) {
        double Wj = bank.at_index(j).center;
        double Wk = bank.at_index(k).center;
        FringeCurve curve = fringe_pure(p, Wj, Wk, tau, FringeModel::exact);
        double mean = 0.0;
        for (double v : curve.probability) mean += v;
        mean /= static_cast<double>(curve.probability.size());
        std::vector<double> centered;
        for (double v : curve.probability) centered.push_back(v - mean);
        double peak = spectral_peak_bin(centered) * bin;
        CHECK(std::abs(peak - p.beat(Wj, Wk)) <= bin);
    }
    // frozen beat for the (-2, +2) pair
    CHECK(p.beat(bank.at_index(-2).center, bank.at_index(2).center) ==
          doctest::Approx(4.051519451746803).epsilon(1e-12));
}

TEST_CASE("uncorrelated model leaves no beat line") {
    JsaParams p = shipped_params();
    p.alpha = 0.0;
    FilterBank bank = shipped_bank();
    std::vector<double> tau = default_tau_grid(p, 6.0, 2048);
    // the exact model rejects the null state; the approximate envelope form
    // must carry no spectral line away from dc
    FringeCurve curve = fringe_pure(p, bank.at_index(-2).center,
                                    bank.at_index(2).center, tau,
                                    FringeModel::approximate);
    double mean = 0.0;
    for (double v : curve.probability) mean += v;
    mean /= static_cast<double>(curve.probability.size());
    std::vector<double> centered;
    for (double v : curve.probability) centered.push_back(v - mean);
    CHECK(spectral_peak_bin(centered) == 1);  // all mass hugs dc
    CHECK(p.beat(bank.at_index(-2).center, bank.at_index(2).center) == 0.0);
}

TEST_CASE("exact and approximate fringes agree for widely split bins") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    std::vector<double> tau = default_tau_grid(p, 6.0, 512);
    for (auto [j, k] : {std::pair{-4, 4}, {-2, 2}}) {
        double Wj = bank.at_index(j).center;
        double Wk = bank.at_index(k).center;
        REQUIRE(std::norm(p.mode_overlap(Wj, Wk)) < 1e-3);
        FringeCurve exact = fringe_pure(p, Wj, Wk, tau, FringeModel::exact);
        FringeCurve approx = fringe_pure(p, Wj, Wk, tau, FringeModel::approximate);
        double worst = 0.0;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            worst = std::max(worst,
                             std::abs(exact.probability[i] - approx.probability[i]));
        }
        CHECK(worst < 0.02);
    }
}

TEST_CASE("default delay grid is symmetric and spans the request") {
    JsaParams p = shipped_params();
    std::vector<double> tau = default_tau_grid(p, 6.0, 101);
    REQUIRE(tau.size() == 101);
    CHECK(tau.front() == doctest::Approx(-6.0 / p.sigma_s));
    CHECK(tau.back() == doctest::Approx(6.0 / p.sigma_s));
    CHECK(tau[50] == doctest::Approx(0.0));
    CHECK_THROWS_AS(default_tau_grid(p, 6.0, 1), ConfigError);
}

TEST_CASE("integrated observables: two routes agree and refine") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 256, 5.0);
    std::vector<double> tau = default_tau_grid(p, 6.0, 256);

    auto tile = [&](int nb) {
        double span = 4.0 * p.marginal_sigma_i();
        std::vector<double> centers(nb);
        double step = 2.0 * span / nb;
        for (int i = 0; i < nb; ++i) {
            centers[i] = p.omega0 - span + (i + 0.5) * step;
        }
        return centers;
    };

    IntegratedObservables io64 = integrated_observables(p, tile(64), g, g, tau);
    CHECK(io64.jsi_max_rel_discrepancy < 1e-3);
    CHECK(io64.fringe_max_rel_discrepancy < 1e-3);
    CHECK(io64.coverage > 0.999);

    // a coarse tiling is visibly worse; past ~32 bins the residual floors at
    // the quadrature error of the shared spectral grid
    IntegratedObservables io20 = integrated_observables(p, tile(20), g, g, tau);
    CHECK(io20.jsi_max_rel_discrepancy > 10.0 * io64.jsi_max_rel_discrepancy);
    IntegratedObservables io128 = integrated_observables(p, tile(128), g, g, tau);
    CHECK(io128.jsi_max_rel_discrepancy < 1e-3);
    CHECK(io128.fringe_max_rel_discrepancy < 1e-3);

    // closed-form joint spectrum vanishes on the diagonal
    double peak = io64.jsi_closed.maxCoeff();
    for (int i = 0; i < g.n; ++i) {
        CHECK(io64.jsi_closed(i, i) <= 1e-14 * peak);
    }

    // ordered bin sum of the herald density against the closed total,
    // which counts unordered pairs
    CHECK(io64.total_weight_ordered ==
          doctest::Approx(2.0 * io64.closed_weight_unordered).epsilon(1e-4));
}

TEST_CASE("integrated fringe shows a peak centered in a dip") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 192, 5.0);
    std::vector<double> tau = default_tau_grid(p, 6.0, 601);
    double span = 4.0 * p.marginal_sigma_i();
    std::vector<double> centers(64);
    double step = 2.0 * span / 64;
    for (int i = 0; i < 64; ++i) centers[i] = p.omega0 - span + (i + 0.5) * step;
    IntegratedObservables io = integrated_observables(p, centers, g, g, tau);

    auto value_at = [&](double t) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < tau.size(); ++i) {
            if (std::abs(tau[i] - t) < std::abs(tau[best] - t)) best = i;
        }
        return io.fringe_closed[best];
    };
    double at_zero = value_at(0.0);
    double mid_plus = value_at(1.0 / p.sigma_s);
    double mid_minus = value_at(-1.0 / p.sigma_s);
    double far_plus = value_at(tau.back());
    double far_minus = value_at(tau.front());
    CHECK(at_zero > mid_plus);       // local maximum at zero delay
    CHECK(at_zero > mid_minus);
    CHECK(far_plus > mid_plus);      // sitting inside a broader dip
    CHECK(far_minus > mid_minus);
}

TEST_CASE("herald bins that miss the marginal are rejected") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 128, 5.0);
    std::vector<double> tau{0.0, 1.0};
    std::vector<double> narrow(16);
    for (int i = 0; i < 16; ++i) {
        narrow[i] = p.omega0 + (i - 8) * 0.1 * p.marginal_sigma_i();
    }
    CHECK_THROWS_AS(integrated_observables(p, narrow, g, g, tau), NumericError);
    std::vector<double> uneven{p.omega0 - 1.0, p.omega0, p.omega0 + 2.0};
    CHECK_THROWS_AS(integrated_observables(p, uneven, g, g, tau), ConfigError);
}

TEST_CASE("visibility and lock-in read constructed curves exactly") {
    FringeCurve curve;
    double beta = 3.0;
    int n = 400;
    int periods = 20;
    for (int i = 0; i < n; ++i) {
        double t = periods * kTwoPi / beta * i / n;
        curve.tau.push_back(t);
        curve.probability.push_back(0.5 + 0.3 * std::cos(beta * t));
    }
    CHECK(fringe_visibility(curve) == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(lock_in_amplitude(curve, beta) == doctest::Approx(0.3).epsilon(1e-9));
    // off-frequency probe sees nothing
    CHECK(lock_in_amplitude(curve, beta * 3.7) < 1e-9);

    FringeCurve empty;
    CHECK_THROWS_AS(fringe_visibility(empty), NumericError);
    CHECK_THROWS_AS(lock_in_amplitude(empty, beta), NumericError);
}

TEST_CASE("null-pair predicate matches the fringe guard") {
    JsaParams p = shipped_params();
    FilterBank bank = shipped_bank();
    double W = bank.at_index(2).center;
    CHECK(herald_is_null(p, W, W));
    CHECK_FALSE(herald_is_null(p, bank.at_index(-1).center, bank.at_index(1).center));
    JsaParams tiny = p;
    tiny.alpha = 1e-9;
    CHECK(herald_is_null(tiny, bank.at_index(-1).center, bank.at_index(1).center));
}
