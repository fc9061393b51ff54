#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "specswap/errors.hpp"
#include "specswap/filter_bank.hpp"
#include "specswap/source.hpp"
#include "specswap/spectral.hpp"
#include "specswap/swap_mixed.hpp"
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

double filter_sigma(double fwhm_nm) {
    return fwhm_to_sigma(width_nm_to_rad_ps(fwhm_nm, 830.0));
}

// gaussian bank whose intensity std is the given fraction of sigma_i
FilterBank near_delta_bank(const JsaParams& p, double ratio, int nodes) {
    double w_nm = sigma_to_fwhm(ratio * p.sigma_i) / width_nm_to_rad_ps(1.0, 830.0);
    return make_filter_bank(830.0, 1.5, 4, w_nm, FilterShape::gaussian, nodes);
}

}  // namespace

TEST_CASE("delta filters reproduce the sharp-herald model exactly") {
    JsaParams p = shipped_params();
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    SpectralGrid g = default_signal_grid(p, 64, 5.0);
    double Wj = bank.at_index(-1).center;
    double Wk = bank.at_index(+1).center;

    CHECK(mixed_herald_probability(p, bank, -1, 1) == herald_probability(p, Wj, Wk));

    MixedHeralded st = mixed_heralded_state(p, bank, -1, 1, g);
    REQUIRE(st.members.size() == 1);
    CHECK(st.members[0].weight == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fidelity_with_pure(p, st) == doctest::Approx(1.0).epsilon(1e-10));

    std::vector<double> tau = default_tau_grid(p, 6.0, 64);
    MixedObservables obs = mixed_observables(p, st, g, g, tau);
    FringeCurve sharp = fringe_pure(p, Wj, Wk, tau, FringeModel::exact);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        CHECK(obs.fringe.probability[i] ==
              doctest::Approx(sharp.probability[i]).epsilon(1e-12));
    }
    HeraldedJsi hj = heralded_jsi(p, Wj, Wk, g, g);
    CHECK((obs.jsi.values - hj.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("narrow filters converge onto the sharp-herald model") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 128, 5.0);
    FilterBank tiny = near_delta_bank(p, 1e-3, 8);
    double density = herald_probability(p, tiny.at_index(-1).center,
                                        tiny.at_index(1).center);
    CHECK(mixed_herald_probability(p, tiny, -1, 1) ==
          doctest::Approx(density).epsilon(1e-6));

    MixedHeralded st = mixed_heralded_state(p, tiny, -1, 1, g);
    double f = fidelity_with_pure(p, st);
    CHECK(f > 0.999);
    CHECK(f == doctest::Approx(0.999999560922).epsilon(1e-4));

    // widths shrinking toward zero drive the fidelity monotonically up
    double prev = 0.0;
    for (double ratio : {0.3, 0.1, 0.03, 0.01}) {
        FilterBank b = near_delta_bank(p, ratio, 8);
        double fw = fidelity_with_pure(p, mixed_heralded_state(p, b, -1, 1, g));
        CHECK(fw > prev);
        prev = fw;
    }
    CHECK(prev > 0.999);
}

TEST_CASE("ensemble weights form a distribution and the kernel is a state") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 16, 5.0);
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 4);
    MixedHeralded st = mixed_heralded_state(p, bank, -1, 1, g);

    REQUIRE(st.members.size() == 16);  // 4 x 4 node pairs
    double wsum = 0.0;
    for (const auto& m : st.members) {
        CHECK(m.weight >= 0.0);
        CHECK(m.norm_sq > 0.0);
        wsum += m.weight;
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-8));
    for (const auto& mode : st.node_modes) {
        double nrm = 0.0;
        for (int i = 0; i < g.n; ++i) nrm += std::norm(mode(i)) * g.weight(i);
        CHECK(nrm == doctest::Approx(1.0).epsilon(1e-10));
    }

    Eigen::MatrixXcd kernel = reconstruct_kernel(st);
    CHECK((kernel - kernel.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kernel);
    CHECK(es.eigenvalues().minCoeff() > -1e-12 * es.eigenvalues().maxCoeff());
    // unit trace under the product quadrature weights
    std::complex<double> tr(0.0, 0.0);
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            tr += kernel(i * g.n + j, i * g.n + j) * g.weight(i) * g.weight(j);
        }
    }
    CHECK(tr.real() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(tr.imag()) < 1e-12);
}

TEST_CASE("ensemble kernel equals the direct-quadrature kernel") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 32, 5.0);
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 4);
    MixedHeralded st = mixed_heralded_state(p, bank, -1, 1, g);
    Eigen::MatrixXcd a = reconstruct_kernel(st);
    Eigen::MatrixXcd b = kernel_by_quadrature(p, bank, -1, 1, g);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bunching suppresses the filtered diagonal below its neighbors") {
    JsaParams p = shipped_params();
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 8);
    for (int j = -4; j <= 4; ++j) {
        double diag = mixed_herald_probability(p, bank, j, j);
        CHECK(diag > 0.0);  // finite width: the null is only partial
        if (j + 1 <= 4) CHECK(diag < mixed_herald_probability(p, bank, j, j + 1));
        if (j - 1 >= -4) CHECK(diag < mixed_herald_probability(p, bank, j, j - 1));
    }
}

TEST_CASE("heralded purity: shipped filters land the design point") {
    JsaParams p = shipped_params();
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 8);
    PurityReport r = purity_and_hom(p, bank, 0, 0);
    CHECK(r.purity_j == doctest::Approx(0.78).epsilon(2e-6));
    CHECK(r.purity_j == r.purity_k);
    CHECK(r.hom_visibility == r.purity_j);  // same filter twice

    // quadrature against the closed form, converged node count
    FilterBank fine = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 16);
    PurityReport rf = purity_and_hom(p, fine, 0, 0);
    CHECK(rf.purity_j == doctest::Approx(p.purity_filtered(filter_sigma(1.5)))
                             .epsilon(1e-10));
    CHECK(std::abs(rf.purity_j - r.purity_j) < 1e-6);
}

TEST_CASE("unresolved herald degrades purity to the multimode floor") {
    JsaParams p = shipped_params();
    // a 40nm filter is much wider than the idler correlation length, so the
    // gauss rule needs a dense node set before it resolves the kernel ridge
    FilterBank wide = make_filter_bank(830.0, 45.0, 0, 40.0, FilterShape::gaussian,
                                       1024);
    PurityReport r = purity_and_hom(p, wide, 0, 0);
    double closed = p.purity_filtered(filter_sigma(40.0));
    CHECK(closed == doctest::Approx(0.23923968800832).epsilon(1e-10));
    CHECK(r.purity_j == doctest::Approx(closed).epsilon(1e-3));
    CHECK(r.purity_j > 0.15);
    CHECK(r.purity_j < 0.25);
}

TEST_CASE("purity is monotone non-increasing in the filter width") {
    JsaParams p = shipped_params();
    double prev = 1.0;
    for (double w : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        FilterBank b = make_filter_bank(830.0, 45.0, 0, w, FilterShape::gaussian, 64);
        PurityReport r = purity_and_hom(p, b, 0, 0);
        CHECK(r.purity_j < prev);
        CHECK(r.purity_j == doctest::Approx(p.purity_filtered(filter_sigma(w)))
                                .epsilon(1e-4));
        prev = r.purity_j;
    }
    // closed-form limits: sharp filter gives a pure herald, an infinitely
    // wide one hits 1/K
    CHECK(p.purity_filtered(0.0) == doctest::Approx(1.0));
    CHECK(p.purity_filtered(1e9) ==
          doctest::Approx(1.0 / p.schmidt_number()).epsilon(1e-8));
}

TEST_CASE("identical sources give full pump-phase contrast") {
    JsaParams p = shipped_params();
    SpectralGrid gs = default_signal_grid(p, 256, 6.0);
    SpectralGrid gi = default_idler_grid(p, 256, 6.0);
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    MismatchReport r = source_mismatch(p, p, bank.at_index(-1).center,
                                       bank.at_index(1).center, gs, gi, 64);
    CHECK(r.contrast == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.v_jk == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.overlap_f1_f2 == doctest::Approx(1.0).epsilon(1e-10));
    REQUIRE(r.phase.size() == 64);
    for (std::size_t i = 0; i < r.phase.size(); ++i) {
        CHECK(r.fringe_plus[i] + r.fringe_minus[i] ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
    // the + port peaks at zero pump phase
    CHECK(r.fringe_plus[0] == doctest::Approx(0.5 * (1.0 + r.contrast)));
    CHECK_THROWS_AS(source_mismatch(p, p, bank.at_index(-1).center,
                                    bank.at_index(1).center, gs, gi, 1),
                    ConfigError);
}

TEST_CASE("offset source tuned for 0.8 overlap shows 0.8 contrast") {
    JsaParams p = shipped_params();
    double delta = p.offset_for_overlap(0.8);
    CHECK(delta == doctest::Approx(0.5628670072374043).epsilon(1e-12));
    CHECK(p.displaced_overlap(delta) == doctest::Approx(0.8).epsilon(1e-12));

    JsaParams q = p;
    q.omega0 += delta;
    SpectralGrid gs = default_signal_grid(p, 256, 6.0);
    SpectralGrid gi = default_idler_grid(p, 256, 6.0);
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    MismatchReport r = source_mismatch(p, q, bank.at_index(-1).center,
                                       bank.at_index(1).center, gs, gi, 128);
    CHECK(r.contrast == doctest::Approx(0.8).epsilon(1e-6));

    // per-pair visibility: both conditional modes displace by
    // delta (1 + 2 alpha sigma_s^2), so v_jk has its own closed form
    double dc = delta * (1.0 + 2.0 * p.alpha * p.sigma_s * p.sigma_s);
    double closed = std::exp(-dc * dc / (4.0 * p.sigma_s * p.sigma_s));
    CHECK(r.v_jk == doctest::Approx(closed).epsilon(1e-9));
    CHECK(r.v_jk == doctest::Approx(0.6406554037048315).epsilon(1e-9));

    // the factorized bound against the raw amplitude overlap
    for (auto [j, k] : {std::pair{-1, 1}, {-2, 2}, {0, 1}, {-3, 4}, {2, 3}}) {
        MismatchReport rr = source_mismatch(p, q, bank.at_index(j).center,
                                            bank.at_index(k).center, gs, gi, 8);
        CHECK(rr.v_jk >= rr.overlap_f1_f2 * rr.overlap_f1_f2 - 1e-12);
    }
}

TEST_CASE("background correction: zero background is the identity") {
    FringeCurve raw;
    for (int i = 0; i < 50; ++i) {
        raw.tau.push_back(0.2 * i - 5.0);
        raw.probability.push_back(0.6 + 0.1 * std::sin(i));
    }
    BackgroundModel none;
    FringeCurve out = background_correct(raw, none);
    for (std::size_t i = 0; i < raw.probability.size(); ++i) {
        CHECK(out.probability[i] == raw.probability[i]);
    }
}

TEST_CASE("mean-level background halves the visibility and is removed exactly") {
    // symmetric fringe: beat period an exact multiple of the sample step, so
    // the sampled extrema sit on the true extrema
    double sigma = 0.3, beta = kPi / 0.12, h = 0.01;
    int half = 2000;
    FringeCurve truth;
    double mean_t = 0.0;
    for (int i = -half; i <= half; ++i) {
        double t = h * i;
        truth.tau.push_back(t);
        truth.probability.push_back(
            0.5 * (1.0 + std::exp(-sigma * sigma * t * t) * std::cos(beta * t)));
        mean_t += truth.probability.back();
    }
    mean_t /= static_cast<double>(truth.probability.size());

    FringeCurve raw = truth;
    for (std::size_t i = 0; i < raw.probability.size(); ++i) {
        raw.probability[i] = 0.5 * truth.probability[i] + 0.5 * mean_t;
    }
    BackgroundModel bg;
    bg.fraction_source1 = 0.25;
    bg.fraction_source2 = 0.25;
    FringeCurve corrected = background_correct(raw, bg);

    double worst = 0.0;
    for (std::size_t i = 0; i < corrected.probability.size(); ++i) {
        worst = std::max(worst,
                         std::abs(corrected.probability[i] - truth.probability[i]));
    }
    CHECK(worst < 1e-9);
    CHECK(fringe_visibility(corrected) ==
          doctest::Approx(2.0 * fringe_visibility(raw)).epsilon(1e-3));

    BackgroundModel bad;
    bad.fraction_source1 = 0.6;
    bad.fraction_source2 = 0.4;
    CHECK_THROWS_AS(background_correct(raw, bad), ConfigError);
    // a level above the fringe minimum cannot be subtracted
    CHECK_THROWS_AS(background_correct_level(raw, 0.9), NumericError);
    CHECK_THROWS_AS(background_correct_level(raw, -0.1), NumericError);
}

TEST_CASE("mixed fringe visibility factorizes against the matched case") {
    JsaParams p = shipped_params();
    SpectralGrid g = default_signal_grid(p, 96, 5.0);
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::gaussian, 6);
    std::vector<double> tau = default_tau_grid(p, 6.0, 256);
    MixedHeralded st = mixed_heralded_state(p, bank, -1, 1, g);
    MixedObservables obs = mixed_observables(p, st, g, g, tau);

    // the filtered fringe is shallower than the sharp-herald one but keeps
    // the same beat frequency
    FringeCurve sharp = fringe_pure(p, bank.at_index(-1).center,
                                    bank.at_index(1).center, tau,
                                    FringeModel::exact);
    double beat = p.beat(bank.at_index(-1).center, bank.at_index(1).center);
    double amp_mixed = lock_in_amplitude(obs.fringe, beat);
    double amp_sharp = lock_in_amplitude(sharp, beat);
    CHECK(amp_mixed > 0.0);
    CHECK(amp_mixed < amp_sharp);
    CHECK(obs.fringe.probability[tau.size() / 2] ==
          doctest::Approx(1.0).epsilon(1e-2));  // tau = 0 stays near unity
}
