#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "specswap/errors.hpp"
#include "specswap/filter_bank.hpp"
#include "specswap/mode_select.hpp"
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

JsiTable shipped_table(const JsaParams& p, int n = 256) {
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    SpectralGrid g = default_signal_grid(p, n, 5.0);
    return model_jsi_table(p, bank, g, g);
}

double brute_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            dot += a(i, j) * b(i, j);
            na += a(i, j) * a(i, j);
            nb += b(i, j) * b(i, j);
        }
    }
    return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("model table holds every live unordered pair, flat-normalized") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p, 128);
    CHECK(table.entries.size() == 36);  // C(9,2), diagonal pairs are null
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    for (const auto& e : table.entries) {
        CHECK(e.j < e.k);
        CHECK(e.hist.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(e.hist.minCoeff() >= 0.0);
        CHECK(e.weight == doctest::Approx(herald_probability(
                              p, bank.at_index(e.j).center,
                              bank.at_index(e.k).center)));
    }
    CHECK(table.find(-1, 1) != nullptr);
    CHECK(table.find(2, 2) == nullptr);
    CHECK(table.find(9, 10) == nullptr);

    // mirror pairs about the center bin nearly coincide; the residual is the
    // wavelength-to-frequency skew of the bank, well below one percent
    CHECK(table.find(0, 3)->weight ==
          doctest::Approx(table.find(-3, 0)->weight).epsilon(1e-2));
    CHECK(table.find(0, 3)->weight != table.find(-3, 0)->weight);
}

TEST_CASE("uncorrelated model yields an empty table") {
    JsaParams p = shipped_params();
    p.alpha = 0.0;
    CHECK(shipped_table(p, 64).entries.empty());
}

TEST_CASE("overlap matrix is a correlation matrix") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p, 128);
    Eigen::MatrixXd o = overlap_matrix(table);
    int n = static_cast<int>(table.entries.size());
    REQUIRE(o.rows() == n);
    for (int a = 0; a < n; ++a) {
        CHECK(o(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        for (int b = a + 1; b < n; ++b) {
            CHECK(o(a, b) == o(b, a));
            CHECK(o(a, b) >= 0.0);
            CHECK(o(a, b) <= 1.0 + 1e-12);
        }
    }
    // spot-check against a direct sum
    CHECK(o(0, 1) == doctest::Approx(brute_cosine(table.entries[0].hist,
                                                  table.entries[1].hist))
                         .epsilon(1e-10));
    // far-separated herald pairs barely overlap
    int a = -1, b = -1;
    for (int i = 0; i < n; ++i) {
        if (table.entries[i].j == -4 && table.entries[i].k == -3) a = i;
        if (table.entries[i].j == 3 && table.entries[i].k == 4) b = i;
    }
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    CHECK(o(a, b) < 1e-6);

    // raw overlaps carry the density scale instead of the cosine one
    Eigen::MatrixXd raw = raw_overlap_matrix(table);
    CHECK(raw(0, 0) > 0.0);
    CHECK(raw(0, 1) / std::sqrt(raw(0, 0) * raw(1, 1)) ==
          doctest::Approx(o(0, 1)).epsilon(1e-10));
}

TEST_CASE("symmetrize averages a perturbed pair back to the model") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p, 64);

    // the model histograms are already exchange symmetric
    SymmetrizeResult clean = symmetrize(table);
    CHECK(clean.max_residual_asymmetry < 1e-12);
    CHECK(clean.table.entries.size() == table.entries.size());

    // inject a known asymmetry into one entry
    JsiTable bent = table;
    Eigen::MatrixXd& h = bent.entries[0].hist;
    double peak = h.maxCoeff();
    double delta = 0.05 * peak;
    h(10, 20) += delta;
    h(20, 10) -= delta;
    SymmetrizeResult fixed = symmetrize(bent);
    CHECK(fixed.max_residual_asymmetry ==
          doctest::Approx(2.0 * delta / peak).epsilon(1e-2));
    const JsiEntry* out = fixed.table.find(bent.entries[0].j, bent.entries[0].k);
    REQUIRE(out != nullptr);
    CHECK(out->hist(10, 20) == doctest::Approx(out->hist(20, 10)));
    CHECK(out->hist(10, 20) == doctest::Approx(table.entries[0].hist(10, 20) /
                                               table.entries[0].hist.sum())
                                   .epsilon(1e-9));

    JsiTable empty;
    empty.grid1 = table.grid1;
    empty.grid2 = table.grid2;
    CHECK_THROWS_AS(symmetrize(empty), ConfigError);
}

TEST_CASE("selection: shipped settings reproduce the frozen channel set") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p);
    ModeSet set = select_orthogonal(table, 0.15, 0.16);

    std::vector<std::pair<int, int>> expected{{-1, 1}, {0, 3},  {-3, 0},
                                              {-2, 3}, {2, 3},  {-3, -2}};
    REQUIRE(set.modes.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(set.modes[i] == expected[i]);
    }

    double worst = 0.0;
    for (int a = 0; a < set.overlaps.rows(); ++a) {
        for (int b = a + 1; b < set.overlaps.cols(); ++b) {
            worst = std::max(worst, set.overlaps(a, b));
        }
    }
    CHECK(worst == doctest::Approx(0.034009930002).epsilon(1e-6));
    CHECK(worst < 0.15);  // margin 0.116 below the threshold
    // mode count within the design window and never above the pair bound
    double K = p.schmidt_number();
    int bound = static_cast<int>(std::floor(K * (K - 1.0) / 2.0));
    CHECK(bound == 6);
    CHECK(set.modes.size() >= 4);
    CHECK(set.modes.size() <= static_cast<std::size_t>(bound));
}

TEST_CASE("selection respects threshold and floor semantics") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p, 96);

    // epsilon = 1 admits every candidate above the floor, in weight order
    ModeSet all = select_orthogonal(table, 1.0, 0.0);
    CHECK(all.modes.size() == table.entries.size());
    const JsiEntry* first = table.find(all.modes[0].first, all.modes[0].second);
    for (const auto& e : table.entries) CHECK(first->weight >= e.weight);

    // a high floor trims the candidate list before the greedy pass
    ModeSet trimmed = select_orthogonal(table, 1.0, 0.9);
    CHECK(trimmed.modes.size() < all.modes.size());
    double pmax = first->weight;
    for (auto [j, k] : trimmed.modes) {
        CHECK(table.find(j, k)->weight >= 0.9 * pmax);
    }

    // idempotence: restricting the table to the selected set and selecting
    // again returns the same channels
    ModeSet set = select_orthogonal(table, 0.15, 0.16);
    JsiTable sub;
    sub.grid1 = table.grid1;
    sub.grid2 = table.grid2;
    for (auto [j, k] : set.modes) sub.entries.push_back(*table.find(j, k));
    ModeSet again = select_orthogonal(sub, 0.15, 0.16);
    REQUIRE(again.modes.size() == set.modes.size());
    for (std::size_t i = 0; i < set.modes.size(); ++i) {
        CHECK(again.modes[i] == set.modes[i]);
    }

    CHECK_THROWS_AS(select_orthogonal(table, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(select_orthogonal(table, 1.5, 0.0), ConfigError);
    CHECK_THROWS_AS(select_orthogonal(table, 0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(select_orthogonal(table, 0.5, -0.1), ConfigError);
}

TEST_CASE("stronger correlation grows the channel count within the pair bound") {
    JsaParams p = shipped_params();
    FilterBank bank = make_filter_bank(830.0, 1.5, 4, 1.5, FilterShape::delta, 1);
    std::vector<std::size_t> frozen{6, 7, 7, 8, 10, 14, 15, 15, 16, 16};
    std::size_t prev = 0;
    for (int i = 0; i < 10; ++i) {
        JsaParams q = p;
        q.alpha = p.alpha * (1.0 + 0.025 * i / 9.0);
        double K = q.schmidt_number();
        auto bound = static_cast<std::size_t>(std::floor(K * (K - 1.0) / 2.0));
        SpectralGrid g = default_signal_grid(q, 256, 5.0);
        ModeSet set = select_orthogonal(model_jsi_table(q, bank, g, g), 0.15, 0.16);
        CHECK(set.modes.size() == frozen[i]);
        CHECK(set.modes.size() <= bound);
        CHECK(set.modes.size() >= prev);
        prev = set.modes.size();
    }
}

TEST_CASE("multiplex report bookkeeping") {
    JsaParams p = shipped_params();
    JsiTable table = shipped_table(p, 128);
    ModeSet set = select_orthogonal(table, 0.15, 0.16);
    ChannelReport rep = multiplex_report(set, table);
    REQUIRE(rep.channels.size() == set.modes.size());

    double shares = 0.0, total_all = 0.0, total_sel = 0.0;
    for (const auto& e : table.entries) total_all += e.weight;
    for (std::size_t i = 0; i < rep.channels.size(); ++i) {
        const auto& c = rep.channels[i];
        CHECK(c.j == set.modes[i].first);
        CHECK(c.k == set.modes[i].second);
        CHECK(c.rate_share > 0.0);
        CHECK(c.max_crosstalk <= set.epsilon);
        shares += c.rate_share;
        total_sel += table.find(c.j, c.k)->weight;
    }
    CHECK(shares == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.discarded_fraction ==
          doctest::Approx(1.0 - total_sel / total_all).epsilon(1e-12));

    // share ratios reproduce weight ratios
    CHECK(rep.channels[0].rate_share / rep.channels[1].rate_share ==
          doctest::Approx(table.find(rep.channels[0].j, rep.channels[0].k)->weight /
                          table.find(rep.channels[1].j, rep.channels[1].k)->weight)
              .epsilon(1e-12));

    // single-channel degenerate case
    JsiTable solo;
    solo.grid1 = table.grid1;
    solo.grid2 = table.grid2;
    solo.entries.push_back(table.entries[0]);
    ModeSet one = select_orthogonal(solo, 0.15, 0.0);
    ChannelReport rep1 = multiplex_report(one, solo);
    REQUIRE(rep1.channels.size() == 1);
    CHECK(rep1.channels[0].rate_share == 1.0);
    CHECK(rep1.channels[0].max_crosstalk == 0.0);
    CHECK(rep1.discarded_fraction == doctest::Approx(0.0));

    // a mode absent from the table is a contract violation
    ModeSet ghost = one;
    ghost.modes[0] = {7, 8};
    CHECK_THROWS_AS(multiplex_report(ghost, solo), ConfigError);
}
