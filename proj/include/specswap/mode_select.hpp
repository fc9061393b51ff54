#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specswap/filter_bank.hpp"
#include "specswap/grid.hpp"
#include "specswap/source.hpp"

namespace specswap {

// One heralded joint spectral intensity, indexed by its herald bin pair.
// Histograms are stored flat-normalized (plain sum = 1) so overlap sums
// need no grid weights. weight carries the heralding rate (or counts).
struct JsiEntry {
    int j = 0;
    int k = 0;
    Eigen::MatrixXd hist;
    double weight = 0.0;
    double support_coverage = 1.0;  // fraction of mass inside the window
};

struct JsiTable {
    SpectralGrid grid1;
    SpectralGrid grid2;
    std::vector<JsiEntry> entries;

    const JsiEntry* find(int j, int k) const;
};

struct SymmetrizeResult {
    JsiTable table;                       // one entry per unordered pair, j <= k
    double max_residual_asymmetry = 0.0;  // peak-relative, before averaging
};

struct ModeSet {
    double epsilon = 0.0;
    std::vector<std::pair<int, int>> modes;  // selection order
    Eigen::MatrixXd overlaps;                // recomputed for the selected set
};

struct ChannelReport {
    struct Channel {
        int j = 0;
        int k = 0;
        double rate_share = 0.0;
        double max_crosstalk = 0.0;
    };
    std::vector<Channel> channels;
    double discarded_fraction = 0.0;  // heralds lost to unselected bins
};

// Model table over all ordered-below-diagonal bin pairs of the bank,
// using the bin centers as sharp heralds. Pairs with herald probability
// at or below null threshold are omitted.
JsiTable model_jsi_table(const JsaParams& params, const FilterBank& bank,
                         const SpectralGrid& grid1, const SpectralGrid& grid2);

SymmetrizeResult symmetrize(const JsiTable& table);

// Cosine-normalized intensity overlap, O_nn = 1.
Eigen::MatrixXd overlap_matrix(const JsiTable& table);
// Dimensionful integral of the two unit-integral densities.
Eigen::MatrixXd raw_overlap_matrix(const JsiTable& table);

ModeSet select_orthogonal(const JsiTable& table, double epsilon,
                          double min_weight_fraction = 0.0);

ChannelReport multiplex_report(const ModeSet& set, const JsiTable& table);

}  // namespace specswap
