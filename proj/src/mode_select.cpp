#include "specswap/mode_select.hpp"

#include <algorithm>
#include <cmath>

#include "specswap/errors.hpp"
#include "specswap/swap_pure.hpp"

namespace specswap {

namespace {

Eigen::MatrixXd flat_normalized(const Eigen::MatrixXd& hist) {
    double total = hist.sum();
    if (!(total > 0.0)) throw NumericError("histogram carries no counts");
    return hist / total;
}

double cosine_overlap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double dot = (a.array() * b.array()).sum();
    double na = a.squaredNorm();
    double nb = b.squaredNorm();
    if (na <= 0.0 || nb <= 0.0) throw NumericError("histogram carries no counts");
    return dot / std::sqrt(na * nb);
}

void check_grids(const JsiTable& table) {
    for (const auto& entry : table.entries) {
        if (entry.hist.rows() != table.grid1.n || entry.hist.cols() != table.grid2.n) {
            throw ConfigError("histogram shape does not match the table grids");
        }
    }
}

}  // namespace

const JsiEntry* JsiTable::find(int j, int k) const {
    for (const auto& entry : entries) {
        if (entry.j == j && entry.k == k) return &entry;
    }
    return nullptr;
}

JsiTable model_jsi_table(const JsaParams& params, const FilterBank& bank,
                         const SpectralGrid& grid1, const SpectralGrid& grid2) {
    JsiTable table;
    table.grid1 = grid1;
    table.grid2 = grid2;
    int half = (bank.size() - 1) / 2;
    for (int j = -half; j <= half; ++j) {
        for (int k = j + 1; k <= half; ++k) {
            double p = herald_probability(params, bank.at_index(j).center,
                                          bank.at_index(k).center);
            if (p <= 1e-12) continue;
            JsiEntry entry;
            entry.j = j;
            entry.k = k;
            entry.weight = p;
            entry.hist = flat_normalized(heralded_jsi(params, bank.at_index(j).center,
                                                      bank.at_index(k).center,
                                                      grid1, grid2)
                                             .values);
            table.entries.push_back(entry);
        }
    }
    return table;
}

SymmetrizeResult symmetrize(const JsiTable& table) {
    if (table.entries.empty()) throw ConfigError("empty JSI table");
    check_grids(table);
    if (!table.grid1.same_axis(table.grid2)) {
        throw ConfigError("symmetrization needs identical grids on both axes");
    }

    SymmetrizeResult result;
    result.table.grid1 = table.grid1;
    result.table.grid2 = table.grid2;

    std::vector<std::pair<int, int>> pairs;
    for (const auto& entry : table.entries) {
        int lo = std::min(entry.j, entry.k);
        int hi = std::max(entry.j, entry.k);
        if (std::find(pairs.begin(), pairs.end(), std::make_pair(lo, hi)) ==
            pairs.end()) {
            pairs.emplace_back(lo, hi);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    for (auto [lo, hi] : pairs) {
        const JsiEntry* fwd = table.find(lo, hi);
        const JsiEntry* rev = (hi != lo) ? table.find(hi, lo) : nullptr;
        Eigen::MatrixXd combined;
        double weight = 0.0;
        double coverage = 1.0;
        if (fwd && rev) {
            Eigen::MatrixXd a = flat_normalized(fwd->hist);
            Eigen::MatrixXd b = flat_normalized(rev->hist).transpose();
            double residual =
                (a - b).cwiseAbs().maxCoeff() / (0.5 * (a + b)).maxCoeff();
            result.max_residual_asymmetry =
                std::max(result.max_residual_asymmetry, residual);
            combined = 0.5 * (a + b);
            weight = fwd->weight + rev->weight;
            coverage = std::min(fwd->support_coverage, rev->support_coverage);
        } else {
            const JsiEntry* only = fwd ? fwd : rev;
            Eigen::MatrixXd a = flat_normalized(only->hist);
            double residual =
                (a - a.transpose()).cwiseAbs().maxCoeff() / a.maxCoeff();
            result.max_residual_asymmetry =
                std::max(result.max_residual_asymmetry, residual);
            combined = 0.5 * (a + a.transpose());
            weight = only->weight;
            coverage = only->support_coverage;
        }
        JsiEntry out;
        out.j = lo;
        out.k = hi;
        out.hist = combined;
        out.weight = weight;
        out.support_coverage = coverage;
        result.table.entries.push_back(out);
    }
    return result;
}

Eigen::MatrixXd overlap_matrix(const JsiTable& table) {
    check_grids(table);
    int n = static_cast<int>(table.entries.size());
    Eigen::MatrixXd o(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            double val = cosine_overlap(table.entries[a].hist, table.entries[b].hist);
            o(a, b) = val;
            o(b, a) = val;
        }
    }
    return o;
}

Eigen::MatrixXd raw_overlap_matrix(const JsiTable& table) {
    check_grids(table);
    double cell = table.grid1.step() * table.grid2.step();
    int n = static_cast<int>(table.entries.size());
    Eigen::MatrixXd o(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            double val =
                (table.entries[a].hist.array() * table.entries[b].hist.array())
                    .sum() /
                cell;
            o(a, b) = val;
            o(b, a) = val;
        }
    }
    return o;
}

ModeSet select_orthogonal(const JsiTable& table, double epsilon,
                          double min_weight_fraction) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw ConfigError("overlap threshold must lie in (0, 1]");
    }
    if (min_weight_fraction < 0.0 || min_weight_fraction >= 1.0) {
        throw ConfigError("weight floor must lie in [0, 1)");
    }
    check_grids(table);

    double pmax = 0.0;
    for (const auto& entry : table.entries) pmax = std::max(pmax, entry.weight);

    std::vector<const JsiEntry*> candidates;
    for (const auto& entry : table.entries) {
        if (entry.weight >= min_weight_fraction * pmax) candidates.push_back(&entry);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const JsiEntry* a, const JsiEntry* b) {
                  if (a->weight != b->weight) return a->weight > b->weight;
                  if (a->j != b->j) return a->j < b->j;
                  return a->k < b->k;
              });

    std::vector<const JsiEntry*> selected;
    for (const JsiEntry* cand : candidates) {
        bool ok = true;
        for (const JsiEntry* kept : selected) {
            if (cosine_overlap(cand->hist, kept->hist) > epsilon) {
                ok = false;
                break;
            }
        }
        if (ok) selected.push_back(cand);
    }

    ModeSet set;
    set.epsilon = epsilon;
    int n = static_cast<int>(selected.size());
    set.overlaps.resize(n, n);
    for (int a = 0; a < n; ++a) {
        set.modes.emplace_back(selected[a]->j, selected[a]->k);
        for (int b = a; b < n; ++b) {
            double val = cosine_overlap(selected[a]->hist, selected[b]->hist);
            set.overlaps(a, b) = val;
            set.overlaps(b, a) = val;
        }
    }
    return set;
}

ChannelReport multiplex_report(const ModeSet& set, const JsiTable& table) {
    ChannelReport report;
    double total_all = 0.0;
    for (const auto& entry : table.entries) total_all += entry.weight;

    double total_selected = 0.0;
    std::vector<double> weights;
    for (auto [j, k] : set.modes) {
        const JsiEntry* entry = table.find(j, k);
        if (!entry) throw ConfigError("selected mode missing from the table");
        weights.push_back(entry->weight);
        total_selected += entry->weight;
    }
    if (total_selected <= 0.0 && !set.modes.empty()) {
        throw NumericError("selected modes carry no weight");
    }

    int n = static_cast<int>(set.modes.size());
    for (int a = 0; a < n; ++a) {
        ChannelReport::Channel channel;
        channel.j = set.modes[a].first;
        channel.k = set.modes[a].second;
        channel.rate_share = weights[a] / total_selected;
        double worst = 0.0;
        for (int b = 0; b < n; ++b) {
            if (b != a) worst = std::max(worst, set.overlaps(a, b));
        }
        channel.max_crosstalk = worst;
        report.channels.push_back(channel);
    }
    report.discarded_fraction =
        total_all > 0.0 ? 1.0 - total_selected / total_all : 0.0;
    return report;
}

}  // namespace specswap
