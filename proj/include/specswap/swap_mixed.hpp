#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "specswap/filter_bank.hpp"
#include "specswap/grid.hpp"
#include "specswap/source.hpp"
#include "specswap/spectral.hpp"
#include "specswap/swap_pure.hpp"

namespace specswap {

// Heralded state behind finite-width filters: a weighted ensemble of
// antisymmetrized pure amplitudes over filter quadrature node pairs.
// node_modes holds one unit-normalized signal mode per quadrature node;
// members reference two node indices. Weights sum to 1.
struct MixedHeralded {
    int j = 0;
    int k = 0;
    SpectralGrid grid;
    std::vector<double> node_freqs;              // idler node frequencies
    int split = 0;                               // node_freqs[0..split) belong to filter j
    std::vector<Eigen::VectorXcd> node_modes;    // conditional mode per node
    struct Member {
        int a = 0;
        int b = 0;
        double weight = 0.0;
        double norm_sq = 0.0;  // ||A||^2 before normalization
    };
    std::vector<Member> members;
    double p_jk = 0.0;
};

struct MixedObservables {
    HeraldedJsi jsi;
    FringeCurve fringe;
};

struct PurityReport {
    double purity_j = 0.0;
    double purity_k = 0.0;
    double hom_visibility = 0.0;  // Tr(rho_j rho_k)
};

struct MismatchReport {
    double v_jk = 0.0;           // |<phi1_j|phi2_j> <phi1_k|phi2_k>|
    double overlap_f1_f2 = 0.0;  // |int f1* f2|
    std::vector<double> phase;   // pump-phase scan, rad
    std::vector<double> fringe_plus;   // P_cc at the + port
    std::vector<double> fringe_minus;  // P_cc at the - port
    double contrast = 0.0;
};

struct BackgroundModel {
    double fraction_source1 = 0.0;  // of the total four-fold rate
    double fraction_source2 = 0.0;
};

double mixed_herald_probability(const JsaParams& params, const FilterBank& bank,
                                int j, int k);

MixedHeralded mixed_heralded_state(const JsaParams& params, const FilterBank& bank,
                                   int j, int k, const SpectralGrid& grid);

MixedObservables mixed_observables(const JsaParams& params, const MixedHeralded& state,
                                   const SpectralGrid& grid1, const SpectralGrid& grid2,
                                   const std::vector<double>& tau);

// Dense four-index kernel rho(w,w'; v,v') reconstructed from the ensemble,
// flattened to (n*n) x (n*n) with row index w*n+v. Small grids only.
Eigen::MatrixXcd reconstruct_kernel(const MixedHeralded& state);

// Same kernel by direct quadrature over the filter passbands, bypassing
// the ensemble representation. Cross-validation path for small grids.
Eigen::MatrixXcd kernel_by_quadrature(const JsaParams& params, const FilterBank& bank,
                                      int j, int k, const SpectralGrid& grid);

// Fidelity <psi| rho |psi> of the mixed state with the delta-limit pure
// Bell amplitude at the filter centers.
double fidelity_with_pure(const JsaParams& params, const MixedHeralded& state);

PurityReport purity_and_hom(const JsaParams& params, const FilterBank& bank,
                            int j, int k);

MismatchReport source_mismatch(const JsaParams& params1, const JsaParams& params2,
                               double Omega_j, double Omega_k,
                               const SpectralGrid& grid_s, const SpectralGrid& grid_i,
                               int phase_points = 256);

// Subtracts the flat same-source contribution and rescales so the far-delay
// baseline sits at 1/2. The model level is (f1 + f2) times the curve mean.
FringeCurve background_correct(const FringeCurve& raw, const BackgroundModel& bg);
FringeCurve background_correct_level(const FringeCurve& raw, double flat_level);

}  // namespace specswap
