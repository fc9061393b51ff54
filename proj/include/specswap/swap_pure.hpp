#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specswap/grid.hpp"
#include "specswap/source.hpp"
#include "specswap/spectral.hpp"

namespace specswap {

// Signal-photon amplitude heralded by an exact idler frequency.
struct ConditionalMode {
    SpectralGrid grid;
    Eigen::VectorXcd values;  // unit L2 norm under grid weights
    double herald = 0.0;      // idler frequency Omega, rad/ps
    double center = 0.0;      // completed-square Gaussian center, rad/ps
    double width = 0.0;       // sigma_s, rad/ps
};

struct HeraldedBellPure {
    int j = 0;
    int k = 0;
    ConditionalMode mode_j;
    ConditionalMode mode_k;
    double overlap_sq = 0.0;  // |<phi_j|phi_k>|^2
    double c_jk = 0.0;        // 1 - overlap_sq
    double p_jk = 0.0;        // heralding probability density
};

struct HeraldedJsi {
    SpectralGrid grid1;
    SpectralGrid grid2;
    Eigen::MatrixXd values;  // sums to 1 under grid weights
};

enum class FringeModel { exact, approximate };

struct FringeCurve {
    std::vector<double> tau;  // ps
    std::vector<double> probability;
    std::string label;
    FringeModel model = FringeModel::exact;
};

// Bundle of the two independent routes to the resolution-free observables:
// weighted sums over a delta-limit bin tiling vs direct closed forms.
struct IntegratedObservables {
    SpectralGrid grid1, grid2;
    Eigen::MatrixXd jsi_sum;     // sum_jk p_jk F_jk * dOmega^2, density over (w1,w2)
    Eigen::MatrixXd jsi_closed;  // [rho_s rho_s - |rho_s|^2]/2
    std::vector<double> tau;
    std::vector<double> fringe_sum;     // sum_jk p_jk P_jk * dOmega^2, absolute
    std::vector<double> fringe_closed;  // four-term closed form, absolute
    Eigen::MatrixXd p;                  // p density at bin-center pairs
    std::vector<double> bin_centers;
    double total_weight_ordered = 0.0;  // sum over ordered j != k, times dOmega^2
    double closed_weight_unordered = 0.0;  // (1 - Tr rho_i^2)/4
    double coverage = 0.0;
    double jsi_max_rel_discrepancy = 0.0;
    double fringe_max_rel_discrepancy = 0.0;
};

ConditionalMode conditional_mode(const JsaParams& params, double Omega,
                                 const SpectralGrid& grid);

// Density of idler coincidences behind the swap beamsplitter at (Omega_j,
// Omega_k); vanishes on the diagonal.
double herald_probability(const JsaParams& params, double Omega_j, double Omega_k);

// True when the heralds land so close that the antisymmetric component is
// numerically gone; the fringe and JSI operations reject such pairs.
bool herald_is_null(const JsaParams& params, double Omega_j, double Omega_k);

HeraldedBellPure heralded_pair(const JsaParams& params, int j, int k,
                               double Omega_j, double Omega_k,
                               const SpectralGrid& grid);

// F(w1,w2) = |phi_j(w1)phi_k(w2) - phi_k(w1)phi_j(w2)|^2 / (2 c_jk).
// Rejects degenerate heralds (c_jk ~ 0): the heralded state is null.
HeraldedJsi heralded_jsi(const JsaParams& params, double Omega_j, double Omega_k,
                         const SpectralGrid& grid1, const SpectralGrid& grid2);

// Exact interference kernel for one heralded pair as a function of the
// relative delay; sigma is the conditional-mode width, domega the center
// separation, overlap_sq = |<phi_j|phi_k>|^2.
double fringe_kernel_exact(double sigma, double domega, double overlap_sq, double tau);
double fringe_kernel_approx(double sigma, double domega, double tau);

FringeCurve fringe_pure(const JsaParams& params, double Omega_j, double Omega_k,
                        const std::vector<double>& tau, FringeModel model);

// Symmetric delay scan covering span/sigma_s on each side of zero.
std::vector<double> default_tau_grid(const JsaParams& params, double span_inv_sigma,
                                     int n);

// bin_centers must be uniformly spaced and tile the idler marginal
// (coverage >= 99.9%, else a numeric error). The tau grid is shared by
// both fringe routes.
IntegratedObservables integrated_observables(const JsaParams& params,
                                             const std::vector<double>& bin_centers,
                                             const SpectralGrid& grid1,
                                             const SpectralGrid& grid2,
                                             const std::vector<double>& tau);

double fringe_visibility(const FringeCurve& curve);

// Lock-in amplitude of the curve at angular frequency beta: the linear
// fringe-contrast estimator used to compare matched/mismatched sources.
double lock_in_amplitude(const FringeCurve& curve, double beta);

}  // namespace specswap
