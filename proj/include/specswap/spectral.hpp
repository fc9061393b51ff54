#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "specswap/grid.hpp"
#include "specswap/source.hpp"

namespace specswap {

// Complex two-photon amplitude sampled on a pair of axes.
// Normalized: sum |f|^2 w_row w_col = 1 within 1e-10 after construction.
struct AmplitudeMatrix {
    SpectralGrid grid_row;  // signal axis
    SpectralGrid grid_col;  // idler axis
    Eigen::MatrixXcd values;
};

// Hermitian, unit trace (sum of diag * weights).
struct DensityMatrix {
    SpectralGrid grid;
    Eigen::MatrixXcd values;
};

struct SchmidtResult {
    std::vector<double> coefficients;  // descending, sum to 1
    double K = 1.0;                    // 1 / sum(coefficients^2)
};

enum class Side { signal, idler };

// Samples the Gaussian model on the grids and normalizes. center_offset
// displaces the model's degenerate center on both axes (second-source
// distinguishability studies). Throws ConfigError for non-normalizable
// parameters, NumericError when more than 1e-4 of the squared amplitude
// sits on the outermost grid ring.
AmplitudeMatrix build_jsa(const JsaParams& params, const SpectralGrid& grid_s,
                          const SpectralGrid& grid_i, double center_offset = 0.0);

// Fraction of sum |f|^2 w w carried by the outermost ring of cells.
double edge_mass(const AmplitudeMatrix& jsa);

DensityMatrix reduced_density(const AmplitudeMatrix& jsa, Side side);

SchmidtResult schmidt_decompose(const AmplitudeMatrix& jsa);

// Tr(rho^2) with quadrature weights.
double purity(const DensityMatrix& rho);

// sum conj(a) . b . weights, grids must match
std::complex<double> overlap_integral(const SpectralGrid& grid,
                                      const Eigen::VectorXcd& a,
                                      const Eigen::VectorXcd& b);
std::complex<double> overlap_integral(const AmplitudeMatrix& a, const AmplitudeMatrix& b);

// Spectrometer-resolution model: squared amplitude convolved with a
// separable Gaussian kernel (std sigma_row, sigma_col per axis), then
// sqrt and renormalize. The result is a real amplitude on the same axes.
AmplitudeMatrix blurred_amplitude(const AmplitudeMatrix& jsa, double sigma_row,
                                  double sigma_col);

// Default axes: center omega0, half-span = span_sigmas * marginal width
// per side (the marginal intensity stds are sigma_s K and sigma_i K).
SpectralGrid default_signal_grid(const JsaParams& p, int n, double span_sigmas);
SpectralGrid default_idler_grid(const JsaParams& p, int n, double span_sigmas);

}  // namespace specswap
