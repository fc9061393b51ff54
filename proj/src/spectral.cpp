#include "specswap/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "specswap/errors.hpp"

namespace specswap {

namespace {

double weighted_norm_sq(const SpectralGrid& gr, const SpectralGrid& gc,
                        const Eigen::MatrixXcd& m) {
    double total = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        double wr = gr.weight(i);
        for (int j = 0; j < m.cols(); ++j) {
            total += std::norm(m(i, j)) * wr * gc.weight(j);
        }
    }
    return total;
}

// Truncated sampled Gaussian, normalized to unit sum. Zero-radius kernels
// degenerate to identity.
std::vector<double> blur_kernel(double sigma, double step) {
    int radius = sigma > 0.0 ? static_cast<int>(std::ceil(6.0 * sigma / step)) : 0;
    std::vector<double> k(2 * radius + 1, 0.0);
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        double u = d * step / (sigma > 0.0 ? sigma : 1.0);
        k[d + radius] = std::exp(-0.5 * u * u);
        sum += k[d + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// 1-D zero-padded convolution along each row of m.
Eigen::MatrixXd convolve_rows(const Eigen::MatrixXd& m, const std::vector<double>& k) {
    int radius = (static_cast<int>(k.size()) - 1) / 2;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            double acc = 0.0;
            int lo = std::max(0, j - radius);
            int hi = std::min(static_cast<int>(m.cols()) - 1, j + radius);
            for (int jj = lo; jj <= hi; ++jj) {
                acc += m(i, jj) * k[j - jj + radius];
            }
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

AmplitudeMatrix build_jsa(const JsaParams& params, const SpectralGrid& grid_s,
                          const SpectralGrid& grid_i, double center_offset) {
    params.validate();
    AmplitudeMatrix jsa;
    jsa.grid_row = grid_s;
    jsa.grid_col = grid_i;
    jsa.values.resize(grid_s.n, grid_i.n);
    for (int i = 0; i < grid_s.n; ++i) {
        double ws = grid_s.point(i);
        for (int j = 0; j < grid_i.n; ++j) {
            jsa.values(i, j) = params.amplitude(ws - center_offset, grid_i.point(j) - center_offset);
        }
    }
    double em = edge_mass(jsa);
    if (em > 1e-4) {
        throw NumericError("grid too narrow: edge mass " + std::to_string(em) +
                           " exceeds 1e-4");
    }
    double total = weighted_norm_sq(grid_s, grid_i, jsa.values);
    if (!(total > 0.0)) throw NumericError("amplitude has zero norm on grid");
    jsa.values /= std::sqrt(total);
    return jsa;
}

double edge_mass(const AmplitudeMatrix& jsa) {
    const auto& m = jsa.values;
    double ring = 0.0;
    double total = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        double wr = jsa.grid_row.weight(i);
        bool row_edge = (i == 0 || i == m.rows() - 1);
        for (int j = 0; j < m.cols(); ++j) {
            double cell = std::norm(m(i, j)) * wr * jsa.grid_col.weight(j);
            total += cell;
            if (row_edge || j == 0 || j == m.cols() - 1) ring += cell;
        }
    }
    return total > 0.0 ? ring / total : 1.0;
}

DensityMatrix reduced_density(const AmplitudeMatrix& jsa, Side side) {
    DensityMatrix rho;
    if (side == Side::idler) {
        // rho(w1, w2) = sum_s f(s, w1) conj(f(s, w2)) w_s
        rho.grid = jsa.grid_col;
        Eigen::MatrixXcd weighted = jsa.values;
        for (int i = 0; i < weighted.rows(); ++i) weighted.row(i) *= jsa.grid_row.weight(i);
        rho.values = jsa.values.adjoint() * weighted;
        rho.values = rho.values.conjugate();  // adjoint ordering gives the transpose
    } else {
        rho.grid = jsa.grid_row;
        Eigen::MatrixXcd weighted = jsa.values;
        for (int j = 0; j < weighted.cols(); ++j) weighted.col(j) *= jsa.grid_col.weight(j);
        rho.values = weighted * jsa.values.adjoint();
    }
    // enforce hermiticity against rounding
    rho.values = 0.5 * (rho.values + rho.values.adjoint().eval());
    return rho;
}

SchmidtResult schmidt_decompose(const AmplitudeMatrix& jsa) {
    Eigen::MatrixXcd m = jsa.values;
    for (int i = 0; i < m.rows(); ++i) m.row(i) *= std::sqrt(jsa.grid_row.weight(i));
    for (int j = 0; j < m.cols(); ++j) m.col(j) *= std::sqrt(jsa.grid_col.weight(j));
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
    Eigen::VectorXd sv = svd.singularValues();
    SchmidtResult res;
    res.coefficients.resize(sv.size());
    double sum = 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        res.coefficients[i] = sv(i) * sv(i);
        sum += res.coefficients[i];
    }
    if (!(sum > 0.0)) throw NumericError("schmidt decomposition of zero matrix");
    double sumsq = 0.0;
    for (double& c : res.coefficients) {
        c /= sum;
        sumsq += c * c;
    }
    res.K = 1.0 / sumsq;
    return res;
}

double purity(const DensityMatrix& rho) {
    // Tr rho^2 = sum_ij |rho_ij|^2 w_i w_j for hermitian rho
    double acc = 0.0;
    for (int i = 0; i < rho.values.rows(); ++i) {
        double wi = rho.grid.weight(i);
        for (int j = 0; j < rho.values.cols(); ++j) {
            acc += std::norm(rho.values(i, j)) * wi * rho.grid.weight(j);
        }
    }
    return acc;
}

std::complex<double> overlap_integral(const SpectralGrid& grid,
                                      const Eigen::VectorXcd& a,
                                      const Eigen::VectorXcd& b) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < a.size(); ++i) {
        acc += std::conj(a(i)) * b(i) * grid.weight(i);
    }
    return acc;
}

std::complex<double> overlap_integral(const AmplitudeMatrix& a, const AmplitudeMatrix& b) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < a.values.rows(); ++i) {
        double wr = a.grid_row.weight(i);
        for (int j = 0; j < a.values.cols(); ++j) {
            acc += std::conj(a.values(i, j)) * b.values(i, j) * wr * a.grid_col.weight(j);
        }
    }
    return acc;
}

AmplitudeMatrix blurred_amplitude(const AmplitudeMatrix& jsa, double sigma_row,
                                  double sigma_col) {
    Eigen::MatrixXd jsi(jsa.values.rows(), jsa.values.cols());
    for (int i = 0; i < jsi.rows(); ++i)
        for (int j = 0; j < jsi.cols(); ++j) jsi(i, j) = std::norm(jsa.values(i, j));

    auto krow = blur_kernel(sigma_row, jsa.grid_row.step());
    auto kcol = blur_kernel(sigma_col, jsa.grid_col.step());
    Eigen::MatrixXd blurred = convolve_rows(jsi, kcol);
    blurred = convolve_rows(blurred.transpose().eval(), krow).transpose();

    AmplitudeMatrix out;
    out.grid_row = jsa.grid_row;
    out.grid_col = jsa.grid_col;
    out.values.resize(jsi.rows(), jsi.cols());
    for (int i = 0; i < jsi.rows(); ++i)
        for (int j = 0; j < jsi.cols(); ++j)
            out.values(i, j) = std::sqrt(std::max(blurred(i, j), 0.0));
    double total = weighted_norm_sq(out.grid_row, out.grid_col, out.values);
    if (!(total > 0.0)) throw NumericError("blurred amplitude has zero norm");
    out.values /= std::sqrt(total);
    return out;
}

SpectralGrid default_signal_grid(const JsaParams& p, int n, double span_sigmas) {
    return make_grid(p.omega0, 2.0 * span_sigmas * p.marginal_sigma_s(), n);
}

SpectralGrid default_idler_grid(const JsaParams& p, int n, double span_sigmas) {
    return make_grid(p.omega0, 2.0 * span_sigmas * p.marginal_sigma_i(), n);
}

}  // namespace specswap
