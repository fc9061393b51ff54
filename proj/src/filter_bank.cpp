#include "specswap/filter_bank.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "specswap/errors.hpp"
#include "specswap/units.hpp"

namespace specswap {

namespace {

// Golub-Welsch on the symmetric tridiagonal Jacobi matrix: eigenvalues are
// the nodes, first eigenvector components give the weights.
void golub_welsch(const std::vector<double>& offdiag, double mu0,
                  std::vector<double>& nodes, std::vector<double>& weights) {
    int n = static_cast<int>(offdiag.size()) + 1;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        j(i, i + 1) = offdiag[i];
        j(i + 1, i) = offdiag[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        double v0 = es.eigenvectors()(0, i);
        weights[i] = mu0 * v0 * v0;
    }
}

}  // namespace

FilterShape parse_filter_shape(const std::string& name) {
    if (name == "gaussian") return FilterShape::gaussian;
    if (name == "tophat") return FilterShape::tophat;
    if (name == "delta") return FilterShape::delta;
    throw ConfigError("unknown filter shape '" + name + "'");
}

std::string filter_shape_name(FilterShape shape) {
    switch (shape) {
        case FilterShape::gaussian: return "gaussian";
        case FilterShape::tophat: return "tophat";
        case FilterShape::delta: return "delta";
    }
    return "?";
}

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw ConfigError("quadrature order must be >= 1");
    std::vector<double> off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k / 2.0);
    golub_welsch(off, 1.0, nodes, weights);  // mu0 = sqrt(pi), folded below
    // normalized so the weights sum to 1 (intensity profile integral)
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw ConfigError("quadrature order must be >= 1");
    std::vector<double> off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    golub_welsch(off, 1.0, nodes, weights);  // mu0 = 2, folded below
}

const Filter& FilterBank::at_index(int j) const {
    for (const auto& f : filters) {
        if (f.index == j) return f;
    }
    throw ConfigError("filter index " + std::to_string(j) + " outside bank");
}

FilterBank make_filter_bank(double center_nm, double pitch_nm, int half_extent,
                            double width_nm, FilterShape shape, int nodes) {
    if (center_nm <= 0.0) throw ConfigError("bank center must be positive");
    if (pitch_nm <= 0.0) throw ConfigError("bank pitch must be positive");
    if (half_extent < 0) throw ConfigError("bank half extent must be >= 0");
    if (shape != FilterShape::delta && width_nm <= 0.0) {
        throw ConfigError("bank width must be positive");
    }
    if (shape == FilterShape::tophat && width_nm > pitch_nm) {
        throw ConfigError("tophat passbands overlap: width " +
                          std::to_string(width_nm) + " nm exceeds pitch " +
                          std::to_string(pitch_nm) + " nm");
    }
    if (shape == FilterShape::delta) nodes = 1;
    if (nodes < 1) throw ConfigError("bank nodes must be >= 1");

    FilterBank bank;
    bank.shape = shape;
    bank.pitch_nm = pitch_nm;
    bank.width_nm = width_nm;

    std::vector<double> qx, qw;
    double sigma = 0.0, half = 0.0;
    if (shape == FilterShape::gaussian) {
        sigma = fwhm_to_sigma(width_nm_to_rad_ps(width_nm, center_nm));
        gauss_hermite(nodes, qx, qw);
    } else if (shape == FilterShape::tophat) {
        half = 0.5 * width_nm_to_rad_ps(width_nm, center_nm);
        gauss_legendre(nodes, qx, qw);
    } else {
        qx = {0.0};
        qw = {1.0};
    }
    double wsum = 0.0;
    for (double w : qw) wsum += w;
    for (double& w : qw) w /= wsum;

    for (int j = -half_extent; j <= half_extent; ++j) {
        Filter f;
        f.index = j;
        f.center_nm = center_nm + pitch_nm * j;
        f.center = nm_to_rad_ps(f.center_nm);
        f.sigma = sigma;
        f.half_width = half;
        f.nodes.resize(qx.size());
        f.weights = qw;
        for (std::size_t k = 0; k < qx.size(); ++k) {
            double scale = (shape == FilterShape::gaussian) ? std::sqrt(2.0) * sigma
                         : (shape == FilterShape::tophat)   ? half
                                                            : 0.0;
            f.nodes[k] = f.center + scale * qx[k];
        }
        bank.filters.push_back(std::move(f));
    }
    return bank;
}

}  // namespace specswap
