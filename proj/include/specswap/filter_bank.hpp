#pragma once

#include <string>
#include <vector>

namespace specswap {

enum class FilterShape { gaussian, tophat, delta };

FilterShape parse_filter_shape(const std::string& name);
std::string filter_shape_name(FilterShape shape);

// One herald filter: center in rad/ps plus a normalized intensity
// quadrature (sum of weights = 1) for ensemble averages over the passband.
struct Filter {
    int index = 0;          // bin index, wavelength-ordered
    double center_nm = 0.0;
    double center = 0.0;    // rad/ps, exact 2 pi c / lambda
    double sigma = 0.0;     // gaussian std in rad/ps, 0 for delta
    double half_width = 0.0;  // tophat half-width in rad/ps, 0 otherwise
    std::vector<double> nodes;    // rad/ps
    std::vector<double> weights;  // sum to 1
};

struct FilterBank {
    FilterShape shape = FilterShape::delta;
    double pitch_nm = 0.0;
    double width_nm = 0.0;  // intensity FWHM for gaussian, full width for tophat
    std::vector<Filter> filters;  // index -half_extent .. +half_extent

    const Filter& at_index(int j) const;
    int size() const { return static_cast<int>(filters.size()); }
};

// Bins at lambda = center_nm + pitch_nm * j, j in [-half_extent, half_extent].
// Widths are converted to rad/ps at center_nm. Adjacent flat passbands must
// not overlap (width_nm <= pitch_nm for the tophat shape).
FilterBank make_filter_bank(double center_nm, double pitch_nm, int half_extent,
                            double width_nm, FilterShape shape, int nodes);

// Gauss-Hermite rule for integral exp(-u^2) g(u) du, weights / sqrt(pi).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);
// Gauss-Legendre rule on [-1, 1], weights / 2.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace specswap
