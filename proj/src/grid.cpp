#include "specswap/grid.hpp"

#include <cmath>

#include "specswap/errors.hpp"

namespace specswap {

std::vector<double> SpectralGrid::points() const {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) p[i] = point(i);
    return p;
}

std::vector<double> SpectralGrid::weights() const {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = weight(i);
    return w;
}

bool SpectralGrid::same_axis(const SpectralGrid& other, double tol) const {
    return n == other.n && std::abs(center - other.center) < tol &&
           std::abs(span - other.span) < tol;
}

SpectralGrid make_grid(double center, double span, int n) {
    if (n < 2) throw ConfigError("grid needs at least 2 points");
    if (!(span > 0.0)) throw ConfigError("grid span must be positive");
    return SpectralGrid{center, span, n};
}

}  // namespace specswap
