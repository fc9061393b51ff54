#pragma once

#include <vector>

namespace specswap {

// Uniform frequency axis. Spacing is span/(n-1); quadrature weights are
// trapezoid (half weight at the two ends), which converges fast for the
// smooth Gaussian integrands used everywhere in this code base.
struct SpectralGrid {
    double center = 0.0;  // rad/ps
    double span = 0.0;    // rad/ps, full width
    int n = 0;

    double step() const { return span / (n - 1); }
    double lo() const { return center - 0.5 * span; }
    double point(int i) const { return lo() + i * step(); }
    double weight(int i) const {
        double d = step();
        return (i == 0 || i == n - 1) ? 0.5 * d : d;
    }
    std::vector<double> points() const;
    std::vector<double> weights() const;

    bool same_axis(const SpectralGrid& other, double tol = 1e-9) const;
};

// Throws ConfigError unless n >= 2 and span > 0.
SpectralGrid make_grid(double center, double span, int n);

}  // namespace specswap
