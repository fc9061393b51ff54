#include "specswap/source.hpp"

#include <cmath>

#include "specswap/errors.hpp"
#include "specswap/units.hpp"

namespace specswap {

void JsaParams::validate() const {
    if (!(sigma_s > 0.0) || !(sigma_i > 0.0))
        throw ConfigError("source widths must be positive");
    if (!(std::abs(alpha) < 1.0 / (2.0 * sigma_s * sigma_i)))
        throw ConfigError(
            "alpha outside the positive-definite range |alpha| < 1/(2 sigma_s sigma_i)");
    if (!(eta > 0.0) || !(eta < 0.5))
        throw ConfigError("eta must lie in (0, 0.5)");
    if (!(omega0 > 0.0)) throw ConfigError("center frequency must be positive");
}

double JsaParams::norm_sq() const {
    double tt = t();
    return std::sqrt(1.0 - tt * tt) / (kTwoPi * sigma_s * sigma_i);
}

double JsaParams::amplitude(double ws, double wi) const {
    double x = ws - omega0;
    double y = wi - omega0;
    // the cross term is grouped so equal widths give exact exchange symmetry
    double e = -x * x / (4.0 * sigma_s * sigma_s) - y * y / (4.0 * sigma_i * sigma_i) -
               alpha * (x * y);
    return std::sqrt(norm_sq()) * std::exp(e);
}

// rho_i(y, y') = C^2 sqrt(2 pi s_s^2) exp[-(b - g)(y^2 + y'^2) + 2 g y y'],
// b = 1/(4 s_i^2), g = a^2 s_s^2 / 2. Unit trace by construction.
double JsaParams::rho_idler(double W1, double W2) const {
    double y1 = W1 - omega0, y2 = W2 - omega0;
    double b = 1.0 / (4.0 * sigma_i * sigma_i);
    double g = 0.5 * alpha * alpha * sigma_s * sigma_s;
    double pref = norm_sq() * std::sqrt(kTwoPi * sigma_s * sigma_s);
    return pref * std::exp(-(b - g) * (y1 * y1 + y2 * y2) + 2.0 * g * (y1 * y2));
}

double JsaParams::rho_signal(double w1, double w2) const {
    double x1 = w1 - omega0, x2 = w2 - omega0;
    double b = 1.0 / (4.0 * sigma_s * sigma_s);
    double g = 0.5 * alpha * alpha * sigma_i * sigma_i;
    double pref = norm_sq() * std::sqrt(kTwoPi * sigma_i * sigma_i);
    return pref * std::exp(-(b - g) * (x1 * x1 + x2 * x2) + 2.0 * g * (x1 * x2));
}

double JsaParams::mode_overlap(double W1, double W2) const {
    double g = 0.5 * alpha * alpha * sigma_s * sigma_s;
    double d = W1 - W2;
    return std::exp(-g * d * d);
}

// factored through the normalized correlation so the determinant cannot
// lose to cancellation as the overlap approaches one
double JsaParams::herald_density(double W1, double W2) const {
    double mo = mode_overlap(W1, W2);
    return 0.5 * rho_idler(W1, W1) * rho_idler(W2, W2) * (1.0 - mo * mo);
}

double JsaParams::same_source_pair_density(double W1, double W2) const {
    double mo = mode_overlap(W1, W2);
    return 0.5 * rho_idler(W1, W1) * rho_idler(W2, W2) * (1.0 + mo * mo);
}

double JsaParams::purity_filtered(double sigma_f) const {
    double tt = t();
    double sf2 = sigma_f * sigma_f;
    return std::sqrt(1.0 - tt * tt * sf2 / (sigma_i * sigma_i + sf2));
}

// integral of f(x,y) f(x-d, y-d) = exp(-d^2 q),
// q = 1/(8 s_s^2) + 1/(8 s_i^2) + a/2
double JsaParams::displaced_overlap(double delta) const {
    double q = 1.0 / (8.0 * sigma_s * sigma_s) + 1.0 / (8.0 * sigma_i * sigma_i) +
               0.5 * alpha;
    return std::exp(-delta * delta * q);
}

double JsaParams::offset_for_overlap(double target) const {
    if (!(target > 0.0) || !(target <= 1.0))
        throw NumericError("overlap target must lie in (0, 1]");
    double q = 1.0 / (8.0 * sigma_s * sigma_s) + 1.0 / (8.0 * sigma_i * sigma_i) +
               0.5 * alpha;
    if (!(q > 0.0)) throw NumericError("displacement overlap is not contracting");
    return std::sqrt(std::log(1.0 / target) / q);
}

}  // namespace specswap
