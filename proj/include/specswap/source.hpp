#pragma once

#include <cmath>

namespace specswap {

// Two-photon amplitude model
//   f(w_s, w_i) = C exp[-x^2/(4 s_s^2) - y^2/(4 s_i^2) - a x y],
//   x = w_s - omega0, y = w_i - omega0,
// normalized so the squared amplitude integrates to 1. The correlation
// parameter is bounded by |alpha| < 1/(2 s_s s_i); the shorthand
// t = 2 a s_s s_i in (-1, 1) controls every derived quantity below.
struct JsaParams {
    double omega0 = 0.0;   // rad/ps
    double sigma_s = 0.0;  // rad/ps
    double sigma_i = 0.0;  // rad/ps
    double alpha = 0.0;    // (rad/ps)^-2
    double eta = 0.0;      // pair probability per pulse

    void validate() const;  // throws ConfigError

    double t() const { return 2.0 * alpha * sigma_s * sigma_i; }
    double schmidt_number() const { return 1.0 / std::sqrt(1.0 - t() * t()); }

    // C^2 = sqrt(1-t^2) / (2 pi s_s s_i)
    double norm_sq() const;
    double amplitude(double ws, double wi) const;

    // marginal intensity widths; both equal sigma * K
    double marginal_sigma_s() const { return sigma_s * schmidt_number(); }
    double marginal_sigma_i() const { return sigma_i * schmidt_number(); }

    // reduced density matrices, closed form, unit trace
    double rho_idler(double W1, double W2) const;
    double rho_signal(double w1, double w2) const;

    // conditional signal mode for an idler detection at W:
    // Gaussian amplitude centered at omega0 - 2 a s_s^2 (W - omega0),
    // intensity std sigma_s
    double cond_center(double W) const {
        return omega0 - 2.0 * alpha * sigma_s * sigma_s * (W - omega0);
    }
    double cond_width() const { return sigma_s; }

    // <phi_W1 | phi_W2> = exp(-gamma (W1-W2)^2), gamma = a^2 s_s^2 / 2;
    // equals the normalized idler density rho(W1,W2)/sqrt(rho11 rho22)
    double mode_overlap(double W1, double W2) const;

    // beat frequency of the heralded pair: |center(W1) - center(W2)|
    double beat(double W1, double W2) const {
        return std::abs(2.0 * alpha * sigma_s * sigma_s * (W1 - W2));
    }

    // singlet-projected coincidence density at perfect resolution:
    // p(W1,W2) = [rho(W1,W1) rho(W2,W2) - rho(W1,W2)^2] / 2
    double herald_density(double W1, double W2) const;

    // exchange-enhanced pair density for a double emission from one
    // source (both idlers in the same beamsplitter port):
    // [rho11 rho22 + rho12^2] / 2
    double same_source_pair_density(double W1, double W2) const;

    // heralded-state purity behind a Gaussian intensity response of
    // std sigma_f: sqrt(1 - t^2 sf^2 / (s_i^2 + sf^2))
    double purity_filtered(double sigma_f) const;

    // |integral f_this * f_shifted| when the partner model is this one
    // with omega0 displaced by delta on both axes
    double displaced_overlap(double delta) const;
    // inverse of the above
    double offset_for_overlap(double target) const;

    JsaParams with_center_offset(double delta) const {
        JsaParams p = *this;
        p.omega0 += delta;
        return p;
    }
};

}  // namespace specswap
