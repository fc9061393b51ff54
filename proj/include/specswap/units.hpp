#pragma once

#include <cmath>

// Internal unit convention: angular frequency in rad/ps, time in ps,
// wavelength in nm only at file/CLI boundaries.

namespace specswap {

inline constexpr double kSpeedOfLight = 299792.458;  // nm/ps
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// lambda <-> omega, exact reciprocal pair
inline double nm_to_rad_ps(double lambda_nm) { return kTwoPi * kSpeedOfLight / lambda_nm; }
inline double rad_ps_to_nm(double omega) { return kTwoPi * kSpeedOfLight / omega; }

// local width conversion: |d omega / d lambda| at a given center wavelength
inline double width_nm_to_rad_ps(double dlambda_nm, double center_nm) {
    return kTwoPi * kSpeedOfLight / (center_nm * center_nm) * dlambda_nm;
}

// widths quoted in nm are intensity FWHM; 2*sqrt(2 ln 2) converts to std dev
inline constexpr double kFwhmPerSigma = 2.3548200450309493;
inline double fwhm_to_sigma(double fwhm) { return fwhm / kFwhmPerSigma; }
inline double sigma_to_fwhm(double sigma) { return sigma * kFwhmPerSigma; }

}  // namespace specswap
