#pragma once

#include <array>
#include <functional>
#include <vector>

#include "dmpa/core_model.hpp"

namespace dmpa {

/// Two-sided unconditional power spectral densities, normalized so that
/// the integral of s(omega) d omega / 2 pi equals the stationary variance.
struct SpectrumResult {
    std::vector<double> omega_grid;
    std::vector<double> s_xx;
    std::vector<double> s_yy;
    std::vector<double> s_xy;  ///< real (symmetrized) cross spectrum
};

/// Spectral densities at a single angular frequency: {s_xx, s_yy, s_xy}.
std::array<double, 3> psd_at(const RotatingFrameParams& p, const Scheme& scheme, double omega);

/// Evaluates psd_at over the grid using the full matrix transfer function
/// (i omega + A)^-1 with white input noise 2 gamma (N + 1/2 + backaction) per quadrature.
/// Throws InstabilityError for an unstable drift.
SpectrumResult unconditional_psd(const RotatingFrameParams& p, const Scheme& scheme,
                                 const std::vector<double>& omega_grid);

/// Adaptive Simpson quadrature of f over [a, b] to relative tolerance rel_tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth = 50);

/// Integrated PSDs {int s_xx, int s_yy, int s_xy} d omega / 2 pi over the whole
/// real line (mapped to a finite interval by omega = gamma tan theta).
std::array<double, 3> integrated_psd(const RotatingFrameParams& p, const Scheme& scheme, double rel_tol = 1e-9);

/// Symmetric linear grid of n points on [-omega_max, omega_max].
std::vector<double> linear_grid(double omega_max, std::size_t n);

}  // namespace dmpa
