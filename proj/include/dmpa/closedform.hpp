#pragma once

#include <optional>

#include "dmpa/core_model.hpp"
#include "dmpa/dynamics.hpp"

namespace dmpa {

/// Quantities that map DMPA at |delta| = chi onto an equivalent single-quadrature
/// (QND) measurement of X.
struct EffectiveMeasurement {
    double g = 0.0;             ///< covariance gain C / V_X
    double mu_eff_ratio = 1.0;  ///< mu_eff / mu = 1 + g^2
    double n_bad_eff = 0.0;     ///< mu / (2 gamma)
    double alpha = 0.0;         ///< squeezing angle, g = cot(2 alpha)
    double gamma_filter = 0.0;  ///< optimal-estimator filter width
};

/// mu_eff / mu as a function of chi' and SNR alone.
double mu_eff_ratio(double chi_prime, double snr);

/// Filter width in units of gamma as a function of chi' and SNR alone.
double filter_width_ratio(double chi_prime, double snr);

/// Gain g = sqrt(mu_eff/mu - 1), evaluated without cancellation.
double covariance_gain(double chi_prime, double snr);

/// Throws UnsupportedConfiguration unless |delta| = chi.
EffectiveMeasurement effective_measurement(const RotatingFrameParams& p);

/// Stationary DMPA covariance at |delta| = chi from the effective-measurement
/// quadratic: V_X solves 0 = -2g V_X + 2g(N + 1/2 + N_BA) - 4 eta mu_eff V_X^2,
/// C = g V_X and V_X + V_Y = (Gamma - gamma) / (2 eta mu).
CovarianceState dmpa_closed_form(const RotatingFrameParams& p);

struct StrongDriveAsymptotics {
    double v_x_quartic = 0.0;          ///< [(2N+2N_BA+1)^3 / (4 chi'^2 eta mu/gamma)]^(1/4)
    double v_y_approx = 0.0;        ///< (chi/(eta mu))^(2/3) (V_X/2)^(1/3), at V_X = v_x_quartic
    double c_approx = 0.0;          ///< chi V_X / (2 eta mu V_Y)
    double mu_opt_inf = 0.0;        ///< gamma (N + 1/2)
    double v_x_optimal = 0.0;          ///< 3^(3/4) / (2 eta^(1/4)) sqrt((2N+1)/chi')
    double v_x_intermediate = 0.0;  ///< SNR^(3/4) / (sqrt(2 chi') eta mu/gamma)
    /// chi' > 10 and 10/chi'^2 < SNR < chi'^2/10.
    bool valid = false;
};

StrongDriveAsymptotics strong_drive_asymptotics(const RotatingFrameParams& p);

/// Stationary BAE covariance: V_X from the quadratic of the X equation, V_Y = N + 1/2 + N_BA, C = 0.
CovarianceState bae_closed_form(const RotatingFrameParams& p);

/// V_g^2 / det; throws InvalidStateError when det <= 0.
double purity(const CovarianceState& v);

struct PurityClosed {
    std::optional<double> p;  ///< empty when the formula diverges (mu = 0)
    double p_lower_bound = 0.0;
    bool diverged = false;
};

/// BAE: eta/(1 + gamma(2N+1)/mu) * 2/(sqrt(1 + 4 eta mu (2N + 2 n_bad + 1)/gamma) - 1).
/// DMPA (|delta| = chi): bound * (1 + 2/(chi'/g - 1)), with chi'/g
/// taken as the filter width Gamma/gamma so chi' = 0 stays finite.
PurityClosed purity_closed(const RotatingFrameParams& p, const Scheme& scheme);

}  // namespace dmpa
