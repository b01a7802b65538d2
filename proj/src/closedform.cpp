#include "dmpa/closedform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace dmpa {

namespace {

// Shared pieces of the mu_eff/mu and filter-width expressions:
// u = 1 + 4 SNR, w = 16 chi'^2 SNR, s = sqrt(u^2 + w).
struct Radicals {
    double u, w, s;
};

Radicals radicals(double chi_prime, double snr) {
    const double u = 1.0 + 4.0 * snr;
    const double w = 16.0 * chi_prime * chi_prime * snr;
    return {u, w, std::hypot(u, std::sqrt(w))};
}

void require_qnd(const RotatingFrameParams& p) {
    if (!is_qnd_detuned(p, 1e-9)) {
        std::ostringstream os;
        os << "closed forms require |delta| = chi (got delta=" << p.delta << ", chi=" << p.chi << ")";
        throw UnsupportedConfiguration(os.str());
    }
}

}  // namespace

double mu_eff_ratio(double chi_prime, double snr) {
    // 1 + s - 4 SNR rewritten as 2 + w/(s + u) to avoid cancellation at large SNR.
    const auto r = radicals(chi_prime, snr);
    return 2.0 * (1.0 + chi_prime * chi_prime) / (2.0 + r.w / (r.s + r.u));
}

double covariance_gain(double chi_prime, double snr) {
    // mu_eff/mu - 1 = 32 chi'^2 SNR (1 + chi'^2) / ((s + u)(s + 4 SNR - 1) D), D = 2 + w/(s+u).
    const auto r = radicals(chi_prime, snr);
    if (snr == 0.0) return std::abs(chi_prime);
    const double denom = 2.0 + r.w / (r.s + r.u);
    // s + 4 SNR - 1 written without cancellation: (s - u) + 8 SNR = w/(s + u) + 8 SNR.
    const double s_plus = r.w / (r.s + r.u) + 8.0 * snr;
    return std::sqrt(32.0 * chi_prime * chi_prime * snr * (1.0 + chi_prime * chi_prime) /
                     ((r.s + r.u) * s_plus * denom));
}

double filter_width_ratio(double chi_prime, double snr) {
    const auto r = radicals(chi_prime, snr);
    return std::sqrt((r.u + r.s) / 2.0);
}

EffectiveMeasurement effective_measurement(const RotatingFrameParams& p) {
    require_qnd(p);
    const auto d = derive(p);
    EffectiveMeasurement e;
    e.g = covariance_gain(d.chi_prime, d.snr);
    e.mu_eff_ratio = 1.0 + e.g * e.g;
    e.n_bad_eff = d.n_ba;
    e.alpha = 0.5 * std::atan2(1.0, e.g);
    e.gamma_filter = p.gamma * filter_width_ratio(d.chi_prime, d.snr);
    return e;
}

CovarianceState dmpa_closed_form(const RotatingFrameParams& p) {
    require_qnd(p);
    const auto e = effective_measurement(p);
    const real s2 = sigma2_total(p);
    const real rate = 8.0L * p.eta * p.mu * e.mu_eff_ratio * s2 / p.gamma;
    const real v_x = 2 * s2 / (1 + std::sqrt(1 + rate));
    if (p.eta * p.mu == 0.0) {
        // Unconditioned limit: sum of variances from the filter relation is 0/0.
        const real chi_prime = p.chi / p.gamma;
        return {v_x, s2 * (1 + 2 * chi_prime * chi_prime), chi_prime * s2};
    }
    const real sum = (static_cast<real>(e.gamma_filter) - p.gamma) / (2.0L * p.eta * p.mu);
    return {v_x, sum - v_x, static_cast<real>(e.g) * v_x};
}

StrongDriveAsymptotics strong_drive_asymptotics(const RotatingFrameParams& p) {
    const auto d = derive(p);
    const double noise = 2.0 * p.N + 2.0 * d.n_ba + 1.0;
    const double measure = p.eta * p.mu / p.gamma;
    StrongDriveAsymptotics a;
    a.v_x_quartic = std::pow(noise * noise * noise / (4.0 * d.chi_prime * d.chi_prime * measure), 0.25);
    a.v_y_approx = std::pow(p.chi / (p.eta * p.mu), 2.0 / 3.0) * std::cbrt(a.v_x_quartic / 2.0);
    a.c_approx = p.chi * a.v_x_quartic / (2.0 * p.eta * p.mu * a.v_y_approx);
    a.mu_opt_inf = p.gamma * (p.N + 0.5);
    a.v_x_optimal = std::pow(3.0, 0.75) / (2.0 * std::pow(p.eta, 0.25)) * std::sqrt((2.0 * p.N + 1.0) / d.chi_prime);
    a.v_x_intermediate = std::pow(d.snr, 0.75) / (std::sqrt(2.0 * d.chi_prime) * measure);
    const double cp2 = d.chi_prime * d.chi_prime;
    a.valid = d.chi_prime > 10.0 && d.snr > 10.0 / cp2 && d.snr < cp2 / 10.0;
    return a;
}

CovarianceState bae_closed_form(const RotatingFrameParams& p) {
    const real s_x = p.N + 0.5 + p.n_bad;
    const real x = 8.0L * p.eta * p.mu * s_x / p.gamma;
    // gamma (sqrt(1 + x) - 1)/(4 eta mu), rationalized so mu = 0 gives s_x.
    return {2 * s_x / (std::sqrt(1 + x) + 1), p.N + 0.5L + p.mu / (2.0L * p.gamma), 0};
}

double purity(const CovarianceState& v) {
    const real det = v.determinant();
    if (!(det > 0)) {
        std::ostringstream os;
        os << "covariance determinant " << static_cast<double>(det) << " <= 0: not a valid state";
        throw InvalidStateError(os.str());
    }
    return static_cast<double>(0.25L / det);
}

PurityClosed purity_closed(const RotatingFrameParams& p, const Scheme& scheme) {
    PurityClosed out;
    if (!(p.mu > 0)) {
        out.diverged = true;
        return out;
    }
    out.p_lower_bound = p.eta / (1.0 + p.gamma * (2.0 * p.N + 1.0) / p.mu);
    if (scheme.kind == SchemeKind::BAE) {
        const double root = std::sqrt(1.0 + 4.0 * p.eta * p.mu * (2.0 * p.N + 2.0 * p.n_bad + 1.0) / p.gamma);
        if (root == 1.0) {
            out.diverged = true;
            return out;
        }
        out.p = out.p_lower_bound * 2.0 / (root - 1.0);
        return out;
    }
    require_qnd(p);
    const auto d = derive(p);
    const double ratio = filter_width_ratio(d.chi_prime, d.snr);  // chi'/g
    if (ratio == 1.0) {
        out.diverged = true;
        return out;
    }
    out.p = out.p_lower_bound * (1.0 + 2.0 / (ratio - 1.0));
    return out;
}

}  // namespace dmpa
