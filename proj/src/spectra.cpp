#include "dmpa/spectra.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "dmpa/dynamics.hpp"

namespace dmpa {

namespace {

using cplx = std::complex<double>;

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

std::array<double, 3> psd_at(const RotatingFrameParams& p, const Scheme& scheme, double omega) {
    // x(omega) = G(omega) * noise, G = (-i omega I - A)^-1.
    const auto drift = drift_matrix(p, scheme);
    const auto q = diffusion_diagonal(p, scheme);
    const cplx iw(0.0, omega);
    const cplx m00 = -iw - drift.a[0][0], m01 = -drift.a[0][1];
    const cplx m10 = -drift.a[1][0], m11 = -iw - drift.a[1][1];
    const cplx det = m00 * m11 - m01 * m10;
    const cplx g00 = m11 / det, g01 = -m01 / det, g10 = -m10 / det, g11 = m00 / det;
    // S = G diag(q) G^dagger
    const double sxx = q[0] * std::norm(g00) + q[1] * std::norm(g01);
    const double syy = q[0] * std::norm(g10) + q[1] * std::norm(g11);
    const cplx sxy = q[0] * g00 * std::conj(g10) + q[1] * g01 * std::conj(g11);
    return {sxx, syy, sxy.real()};
}

SpectrumResult unconditional_psd(const RotatingFrameParams& p, const Scheme& scheme,
                                 const std::vector<double>& omega_grid) {
    const auto report = validate(p, scheme);
    if (!report.stable) throw InstabilityError("unconditional spectrum undefined: drift is unstable");
    SpectrumResult out;
    out.omega_grid = omega_grid;
    out.s_xx.reserve(omega_grid.size());
    out.s_yy.reserve(omega_grid.size());
    out.s_xy.reserve(omega_grid.size());
    for (const double w : omega_grid) {
        const auto s = psd_at(p, scheme, w);
        out.s_xx.push_back(s[0]);
        out.s_yy.push_back(s[1]);
        out.s_xy.push_back(s[2]);
    }
    return out;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse absolute scale from a 64-panel pass so the tolerance is relative.
    double scale = 0.0;
    const int panels = 64;
    for (int i = 0; i <= panels; ++i) scale += std::abs(f(a + (b - a) * i / panels));
    scale *= (b - a) / panels;
    const double tol = std::max(rel_tol * scale, 1e-300);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::array<double, 3> integrated_psd(const RotatingFrameParams& p, const Scheme& scheme, double rel_tol) {
    const auto report = validate(p, scheme);
    if (!report.stable) throw InstabilityError("unconditional spectrum undefined: drift is unstable");
    const double half_pi = 0.5 * std::numbers::pi;
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        // omega = gamma tan(theta), d omega = gamma sec^2(theta) d theta.
        auto integrand = [&](double theta) {
            const double c = std::cos(theta);
            if (c <= 0.0) return 0.0;
            const double w = p.gamma * std::tan(theta);
            return psd_at(p, scheme, w)[k] * p.gamma / (c * c);
        };
        out[k] = adaptive_simpson(integrand, -half_pi, half_pi, rel_tol) / (2.0 * std::numbers::pi);
    }
    return out;
}

std::vector<double> linear_grid(double omega_max, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = 0.0;
        return g;
    }
    for (std::size_t i = 0; i < n; ++i)
        g[i] = -omega_max + 2.0 * omega_max * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

}  // namespace dmpa
