#include "dmpa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

namespace dmpa {

namespace {

// Which quadratures the conditioning acts on (diagonal of H^T H).
struct Conditioning {
    real k;   // 4 eta mu
    real mx;  // X measured
    real my;  // Y measured
};

Conditioning conditioning(const RotatingFrameParams& p, const Scheme& scheme) {
    const real k = 4.0L * p.eta * p.mu;
    return scheme.kind == SchemeKind::DMPA ? Conditioning{k, 1, 1} : Conditioning{k, 1, 0};
}

void require_valid(const RotatingFrameParams& p, const Scheme& scheme) {
    auto report = validate(p, scheme);
    // Unstable drift is allowed here: conditioning can still bound the covariance.
    std::erase_if(report.errors, [](const std::string& e) { return e.rfind("unconditional drift", 0) == 0; });
    if (!report.errors.empty()) throw ValidationError(report.errors.front());
}

std::string describe(const CovarianceState& v) {
    std::ostringstream os;
    os.precision(12);
    os << "(v_x=" << static_cast<double>(v.v_x) << ", v_y=" << static_cast<double>(v.v_y)
       << ", c=" << static_cast<double>(v.c) << ")";
    return os.str();
}

bool diverged(const CovarianceState& v, real limit) {
    return !(std::isfinite(v.v_x) && std::isfinite(v.v_y) && std::isfinite(v.c)) || v.v_x > limit ||
           v.v_y > limit;
}

using Vec3 = std::array<real, 3>;

Vec3 to_vec(const CovarianceState& v) { return {v.v_x, v.v_y, v.c}; }
CovarianceState from_vec(const Vec3& x) { return {x[0], x[1], x[2]}; }

// Solves J dx = b by Gaussian elimination with partial pivoting.
std::optional<Vec3> solve3(std::array<std::array<real, 3>, 3> j, Vec3 b) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(j[r][col]) > std::abs(j[piv][col])) piv = r;
        if (j[piv][col] == 0) return std::nullopt;
        std::swap(j[col], j[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const real f = j[r][col] / j[col][col];
            for (int k = col; k < 3; ++k) j[r][k] -= f * j[col][k];
            b[r] -= f * b[col];
        }
    }
    Vec3 x{};
    for (int r = 2; r >= 0; --r) {
        real s = b[r];
        for (int k = r + 1; k < 3; ++k) s -= j[r][k] * x[k];
        x[r] = s / j[r][r];
    }
    return x;
}

struct NewtonResult {
    CovarianceState state;
    real residual;
    int iterations;
};

NewtonResult newton(CovarianceState v, const RotatingFrameParams& p, const Scheme& scheme, int max_iterations,
                    real target) {
    real res = riccati_residual(v, p, scheme);
    int it = 0;
    for (; it < max_iterations && res > target; ++it) {
        const auto f = to_vec(riccati_rhs(v, p, scheme));
        const auto step = solve3(riccati_jacobian(v, p, scheme), {-f[0], -f[1], -f[2]});
        if (!step) break;
        real lambda = 1;
        bool improved = false;
        for (int halving = 0; halving <= 20; ++halving, lambda /= 2) {
            const CovarianceState trial{v.v_x + lambda * (*step)[0], v.v_y + lambda * (*step)[1],
                                        v.c + lambda * (*step)[2]};
            const real r = riccati_residual(trial, p, scheme);
            if (trial.v_x > 0 && trial.v_y > 0 && r < res) {
                v = trial;
                res = r;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return {v, res, it};
}

// Integrates the Riccati equation from the unconditional-scale state in doubling
// chunks and hands each intermediate state to Newton until one is accepted.
template <class Accept>
std::optional<NewtonResult> integrate_then_polish(const RotatingFrameParams& p, const Scheme& scheme,
                                                  int max_iterations, real target, Accept&& accept,
                                                  NewtonResult& last) {
    namespace odeint = boost::numeric::odeint;
    const real limit = 1e12L * sigma2_total(p);
    const double s2 = sigma2_total(p);
    Vec3 x{s2, s2, 0.0L};
    auto system = [&](const Vec3& s, Vec3& dxdt, real) { dxdt = to_vec(riccati_rhs(from_vec(s), p, scheme)); };
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<Vec3, real>>(1e-12L, 1e-10L);
    const real t_end = 20.0L / p.gamma;
    real dt = default_riccati_dt(from_vec(x), p, scheme);
    real t = 0;
    real chunk = 100 * dt;
    while (true) {
        const real t_next = std::min(t_end, t + chunk);
        odeint::integrate_adaptive(stepper, system, x, t, t_next, dt, [&](const Vec3& s, real ts) {
            if (diverged(from_vec(s), limit))
                throw InstabilityError("conditional covariance diverged at t=" + std::to_string(double(ts)),
                                       double(ts));
        });
        t = t_next;
        last = newton(from_vec(x), p, scheme, max_iterations, target);
        if (accept(last)) return last;
        if (t >= t_end) return std::nullopt;
        chunk *= 2;
    }
}

}  // namespace

DriftMatrix drift_matrix(const RotatingFrameParams& p, const Scheme& scheme) {
    DriftMatrix m;
    m.a[0][0] = -p.gamma;
    m.a[1][1] = -p.gamma;
    if (scheme.kind == SchemeKind::DMPA) {
        m.a[0][1] = p.delta + p.chi;
        m.a[1][0] = p.chi - p.delta;
    }
    return m;
}

std::array<double, 2> diffusion_diagonal(const RotatingFrameParams& p, const Scheme& scheme) {
    const double n_ba = p.mu / (2.0 * p.gamma);
    const double base = p.N + 0.5;
    if (scheme.kind == SchemeKind::DMPA) return {2.0 * p.gamma * (base + n_ba), 2.0 * p.gamma * (base + n_ba)};
    return {2.0 * p.gamma * (base + p.n_bad), 2.0 * p.gamma * (base + n_ba)};
}

CovarianceState riccati_rhs(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme) {
    const auto drift = drift_matrix(p, scheme);
    const real a = drift.a[0][0], b = drift.a[0][1], c = drift.a[1][0], d = drift.a[1][1];
    const auto q = diffusion_diagonal(p, scheme);
    const auto m = conditioning(p, scheme);
    CovarianceState out;
    out.v_x = 2 * a * v.v_x + 2 * b * v.c + q[0] - m.k * (m.mx * v.v_x * v.v_x + m.my * v.c * v.c);
    out.v_y = 2 * d * v.v_y + 2 * c * v.c + q[1] - m.k * (m.mx * v.c * v.c + m.my * v.v_y * v.v_y);
    out.c = c * v.v_x + (a + d) * v.c + b * v.v_y - m.k * v.c * (m.mx * v.v_x + m.my * v.v_y);
    return out;
}

std::array<std::array<real, 3>, 3> riccati_jacobian(const CovarianceState& v, const RotatingFrameParams& p,
                                                    const Scheme& scheme) {
    const auto drift = drift_matrix(p, scheme);
    const real a = drift.a[0][0], b = drift.a[0][1], c = drift.a[1][0], d = drift.a[1][1];
    const auto m = conditioning(p, scheme);
    std::array<std::array<real, 3>, 3> j{};
    j[0][0] = 2 * a - 2 * m.k * m.mx * v.v_x;
    j[0][1] = 0;
    j[0][2] = 2 * b - 2 * m.k * m.my * v.c;
    j[1][0] = 0;
    j[1][1] = 2 * d - 2 * m.k * m.my * v.v_y;
    j[1][2] = 2 * c - 2 * m.k * m.mx * v.c;
    j[2][0] = c - m.k * m.mx * v.c;
    j[2][1] = b - m.k * m.my * v.c;
    j[2][2] = (a + d) - m.k * (m.mx * v.v_x + m.my * v.v_y);
    return j;
}

real riccati_residual(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme) {
    const auto f = riccati_rhs(v, p, scheme);
    return std::sqrt(f.v_x * f.v_x + f.v_y * f.v_y + f.c * f.c);
}

CovarianceState rk4_step(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme,
                         double dt) {
    const real h = dt;
    auto axpy = [](const CovarianceState& x, real s, const CovarianceState& k) {
        return CovarianceState{x.v_x + s * k.v_x, x.v_y + s * k.v_y, x.c + s * k.c};
    };
    const auto k1 = riccati_rhs(v, p, scheme);
    const auto k2 = riccati_rhs(axpy(v, h / 2, k1), p, scheme);
    const auto k3 = riccati_rhs(axpy(v, h / 2, k2), p, scheme);
    const auto k4 = riccati_rhs(axpy(v, h, k3), p, scheme);
    return {v.v_x + h / 6 * (k1.v_x + 2 * k2.v_x + 2 * k3.v_x + k4.v_x),
            v.v_y + h / 6 * (k1.v_y + 2 * k2.v_y + 2 * k3.v_y + k4.v_y),
            v.c + h / 6 * (k1.c + 2 * k2.c + 2 * k3.c + k4.c)};
}

double default_riccati_dt(const CovarianceState& initial, const RotatingFrameParams& p, const Scheme& scheme) {
    const auto drift = drift_matrix(p, scheme);
    const double conditioning_rate =
        p.gamma + 2.0 * p.eta * p.mu * static_cast<double>(initial.v_x + initial.v_y);
    const double rotation = std::sqrt(std::abs(drift.a[0][1] * drift.a[1][0]));
    return 0.01 / std::max({p.gamma, conditioning_rate, rotation});
}

CovarianceSeries integrate_riccati(const CovarianceState& initial, const RotatingFrameParams& p,
                                   const Scheme& scheme, double t_end, double dt) {
    if (!(dt > 0)) throw UsageError("integrate_riccati: dt must be > 0");
    if (!(t_end >= dt)) throw UsageError("integrate_riccati: t_end must be >= dt");
    const real limit = 1e12L * sigma2_total(p);
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    CovarianceSeries out;
    out.times.reserve(steps + 1);
    out.states.reserve(steps + 1);
    out.times.push_back(0.0);
    out.states.push_back(initial);
    CovarianceState v = initial;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_prev = out.times.back();
        const double t = std::min(static_cast<double>(k) * dt, t_end);
        v = rk4_step(v, p, scheme, t - t_prev);
        if (diverged(v, limit)) {
            std::ostringstream os;
            os << "covariance diverged (variance above 1e12 * sigma2) at t=" << t;
            throw InstabilityError(os.str(), t);
        }
        out.times.push_back(t);
        out.states.push_back(v);
    }
    return out;
}

double steady_state_tolerance(const RotatingFrameParams& p) { return 1e-12 * p.gamma * sigma2_total(p); }

double riccati_rounding_floor(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme) {
    const auto drift = drift_matrix(p, scheme);
    const real a = std::abs(drift.a[0][0]), b = std::abs(drift.a[0][1]), c = std::abs(drift.a[1][0]),
               d = std::abs(drift.a[1][1]);
    const auto q = diffusion_diagonal(p, scheme);
    const auto m = conditioning(p, scheme);
    const real x = std::abs(v.v_x), y = std::abs(v.v_y), z = std::abs(v.c);
    const real terms[] = {2 * a * x, 2 * b * z, q[0], m.k * m.mx * x * x, m.k * m.my * z * z,
                          2 * d * y, 2 * c * z, q[1], m.k * m.mx * z * z, m.k * m.my * y * y,
                          c * x, (a + d) * z, b * y, m.k * z * (m.mx * x + m.my * y)};
    const real largest = *std::max_element(std::begin(terms), std::end(terms));
    return static_cast<double>(16 * std::numeric_limits<real>::epsilon() * largest);
}

bool is_attracting(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme) {
    // Routh-Hurwitz for the characteristic polynomial l^3 + a2 l^2 + a1 l + a0.
    const auto j = riccati_jacobian(v, p, scheme);
    const real trace = j[0][0] + j[1][1] + j[2][2];
    const real minors = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) + (j[0][0] * j[2][2] - j[0][2] * j[2][0]) +
                        (j[1][1] * j[2][2] - j[1][2] * j[2][1]);
    const real det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                     j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                     j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    const real a2 = -trace, a1 = minors, a0 = -det;
    return a2 > 0 && a0 > 0 && a2 * a1 > a0;
}

SteadyStateSolution solve_steady_state(const RotatingFrameParams& p, const Scheme& scheme,
                                       const SteadyStateOptions& options) {
    require_valid(p, scheme);
    if (p.eta * p.mu == 0.0) {
        const auto v = lyapunov_unconditional(p, scheme);
        return {v, static_cast<double>(riccati_residual(v, p, scheme)), steady_state_tolerance(p), 0, true};
    }

    const real tol = steady_state_tolerance(p);
    // Polish well below the acceptance tolerance; stagnation stops it earlier.
    const real target = tol * 1e-3L;

    auto bound = [&](const CovarianceState& v) { return std::max<real>(tol, riccati_rounding_floor(v, p, scheme)); };
    auto accept = [&](const NewtonResult& r) {
        return r.residual <= bound(r.state) && r.state.v_x > 0 && r.state.v_y > 0 &&
               is_attracting(r.state, p, scheme);
    };

    if (options.seed) {
        const auto r = newton(*options.seed, p, scheme, options.max_iterations, target);
        if (accept(r)) return {r.state, static_cast<double>(r.residual), double(bound(r.state)), r.iterations, false};
    }
    NewtonResult r;
    if (const auto ok = integrate_then_polish(p, scheme, options.max_iterations, target, accept, r))
        return {ok->state, static_cast<double>(ok->residual), double(bound(ok->state)), ok->iterations, false};
    std::ostringstream os;
    os << "steady state did not converge: residual " << static_cast<double>(r.residual) << " (tolerance "
       << static_cast<double>(bound(r.state)) << ") at " << describe(r.state);
    throw ConvergenceError(os.str(), r.state, static_cast<double>(r.residual));
}

CovarianceState lyapunov_unconditional(const RotatingFrameParams& p, const Scheme& scheme) {
    const auto report = validate(p, scheme);
    if (!report.stable) {
        std::ostringstream os;
        os << "unconditional drift is unstable (max eigenvalue real part " << report.max_real_eigenvalue << ")";
        throw InstabilityError(os.str());
    }
    const auto drift = drift_matrix(p, scheme);
    const real a = drift.a[0][0], b = drift.a[0][1], c = drift.a[1][0], d = drift.a[1][1];
    const auto q = diffusion_diagonal(p, scheme);
    // Unknowns (v_x, c, v_y):
    //   2a v_x + 2b c            = -q_x
    //   c' v_x + (a+d) c + b v_y = 0      (c' = drift(1,0))
    //            2c' c + 2d v_y  = -q_y
    const real m00 = 2 * a, m01 = 2 * b, m02 = 0;
    const real m10 = c, m11 = a + d, m12 = b;
    const real m20 = 0, m21 = 2 * c, m22 = 2 * d;
    const real r0 = -q[0], r1 = 0, r2 = -q[1];
    const real det = m00 * (m11 * m22 - m12 * m21) - m01 * (m10 * m22 - m12 * m20) + m02 * (m10 * m21 - m11 * m20);
    const real det_x = r0 * (m11 * m22 - m12 * m21) - m01 * (r1 * m22 - m12 * r2) + m02 * (r1 * m21 - m11 * r2);
    const real det_c = m00 * (r1 * m22 - m12 * r2) - r0 * (m10 * m22 - m12 * m20) + m02 * (m10 * r2 - r1 * m20);
    const real det_y = m00 * (m11 * r2 - r1 * m21) - m01 * (m10 * r2 - r1 * m20) + r0 * (m10 * m21 - m11 * m20);
    return {det_x / det, det_y / det, det_c / det};
}

CovarianceState lyapunov_residual(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme) {
    const auto drift = drift_matrix(p, scheme);
    const real a = drift.a[0][0], b = drift.a[0][1], c = drift.a[1][0], d = drift.a[1][1];
    const auto q = diffusion_diagonal(p, scheme);
    return {2 * a * v.v_x + 2 * b * v.c + q[0], 2 * c * v.c + 2 * d * v.v_y + q[1],
            c * v.v_x + (a + d) * v.c + b * v.v_y};
}

}  // namespace dmpa
