#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dmpa/core_model.hpp"
#include "dmpa/errors.hpp"

namespace dmpa {

/// Extended precision used for covariance arithmetic. Antisqueezed variances
/// reach ~1e4 x the thermal level, so a double-precision state cannot carry a
/// Riccati residual below 1e-12 of the thermal scale.
using real = long double;

/// Symmetric 2x2 covariance of the quadratures (X, Y). Zero-point variance is 1/2.
struct CovarianceState {
    real v_x = 0.5;
    real v_y = 0.5;
    real c = 0.0;  ///< symmetrized covariance <{X,Y}/2>

    real determinant() const { return v_x * v_y - c * c; }
    bool operator==(const CovarianceState&) const = default;
};

/// Linear drift acting on (X, Y); a[0][0] = a[1][1] = -gamma.
struct DriftMatrix {
    std::array<std::array<double, 2>, 2> a{};
};

/// Raised when the steady-state solver fails; carries the last iterate.
class ConvergenceError : public DomainError {
public:
    ConvergenceError(const std::string& what, CovarianceState last, double residual)
        : DomainError(what), last_(last), residual_(residual) {}

    const CovarianceState& last_iterate() const noexcept { return last_; }
    double residual() const noexcept { return residual_; }

private:
    CovarianceState last_;
    double residual_;
};

/// DMPA: [[-g, d+c], [c-d, -g]] (so [[-g, 0], [2c, -g]] at d = -c). BAE: -g * I.
DriftMatrix drift_matrix(const RotatingFrameParams& p, const Scheme& scheme);

/// Diagonal of the white-noise diffusion matrix Q (Q = 2 gamma diag(qx, qy) with
/// backaction heating included).
std::array<double, 2> diffusion_diagonal(const RotatingFrameParams& p, const Scheme& scheme);

/// Time derivative of the conditional covariance. The returned struct holds
/// (dV_X/dt, dV_Y/dt, dC/dt).
CovarianceState riccati_rhs(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme);

/// Jacobian of riccati_rhs with respect to (v_x, v_y, c), row-major.
std::array<std::array<real, 3>, 3> riccati_jacobian(const CovarianceState& v, const RotatingFrameParams& p,
                                                    const Scheme& scheme);

/// Euclidean norm of riccati_rhs.
real riccati_residual(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme);

/// One classical Runge-Kutta step.
CovarianceState rk4_step(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme,
                         double dt);

struct CovarianceSeries {
    std::vector<double> times;
    std::vector<CovarianceState> states;
};

/// Step size from the initial state: 0.01 over the fastest of gamma, the
/// conditioning rate gamma + 2 eta mu (V_X + V_Y) and the coherent rotation rate.
double default_riccati_dt(const CovarianceState& initial, const RotatingFrameParams& p, const Scheme& scheme);

/// Fixed-step RK4 from t = 0 to t_end; sample k is at t = k * dt (the last step
/// is shortened to land on t_end). Throws InstabilityError once any variance
/// exceeds 1e12 times the thermal-plus-backaction level.
CovarianceSeries integrate_riccati(const CovarianceState& initial, const RotatingFrameParams& p,
                                   const Scheme& scheme, double t_end, double dt);

struct SteadyStateOptions {
    /// Newton seed; when absent (or when it converges to a non-attracting root)
    /// the solver integrates towards t = 20/gamma in doubling chunks, trying Newton
    /// after each chunk.
    std::optional<CovarianceState> seed;
    int max_iterations = 100;
};

struct SteadyStateSolution {
    CovarianceState state;
    double residual = 0.0;  ///< |riccati_rhs| at state
    double tolerance = 0.0;  ///< max(steady_state_tolerance, riccati_rounding_floor) at acceptance
    int iterations = 0;
    bool linear = false;  ///< no conditioning: solved through the Lyapunov equation
};

/// Stationary conditional covariance (root of riccati_rhs that attracts the flow).
SteadyStateSolution solve_steady_state(const RotatingFrameParams& p, const Scheme& scheme,
                                       const SteadyStateOptions& options = {});

inline CovarianceState steady_state_numeric(const RotatingFrameParams& p, const Scheme& scheme,
                                            const SteadyStateOptions& options = {}) {
    return solve_steady_state(p, scheme, options).state;
}

/// Residual tolerance for a converged steady state: 1e-12 * gamma * sigma2_total.
double steady_state_tolerance(const RotatingFrameParams& p);

/// Smallest residual resolvable at v in extended precision: 16 ulp of the largest
/// term summed in riccati_rhs. Exceeds steady_state_tolerance only for extreme
/// drives (chi' of order 1e6 and above), where the solver accepts this floor instead.
double riccati_rounding_floor(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme);

/// True when every eigenvalue of the Riccati Jacobian at v has negative real part.
bool is_attracting(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme);

/// Unconditional stationary covariance, A V + V A^T + Q = 0, solved in closed form.
/// Throws InstabilityError for an unstable drift.
CovarianceState lyapunov_unconditional(const RotatingFrameParams& p, const Scheme& scheme);

/// Entrywise A V + V A^T + Q as (xx, yy, xy).
CovarianceState lyapunov_residual(const CovarianceState& v, const RotatingFrameParams& p, const Scheme& scheme);

}  // namespace dmpa
