#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dmpa/core_model.hpp"
#include "dmpa/dynamics.hpp"

namespace dmpa {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (key, counter).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

/// Two independent standard normal deviates for (seed, trajectory, step).
std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> mean_x;
    std::vector<double> mean_y;
    /// Integrated measurement records y_1 (X channel) and y_2 (Y channel). A channel
    /// that is switched off (BAE: Y) stays at zero.
    std::array<std::vector<double>, 2> records;
    std::vector<CovarianceState> cov_path;
    std::uint64_t rng_seed = 0;
};

struct TrajectoryOptions {
    std::array<double, 2> initial_mean{0.0, 0.0};
    /// Defaults to the unconditional stationary covariance.
    std::optional<CovarianceState> initial_cov;
    std::uint64_t trajectory_index = 0;
    /// Test hooks.
    bool zero_noise = false;
    double gain_scale = 1.0;
};

/// Largest decay rate of the conditional-mean dynamics A - 4 eta mu V H^T H
/// (infinity-norm bound), floored at gamma.
double filter_rate(const RotatingFrameParams& p, const Scheme& scheme, const CovarianceState& v);

/// 0.005 / filter_rate at the default initial covariance.
double default_trajectory_dt(const RotatingFrameParams& p, const Scheme& scheme);

/// Euler-Maruyama integration of the conditional means with gain 2 sqrt(eta mu) V H^T;
/// the covariance follows integrate_riccati in lockstep. Records obey
/// dy_i = 2 sqrt(eta mu) (H mean)_i dt + dW_i.
TrajectoryRecord simulate_conditional(const RotatingFrameParams& p, const Scheme& scheme, std::uint64_t seed,
                                      double t_end, double dt, const TrajectoryOptions& options = {});

struct EnsembleEntry {
    const char* name;
    double ensemble_cov;   ///< covariance of conditional means across trajectories
    double conditional;    ///< conditional covariance at t_end
    double unconditional;  ///< Lyapunov prediction
    double std_error;
    double z;
};

struct EnsembleReport {
    std::vector<EnsembleEntry> entries;  ///< xx, yy, xy
    std::array<double, 2> mean_z{};      ///< unbiasedness of mean_x, mean_y
    std::size_t n_traj = 0;
    double t_end = 0.0;
    bool pass = false;
};

struct EnsembleOptions {
    std::uint64_t seed = 1;
    double dt = 0.0;  ///< 0 selects default_trajectory_dt
    double gain_scale = 1.0;
    unsigned threads = 0;  ///< 0 selects hardware concurrency
};

/// Checks Cov(means) + V_cond = V_unconditional at t_end; passes when every |z| < 4.
EnsembleReport ensemble_validate(const RotatingFrameParams& p, const Scheme& scheme, std::size_t n_traj,
                                 double t_end, const EnsembleOptions& options = {});

}  // namespace dmpa
