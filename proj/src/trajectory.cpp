#include "dmpa/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace dmpa {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

// Uniform in (0, 1) from 64 random bits (53 used).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

struct Measurement {
    double scale;  // 2 sqrt(eta mu)
    bool x_on;
    bool y_on;
};

Measurement measurement(const RotatingFrameParams& p, const Scheme& scheme) {
    return {2.0 * std::sqrt(p.eta * p.mu), true, scheme.kind == SchemeKind::DMPA};
}

void require_stable(const RotatingFrameParams& p, const Scheme& scheme) {
    const auto report = validate(p, scheme);
    if (!report.errors.empty()) {
        if (!report.stable && report.errors.front().rfind("unconditional drift", 0) == 0)
            throw InstabilityError(report.errors.front());
        throw ValidationError(report.errors.front());
    }
}

struct MeanPath {
    std::vector<double> x, y;
    std::array<std::vector<double>, 2> records;
};

// Propagates the means along a precomputed covariance path. When full is false
// only the final means are kept.
MeanPath propagate_means(const RotatingFrameParams& p, const Scheme& scheme, const CovarianceSeries& cov,
                         std::uint64_t seed, std::uint64_t index, std::array<double, 2> mean, bool zero_noise,
                         double gain_scale, bool full) {
    const auto drift = drift_matrix(p, scheme);
    const auto m = measurement(p, scheme);
    MeanPath out;
    const std::size_t n = cov.times.size();
    if (full) {
        out.x.reserve(n);
        out.y.reserve(n);
        out.records[0].reserve(n);
        out.records[1].reserve(n);
        out.x.push_back(mean[0]);
        out.y.push_back(mean[1]);
        out.records[0].push_back(0.0);
        out.records[1].push_back(0.0);
    }
    std::array<double, 2> rec{0.0, 0.0};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = cov.times[k + 1] - cov.times[k];
        const auto& v = cov.states[k];
        std::array<double, 2> dw{0.0, 0.0};
        if (!zero_noise) {
            const auto z = gaussian_pair(seed, index, k);
            const double sq = std::sqrt(dt);
            dw = {z[0] * sq, m.y_on ? z[1] * sq : 0.0};
        }
        const double vx = static_cast<double>(v.v_x), vy = static_cast<double>(v.v_y), c = static_cast<double>(v.c);
        // K = scale * V H^T; column 0 is the X channel, column 1 the Y channel.
        const double g = m.scale * gain_scale;
        const double kx = g * (vx * dw[0] + (m.y_on ? c * dw[1] : 0.0));
        const double ky = g * (c * dw[0] + (m.y_on ? vy * dw[1] : 0.0));
        rec[0] += m.scale * mean[0] * dt + dw[0];
        if (m.y_on) rec[1] += m.scale * mean[1] * dt + dw[1];
        const double ax = drift.a[0][0] * mean[0] + drift.a[0][1] * mean[1];
        const double ay = drift.a[1][0] * mean[0] + drift.a[1][1] * mean[1];
        mean = {mean[0] + ax * dt + kx, mean[1] + ay * dt + ky};
        if (full) {
            out.x.push_back(mean[0]);
            out.y.push_back(mean[1]);
            out.records[0].push_back(rec[0]);
            out.records[1].push_back(rec[1]);
        }
    }
    if (!full) {
        out.x = {mean[0]};
        out.y = {mean[1]};
    }
    return out;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step) {
    const auto out = Philox4x32::generate(
        {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
         static_cast<std::uint32_t>(trajectory), static_cast<std::uint32_t>(trajectory >> 32)},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    // Box-Muller.
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

double filter_rate(const RotatingFrameParams& p, const Scheme& scheme, const CovarianceState& v) {
    const auto drift = drift_matrix(p, scheme);
    const double k = 4.0 * p.eta * p.mu;
    const double my = scheme.kind == SchemeKind::DMPA ? 1.0 : 0.0;
    const double vx = static_cast<double>(v.v_x), vy = static_cast<double>(v.v_y), c = static_cast<double>(v.c);
    // A - k V diag(1, my)
    const double b00 = drift.a[0][0] - k * vx, b01 = drift.a[0][1] - k * c * my;
    const double b10 = drift.a[1][0] - k * c, b11 = drift.a[1][1] - k * vy * my;
    const double norm = std::max(std::abs(b00) + std::abs(b01), std::abs(b10) + std::abs(b11));
    return std::max(p.gamma, norm);
}

double default_trajectory_dt(const RotatingFrameParams& p, const Scheme& scheme) {
    return 0.005 / filter_rate(p, scheme, lyapunov_unconditional(p, scheme));
}

TrajectoryRecord simulate_conditional(const RotatingFrameParams& p, const Scheme& scheme, std::uint64_t seed,
                                      double t_end, double dt, const TrajectoryOptions& options) {
    require_stable(p, scheme);
    const CovarianceState v0 = options.initial_cov ? *options.initial_cov : lyapunov_unconditional(p, scheme);
    const double limit = 0.01 / filter_rate(p, scheme, v0);
    if (!(dt > 0) || dt > limit * (1 + 1e-12))
        throw UsageError("trajectory dt must lie in (0, 0.01/Gamma] = (0, " + std::to_string(limit) + "]");

    auto cov = integrate_riccati(v0, p, scheme, t_end, dt);
    auto means = propagate_means(p, scheme, cov, seed, options.trajectory_index, options.initial_mean,
                                 options.zero_noise, options.gain_scale, true);
    TrajectoryRecord rec;
    rec.times = std::move(cov.times);
    rec.cov_path = std::move(cov.states);
    rec.mean_x = std::move(means.x);
    rec.mean_y = std::move(means.y);
    rec.records = std::move(means.records);
    rec.rng_seed = seed;
    return rec;
}

EnsembleReport ensemble_validate(const RotatingFrameParams& p, const Scheme& scheme, std::size_t n_traj,
                                 double t_end, const EnsembleOptions& options) {
    if (n_traj < 100) throw UsageError("ensemble_validate requires n_traj >= 100");
    require_stable(p, scheme);
    const auto v_unc = lyapunov_unconditional(p, scheme);
    const double dt = options.dt > 0 ? options.dt : default_trajectory_dt(p, scheme);
    const auto cov = integrate_riccati(v_unc, p, scheme, t_end, dt);

    std::vector<std::array<double, 2>> finals(n_traj);
    const unsigned threads =
        std::max(1u, std::min<unsigned>(options.threads ? options.threads : std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(n_traj)));
    auto worker = [&](unsigned w) {
        for (std::size_t i = w; i < n_traj; i += threads) {
            const auto m = propagate_means(p, scheme, cov, options.seed, i, {0.0, 0.0}, false, options.gain_scale,
                                           false);
            finals[i] = {m.x.front(), m.y.front()};
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    }

    const double n = static_cast<double>(n_traj);
    double mx = 0, my = 0;
    for (const auto& f : finals) {
        mx += f[0];
        my += f[1];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& f : finals) {
        sxx += (f[0] - mx) * (f[0] - mx);
        syy += (f[1] - my) * (f[1] - my);
        sxy += (f[0] - mx) * (f[1] - my);
    }
    sxx /= n - 1;
    syy /= n - 1;
    sxy /= n - 1;

    const auto& vc = cov.states.back();
    auto entry = [&](const char* name, double ens, real cond, real unc, double se) {
        const double diff = ens + static_cast<double>(cond) - static_cast<double>(unc);
        double z = 0.0;
        if (se > 0) {
            z = diff / se;
        } else if (std::abs(diff) > 1e-9 * std::max(1.0, std::abs(static_cast<double>(unc)))) {
            z = std::copysign(INFINITY, diff);
        }
        return EnsembleEntry{name, ens, static_cast<double>(cond), static_cast<double>(unc), se, z};
    };
    EnsembleReport report;
    report.n_traj = n_traj;
    report.t_end = cov.times.back();
    // Gaussian sampling variance of the covariance estimator: (S_ii S_jj + S_ij^2)/(n-1).
    report.entries.push_back(entry("xx", sxx, vc.v_x, v_unc.v_x, std::sqrt(2.0 * sxx * sxx / (n - 1))));
    report.entries.push_back(entry("yy", syy, vc.v_y, v_unc.v_y, std::sqrt(2.0 * syy * syy / (n - 1))));
    report.entries.push_back(entry("xy", sxy, vc.c, v_unc.c, std::sqrt((sxx * syy + sxy * sxy) / (n - 1))));
    report.mean_z = {sxx > 0 ? mx / std::sqrt(sxx / n) : 0.0, syy > 0 ? my / std::sqrt(syy / n) : 0.0};
    report.pass = std::all_of(report.entries.begin(), report.entries.end(),
                              [](const EnsembleEntry& e) { return std::abs(e.z) < 4.0; }) &&
                  std::abs(report.mean_z[0]) < 4.0 && std::abs(report.mean_z[1]) < 4.0;
    return report;
}

}  // namespace dmpa
