#include "dmpa/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmpa/closedform.hpp"

namespace dmpa {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

RotatingFrameParams with_mu(RotatingFrameParams p, double mu) {
    p.mu = mu;
    return p;
}

}  // namespace

std::size_t SweepResult::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw UsageError("no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> SweepResult::values(const std::string& name) const {
    const auto idx = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(idx));
    return out;
}

GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                            double tol) {
    GoldenSectionResult r;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    r.evaluations = 2;
    while (std::abs(b - a) > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
        ++r.evaluations;
    }
    if (fc < fd) {
        r.x = c;
        r.fx = fc;
    } else {
        r.x = d;
        r.fx = fd;
    }
    return r;
}

double steady_v_x(const RotatingFrameParams& p, const Scheme& scheme, VxObjective objective,
                  std::optional<CovarianceState>* seed) {
    if (objective == VxObjective::closed_form) return static_cast<double>(dmpa_closed_form(p).v_x);
    SteadyStateOptions opts;
    if (seed) opts.seed = *seed;
    const auto s = solve_steady_state(p, scheme, opts);
    if (seed) *seed = s.state;
    return static_cast<double>(s.state.v_x);
}

MuOptimum optimize_mu(const RotatingFrameParams& p, const OptimizeMuOptions& options) {
    const Scheme scheme = Scheme::dmpa();
    const int n = std::max(options.coarse_points, 3);
    const double lo = options.log10_mu_min, hi = options.log10_mu_max;
    std::optional<CovarianceState> seed;
    int evaluations = 0;
    auto objective = [&](double log_mu) {
        ++evaluations;
        return steady_v_x(with_mu(p, p.gamma * std::pow(10.0, log_mu)), scheme, options.objective, &seed);
    };

    std::vector<double> grid(n), values(n);
    for (int i = 0; i < n; ++i) {
        grid[i] = lo + (hi - lo) * i / (n - 1);
        values[i] = objective(grid[i]);
    }
    std::vector<int> interior_minima;
    for (int i = 1; i + 1 < n; ++i)
        if (values[i] < values[i - 1] && values[i] <= values[i + 1]) interior_minima.push_back(i);
    if (interior_minima.size() > 1) {
        std::ostringstream os;
        os << "V_X(mu) is not unimodal on the coarse grid; log10(mu/gamma), V_X:";
        for (int i = 0; i < n; ++i) os << ' ' << fmt(grid[i]) << ':' << fmt(values[i]);
        throw DomainError(os.str());
    }

    const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
    MuOptimum out;
    if (best == 0 || best == n - 1) {
        out.at_boundary = true;
        out.mu_opt = p.gamma * std::pow(10.0, grid[best]);
        out.v_x_min = values[best];
    } else {
        // Restart the seed chain from the bracket centre.
        seed.reset();
        objective(grid[best]);
        const auto g = golden_section_minimize(objective, grid[best - 1], grid[best + 1], options.tolerance);
        out.mu_opt = p.gamma * std::pow(10.0, g.x);
        out.v_x_min = g.fx;
    }
    const auto final_params = with_mu(p, out.mu_opt);
    out.state = options.objective == VxObjective::closed_form ? dmpa_closed_form(final_params)
                                                                : solve_steady_state(final_params, scheme, {seed}).state;
    out.v_x_min = static_cast<double>(out.state.v_x);
    out.evaluations = evaluations;
    return out;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
    return out;
}

SweepResult figure1_sweep(double eta, double N, std::vector<double> v_x_targets, const Figure1Options& options) {
    for (const double t : v_x_targets)
        if (!(t > 0.0 && t < 0.5)) throw UsageError("figure1 targets must lie in (0, 0.5); got " + fmt(t));
    std::sort(v_x_targets.begin(), v_x_targets.end());

    RotatingFrameParams base;
    base.gamma = 1.0;
    base.eta = eta;
    base.N = N;
    const Scheme dmpa = Scheme::dmpa(options.detuning_sign);

    auto dmpa_at = [&](double chi_prime) {
        auto p = base;
        p.chi = chi_prime;
        p = with_qnd_detuning(p, dmpa);
        return std::make_pair(p, optimize_mu(p, options.optimize));
    };

    SweepResult out;
    out.columns = {"v_x_target", "chi_prime", "mu_opt_over_gamma", "v_x",        "purity_dmpa",    "mu_bae_over_gamma",
                   "v_x_bae",    "purity_bae", "mu_eff_ratio",     "snr",        "dmpa_reachable", "bae_reachable"};
    out.metadata = {{"sweep", "figure1"},
                    {"eta", fmt(eta)},
                    {"N", fmt(N)},
                    {"scheme", "dmpa vs bae (n_bad = 0)"},
                    {"detuning_sign", std::to_string(options.detuning_sign)},
                    {"chi_prime_range", fmt(options.chi_prime_min) + ".." + fmt(options.chi_prime_max)},
                    {"version", kVersion}};

    const double lo_log = std::log10(options.chi_prime_min), hi_log = std::log10(options.chi_prime_max);
    const double v_hi = dmpa_at(options.chi_prime_min).second.v_x_min;  // weakest drive
    const double v_lo = dmpa_at(options.chi_prime_max).second.v_x_min;  // strongest drive

    for (const double target : v_x_targets) {
        std::vector<double> row(out.columns.size(), 0.0);
        row[0] = target;

        // DMPA: optimal V_X decreases with chi'; bisect on log10 chi'.
        if (target >= v_lo && target <= v_hi) {
            double a = lo_log, b = hi_log;
            for (int it = 0; it < 200 && b - a > 1e-9; ++it) {
                const double mid = 0.5 * (a + b);
                if (dmpa_at(std::pow(10.0, mid)).second.v_x_min > target)
                    a = mid;
                else
                    b = mid;
            }
            const double chi_prime = std::pow(10.0, 0.5 * (a + b));
            const auto [p, opt] = dmpa_at(chi_prime);
            const auto at_opt = with_mu(p, opt.mu_opt);
            const auto d = derive(at_opt);
            row[1] = chi_prime;
            row[2] = opt.mu_opt / p.gamma;
            row[3] = opt.v_x_min;
            row[4] = purity_closed(at_opt, dmpa).p.value_or(0.0);
            row[8] = effective_measurement(at_opt).mu_eff_ratio;
            row[9] = d.snr;
            row[10] = 1.0;
        }

        // BAE (n_bad = 0): V_X decreases monotonically with mu; bisect on log10 mu.
        auto bae_vx = [&](double log_mu) {
            return static_cast<double>(bae_closed_form(with_mu(base, std::pow(10.0, log_mu))).v_x);
        };
        const double mu_lo_log = -12.0, mu_hi_log = std::log10(options.mu_bae_max);
        if (eta > 0 && bae_vx(mu_hi_log) <= target && bae_vx(mu_lo_log) >= target) {
            double a = mu_lo_log, b = mu_hi_log;
            for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
                const double mid = 0.5 * (a + b);
                if (bae_vx(mid) > target)
                    a = mid;
                else
                    b = mid;
            }
            const double mu = std::pow(10.0, 0.5 * (a + b));
            const auto p = with_mu(base, mu);
            row[5] = mu;
            row[6] = static_cast<double>(bae_closed_form(p).v_x);
            row[7] = purity_closed(p, Scheme::bae()).p.value_or(0.0);
            row[11] = 1.0;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

Regime classify_regime(double chi_prime, double snr) {
    const double c2 = chi_prime * chi_prime;
    const double weak_edge = std::min(1.0 / c2, c2), strong_edge = std::max(1.0 / c2, c2);
    if (snr < weak_edge) return Regime::weak;
    if (snr > strong_edge) return Regime::strong;
    return Regime::intermediate;
}

double mu_eff_log_slope(double chi_prime, double snr) {
    const double h = 1e-4;
    return (std::log(mu_eff_ratio(chi_prime, snr * std::exp(h))) -
            std::log(mu_eff_ratio(chi_prime, snr * std::exp(-h)))) /
           (2.0 * h);
}

SweepResult figure2_sweep(std::vector<double> chi_primes, std::vector<double> snr_over_chi2_grid) {
    for (const double c : chi_primes)
        if (!(c > 0)) throw UsageError("figure2 chi' values must be positive");
    for (const double x : snr_over_chi2_grid)
        if (!(x > 0)) throw UsageError("figure2 SNR/chi'^2 grid must be positive");
    std::sort(chi_primes.begin(), chi_primes.end());
    std::sort(snr_over_chi2_grid.begin(), snr_over_chi2_grid.end());

    SweepResult out;
    out.columns = {"chi_prime", "snr_over_chi2", "snr", "mu_eff_ratio", "local_slope", "regime"};
    out.metadata = {{"sweep", "figure2"}, {"scheme", "dmpa |delta| = chi"}, {"version", kVersion}};
    for (const double c : chi_primes) {
        for (const double x : snr_over_chi2_grid) {
            const double snr = x * c * c;
            out.rows.push_back({c, x, snr, mu_eff_ratio(c, snr), mu_eff_log_slope(c, snr),
                                static_cast<double>(classify_regime(c, snr))});
        }
    }
    return out;
}

SweepResult parameter_sweep(const RotatingFrameParams& p, const Scheme& scheme, const std::string& variable,
                            const std::vector<double>& values, bool track_qnd) {
    static const char* known[] = {"mu", "chi", "delta", "eta", "N", "n_bad"};
    if (std::find(std::begin(known), std::end(known), variable) == std::end(known))
        throw UsageError("cannot sweep '" + variable + "' (expected mu, chi, delta, eta, N or n_bad)");

    SweepResult out;
    out.columns = {variable, "v_x", "v_y", "c", "purity", "g", "mu_eff_ratio", "snr"};
    out.metadata = {{"sweep", variable},
                    {"scheme", to_string(scheme.kind)},
                    {"gamma", fmt(p.gamma)},
                    {"version", kVersion}};

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::optional<CovarianceState> seed;
    for (const double v : sorted) {
        auto q = p;
        if (variable == "mu") q.mu = v;
        if (variable == "chi") q.chi = v;
        if (variable == "delta") q.delta = v;
        if (variable == "eta") q.eta = v;
        if (variable == "N") q.N = v;
        if (variable == "n_bad") q.n_bad = v;
        if (track_qnd && variable != "delta") q = with_qnd_detuning(q, scheme);
        SteadyStateOptions opts;
        opts.seed = seed;
        const auto s = solve_steady_state(q, scheme, opts).state;
        seed = s;
        const double g = static_cast<double>(s.c / s.v_x);
        out.rows.push_back({v, static_cast<double>(s.v_x), static_cast<double>(s.v_y), static_cast<double>(s.c),
                            purity(s), g, 1.0 + g * g, derive(q).snr});
    }
    return out;
}

}  // namespace dmpa
