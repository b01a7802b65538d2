#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmpa/core_model.hpp"
#include "dmpa/dynamics.hpp"

namespace dmpa {

inline constexpr const char* kVersion = "1.0.0";

/// Tabular sweep output: named columns, one row per sweep point, plus an
/// ordered metadata envelope.
struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;

    std::size_t column(const std::string& name) const;  ///< throws UsageError if absent
    std::vector<double> values(const std::string& name) const;
};

struct GoldenSectionResult {
    double x = 0.0;
    double fx = 0.0;
    int evaluations = 0;
};

/// Minimizes a unimodal f on [a, b] until the bracket is narrower than tol.
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                            double tol);

enum class VxObjective {
    numeric,      ///< Riccati steady state (Newton)
    closed_form,  ///< effective-measurement quadratic, |delta| = chi only
};

struct OptimizeMuOptions {
    double log10_mu_min = -4.0;  ///< in units of gamma
    double log10_mu_max = 6.0;
    double tolerance = 1e-4;  ///< on log10(mu/gamma)
    int coarse_points = 41;
    VxObjective objective = VxObjective::numeric;
};

struct MuOptimum {
    double mu_opt = 0.0;  ///< absolute rate
    double v_x_min = 0.0;
    bool at_boundary = false;
    int evaluations = 0;
    CovarianceState state;
};

/// Steady-state V_X of p as a function of mu (other parameters fixed).
double steady_v_x(const RotatingFrameParams& p, const Scheme& scheme, VxObjective objective,
                  std::optional<CovarianceState>* seed = nullptr);

/// Minimizes steady-state V_X over mu for DMPA. A coarse log grid brackets the
/// minimum; more than one interior local minimum raises a DomainError that
/// lists the grid. A minimum on the grid edge is returned as a boundary optimum.
MuOptimum optimize_mu(const RotatingFrameParams& p, const OptimizeMuOptions& options = {});

struct Figure1Options {
    double chi_prime_min = 1e-2;
    double chi_prime_max = 1e7;
    double mu_bae_max = 1e16;  ///< in units of gamma
    int detuning_sign = -1;
    OptimizeMuOptions optimize;
};

/// Rows (sorted by target V_X): v_x_target, chi_prime, mu_opt_over_gamma, v_x,
/// purity_dmpa, mu_bae_over_gamma, v_x_bae, purity_bae, mu_eff_ratio, snr,
/// dmpa_reachable, bae_reachable. Unreachable entries are zero with the flag cleared.
SweepResult figure1_sweep(double eta, double N, std::vector<double> v_x_targets, const Figure1Options& options = {});

enum class Regime { weak = 0, intermediate = 1, strong = 2 };

/// weak: SNR below both chi'^-2 and chi'^2; strong: above both; intermediate otherwise.
Regime classify_regime(double chi_prime, double snr);

/// d ln(mu_eff/mu) / d ln SNR at fixed chi' (central difference).
double mu_eff_log_slope(double chi_prime, double snr);

/// Rows (sorted by chi', then SNR/chi'^2): chi_prime, snr_over_chi2, snr,
/// mu_eff_ratio, local_slope, regime.
SweepResult figure2_sweep(std::vector<double> chi_primes, std::vector<double> snr_over_chi2_grid);

/// Generic one-parameter steady-state sweep. variable is one of mu, chi, delta,
/// eta, N, n_bad (rates in absolute units). When track_qnd is set and the scheme is
/// DMPA, delta follows qnd_sign * chi. Rows: <variable>, v_x, v_y, c, purity, g, mu_eff_ratio, snr.
SweepResult parameter_sweep(const RotatingFrameParams& p, const Scheme& scheme, const std::string& variable,
                            const std::vector<double>& values, bool track_qnd);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t n);

}  // namespace dmpa
