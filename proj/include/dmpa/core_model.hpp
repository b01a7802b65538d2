#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dmpa {

/// Mechanical parameters in the laboratory frame.
struct LabFrameParams {
    double omega_m = 0.0;    ///< resonance angular frequency [rad/s]
    double quality_Q = 0.0;  ///< mechanical quality factor
    double k0 = 0.0;         ///< static spring constant [N/m]
    double kr = 0.0;         ///< spring-constant modulation amplitude [N/m]
    double delta = 0.0;      ///< detuning of the drive reference from resonance [rad/s]
};

/// Model rates in the frame rotating at the drive reference frequency.
///
/// Rates are absolute (any consistent time unit). Every analytic result
/// depends only on ratios to gamma; use normalized() to rescale so gamma = 1.
struct RotatingFrameParams {
    double gamma = 1.0;  ///< amplitude damping rate
    double chi = 0.0;    ///< parametric drive rate
    double delta = 0.0;  ///< detuning
    double mu = 0.0;     ///< measurement rate
    double eta = 1.0;    ///< detection efficiency, in [0, 1]
    double N = 0.0;      ///< mean bath phonon number
    double n_bad = 0.0;  ///< spurious backaction occupation of the measured quadrature (BAE only)

    /// Known only when the parameters came from a lab-frame description.
    std::optional<double> quality_Q;

    /// Copy with every rate divided by gamma (gamma becomes 1).
    RotatingFrameParams normalized() const;
};

struct DerivedParams {
    double chi_prime = 0.0;  ///< chi / gamma
    double n_ba = 0.0;       ///< backaction occupation mu / (2 gamma)
    double snr = 0.0;        ///< eta mu (2N + 2 n_ba + 1) / gamma
    double sigma2 = 0.0;     ///< thermal quadrature variance N + 1/2
    double v_g = 0.5;        ///< ground-state quadrature variance
};

DerivedParams derive(const RotatingFrameParams& p);

/// Total quadrature noise N + 1/2 + N_BA driving both quadratures under
/// continuous position measurement.
double sigma2_total(const RotatingFrameParams& p);

enum class SchemeKind { DMPA, BAE };

/// Measurement scheme. For DMPA, qnd_sign selects which QND detuning
/// (delta = qnd_sign * chi) with_qnd_detuning() applies.
struct Scheme {
    SchemeKind kind = SchemeKind::DMPA;
    int qnd_sign = -1;

    static Scheme dmpa(int sign = -1) { return {SchemeKind::DMPA, sign}; }
    static Scheme bae() { return {SchemeKind::BAE, -1}; }
};

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme(const std::string& text);

/// Copy of p with delta = scheme.qnd_sign * chi (DMPA only; BAE returned unchanged).
RotatingFrameParams with_qnd_detuning(RotatingFrameParams p, const Scheme& scheme);

/// True when |delta| equals chi up to a relative tolerance.
bool is_qnd_detuned(const RotatingFrameParams& p, double rel_tol = 1e-12);

/// Converts lab-frame parameters under the rotating-wave approximation.
/// mu, eta, N, n_bad take their defaults (0, 1, 0, 0). Throws ValidationError.
RotatingFrameParams from_lab_frame(const LabFrameParams& lab);

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool stable = false;
    /// Drift eigenvalues as (real, imag) pairs.
    std::array<std::array<double, 2>, 2> eigenvalues{};
    double max_real_eigenvalue = 0.0;

    bool ok() const { return errors.empty() && stable; }
};

ValidationReport validate(const LabFrameParams& lab);
ValidationReport validate(const RotatingFrameParams& params, const Scheme& scheme);

/// Flat key=value configuration (keys case-insensitive, '#' starts a comment).
struct Config {
    std::map<std::string, std::string> values;

    static Config parse(std::istream& in);
    static Config load(const std::string& path);

    std::optional<std::string> get(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;

    /// Fills params and scheme from recognized keys; unknown keys are a UsageError.
    void apply(RotatingFrameParams& params, Scheme& scheme, bool& delta_set) const;
};

}  // namespace dmpa
