#include "dmpa/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "dmpa/errors.hpp"

namespace dmpa {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Margin (in units of gamma) below which a stable drift is reported as near threshold.
constexpr double kNearThreshold = 0.1;

}  // namespace

RotatingFrameParams RotatingFrameParams::normalized() const {
    RotatingFrameParams out = *this;
    out.gamma = 1.0;
    out.chi = chi / gamma;
    out.delta = delta / gamma;
    out.mu = mu / gamma;
    return out;
}

DerivedParams derive(const RotatingFrameParams& p) {
    DerivedParams d;
    d.chi_prime = p.chi / p.gamma;
    d.n_ba = p.mu / (2.0 * p.gamma);
    d.snr = p.eta * p.mu * (2.0 * p.N + 2.0 * d.n_ba + 1.0) / p.gamma;
    d.sigma2 = p.N + 0.5;
    d.v_g = 0.5;
    return d;
}

double sigma2_total(const RotatingFrameParams& p) {
    return p.N + 0.5 + p.mu / (2.0 * p.gamma);
}

std::string to_string(SchemeKind kind) {
    return kind == SchemeKind::DMPA ? "dmpa" : "bae";
}

SchemeKind parse_scheme(const std::string& text) {
    const auto t = lower(trim(text));
    if (t == "dmpa") return SchemeKind::DMPA;
    if (t == "bae") return SchemeKind::BAE;
    throw UsageError("unknown scheme '" + text + "' (expected dmpa or bae)");
}

RotatingFrameParams with_qnd_detuning(RotatingFrameParams p, const Scheme& scheme) {
    if (scheme.kind == SchemeKind::DMPA) p.delta = (scheme.qnd_sign < 0 ? -1.0 : 1.0) * p.chi;
    return p;
}

bool is_qnd_detuned(const RotatingFrameParams& p, double rel_tol) {
    const double scale = std::max({std::abs(p.chi), std::abs(p.delta), p.gamma});
    return std::abs(std::abs(p.delta) - std::abs(p.chi)) <= rel_tol * scale;
}

ValidationReport validate(const LabFrameParams& lab) {
    ValidationReport r;
    if (!(lab.omega_m > 0)) r.errors.push_back("omega_m must be > 0 (got " + fmt_num(lab.omega_m) + ")");
    if (!(lab.quality_Q > 0)) r.errors.push_back("quality_Q must be > 0 (got " + fmt_num(lab.quality_Q) + ")");
    if (!(lab.k0 > 0)) r.errors.push_back("k0 must be > 0 (got " + fmt_num(lab.k0) + ")");
    if (!(lab.kr >= 0)) r.errors.push_back("kr must be >= 0 (got " + fmt_num(lab.kr) + ")");
    if (lab.k0 > 0 && !(lab.kr < lab.k0))
        r.errors.push_back("kr must be < k0 (got kr=" + fmt_num(lab.kr) + ", k0=" + fmt_num(lab.k0) + ")");
    if (r.errors.empty() && lab.kr > 0.1 * lab.k0)
        r.warnings.push_back("kr > 0.1*k0: rotating-wave approximation requires k0 >> kr");
    r.stable = r.errors.empty();
    return r;
}

RotatingFrameParams from_lab_frame(const LabFrameParams& lab) {
    const auto report = validate(lab);
    if (!report.errors.empty()) throw ValidationError("invalid lab-frame parameters: " + report.errors.front());
    RotatingFrameParams p;
    p.gamma = lab.omega_m / lab.quality_Q;
    p.chi = lab.omega_m * lab.kr / (2.0 * lab.k0);
    p.delta = lab.delta;
    p.mu = 0.0;
    p.eta = 1.0;
    p.N = 0.0;
    p.n_bad = 0.0;
    p.quality_Q = lab.quality_Q;
    return p;
}

ValidationReport validate(const RotatingFrameParams& p, const Scheme& scheme) {
    ValidationReport r;
    if (!(p.gamma > 0)) r.errors.push_back("gamma must be > 0 (got " + fmt_num(p.gamma) + ")");
    if (!(p.mu >= 0)) r.errors.push_back("mu must be >= 0 (got " + fmt_num(p.mu) + ")");
    if (!(p.eta >= 0 && p.eta <= 1)) r.errors.push_back("eta must lie in [0, 1] (got " + fmt_num(p.eta) + ")");
    if (!(p.N >= 0)) r.errors.push_back("N must be >= 0 (got " + fmt_num(p.N) + ")");
    if (!(p.n_bad >= 0)) r.errors.push_back("n_bad must be >= 0 (got " + fmt_num(p.n_bad) + ")");
    if (!std::isfinite(p.chi) || !std::isfinite(p.delta)) r.errors.push_back("chi and delta must be finite");
    if (p.gamma > 0 && p.n_bad > p.mu / (2.0 * p.gamma))
        r.errors.push_back("n_bad must not exceed the backaction occupation mu/(2 gamma) (got n_bad=" +
                           fmt_num(p.n_bad) + ", mu/(2 gamma)=" + fmt_num(p.mu / (2.0 * p.gamma)) + ")");
    if (!r.errors.empty()) return r;

    // Drift [[-g, d+c], [c-d, -g]] has eigenvalues -g +/- sqrt(c^2 - d^2); computed
    // here from trace and determinant of the matrix.
    double a01 = 0.0, a10 = 0.0;
    if (scheme.kind == SchemeKind::DMPA) {
        a01 = p.delta + p.chi;
        a10 = p.chi - p.delta;
    }
    const double tr = -2.0 * p.gamma;
    const double det = p.gamma * p.gamma - a01 * a10;
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - det, 0.0));
    const std::complex<double> l1 = tr / 2.0 + disc;
    const std::complex<double> l2 = tr / 2.0 - disc;
    r.eigenvalues = {{{l1.real(), l1.imag()}, {l2.real(), l2.imag()}}};
    r.max_real_eigenvalue = std::max(l1.real(), l2.real());
    r.stable = r.max_real_eigenvalue < 0.0;

    if (!r.stable) {
        r.errors.push_back("unconditional drift is unstable: eigenvalue with real part " +
                           fmt_num(r.max_real_eigenvalue) + " >= 0");
    } else if (-r.max_real_eigenvalue < kNearThreshold * p.gamma) {
        r.warnings.push_back("drift is close to the instability threshold (max eigenvalue real part " +
                             fmt_num(r.max_real_eigenvalue) + ")");
    }
    if (p.quality_Q && p.chi / p.gamma > 0.01 * *p.quality_Q)
        r.warnings.push_back("chi/gamma > 0.01*Q: rotating-wave approximation at risk");
    if (scheme.kind == SchemeKind::DMPA && p.mu > 0 && !is_qnd_detuned(p, 1e-9))
        r.warnings.push_back("|delta| != chi: QND condition not met; closed-form results do not apply");
    return r;
}

Config Config::parse(std::istream& in) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
        const auto key = lower(trim(line.substr(0, eq)));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    return parse(in);
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values.find(lower(key));
    if (it == values.end()) return std::nullopt;
    return it->second;
}

std::optional<double> Config::get_double(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': not a number: '" + *v + "'");
    }
}

void Config::apply(RotatingFrameParams& params, Scheme& scheme, bool& delta_set) const {
    static const char* known[] = {"gamma", "chi", "delta", "mu", "eta", "n", "n_bad", "scheme", "detuning_sign"};
    for (const auto& [k, v] : values) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw UsageError("unknown config key '" + k + "'");
    }
    if (auto v = get_double("gamma")) params.gamma = *v;
    if (auto v = get_double("chi")) params.chi = *v;
    if (auto v = get_double("delta")) {
        params.delta = *v;
        delta_set = true;
    }
    if (auto v = get_double("mu")) params.mu = *v;
    if (auto v = get_double("eta")) params.eta = *v;
    if (auto v = get_double("n")) params.N = *v;
    if (auto v = get_double("n_bad")) params.n_bad = *v;
    if (auto v = get("scheme")) scheme.kind = parse_scheme(*v);
    if (auto v = get_double("detuning_sign")) {
        if (*v != 1.0 && *v != -1.0) throw UsageError("detuning_sign must be +1 or -1");
        scheme.qnd_sign = static_cast<int>(*v);
    }
}

}  // namespace dmpa
