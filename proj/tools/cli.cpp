#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmpa/closedform.hpp"
#include "dmpa/core_model.hpp"
#include "dmpa/dynamics.hpp"
#include "dmpa/experiments.hpp"
#include "dmpa/io.hpp"
#include "dmpa/spectra.hpp"
#include "dmpa/trajectory.hpp"

namespace dmpa::cli {

namespace {

struct ParamFlags {
    std::string config;
    std::optional<double> gamma, chi, delta, mu, eta, N, n_bad;
    std::optional<std::string> scheme;
    std::optional<int> detuning_sign;
    bool absolute = false;
};

struct OutputFlags {
    std::string path;
    std::string format = "csv";
};

void add_param_flags(CLI::App* cmd, ParamFlags& f) {
    cmd->add_option("--config", f.config, "key=value parameter file (flags override it)");
    cmd->add_option("--gamma", f.gamma, "damping rate");
    cmd->add_option("--chi", f.chi, "parametric drive rate");
    cmd->add_option("--delta", f.delta, "detuning (DMPA default: detuning_sign * chi)");
    cmd->add_option("--mu", f.mu, "measurement rate");
    cmd->add_option("--eta", f.eta, "detection efficiency");
    cmd->add_option("--N", f.N, "bath phonon number");
    cmd->add_option("--n-bad", f.n_bad, "spurious BAE backaction occupation");
    cmd->add_option("--scheme", f.scheme, "dmpa or bae");
    cmd->add_option("--detuning-sign", f.detuning_sign, "QND detuning sign for DMPA (+1 or -1)");
    cmd->add_flag("--absolute", f.absolute, "rates are absolute instead of in units of gamma");
}

void add_output_flags(CLI::App* cmd, OutputFlags& o, const std::vector<std::string>& formats) {
    cmd->add_option("-o,--output", o.path, "output file (default: standard output)");
    cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember(formats));
}

std::pair<RotatingFrameParams, Scheme> resolve(const ParamFlags& f) {
    RotatingFrameParams p;
    Scheme scheme;
    bool delta_set = false;
    if (!f.config.empty()) Config::load(f.config).apply(p, scheme, delta_set);
    if (f.gamma) p.gamma = *f.gamma;
    if (f.chi) p.chi = *f.chi;
    if (f.delta) {
        p.delta = *f.delta;
        delta_set = true;
    }
    if (f.mu) p.mu = *f.mu;
    if (f.eta) p.eta = *f.eta;
    if (f.N) p.N = *f.N;
    if (f.n_bad) p.n_bad = *f.n_bad;
    if (f.scheme) scheme.kind = parse_scheme(*f.scheme);
    if (f.detuning_sign) {
        if (*f.detuning_sign != 1 && *f.detuning_sign != -1) throw UsageError("--detuning-sign must be +1 or -1");
        scheme.qnd_sign = *f.detuning_sign;
    }
    if (!f.absolute) {
        p.chi *= p.gamma;
        p.delta *= p.gamma;
        p.mu *= p.gamma;
    }
    if (!delta_set) p = with_qnd_detuning(p, scheme);
    return {p, scheme};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw UsageError("not a number in list: '" + cell + "'");
        }
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

std::string fmt(double v) { return format_number(v); }

// Writes the table in the requested format to the --output file or to out.
// Returns the stream that should receive the one-line summary.
std::ostream& emit(const SweepResult& table, const OutputFlags& o, const PlotSpec& plot, std::ostream& out,
                   std::ostream& err) {
    std::ostringstream body;
    if (o.format == "csv")
        write_csv(body, table);
    else if (o.format == "json")
        write_json(body, table);
    else
        body << emit_svg(table, plot);
    if (o.path.empty()) {
        out << body.str();
        return err;
    }
    std::ofstream file(o.path, std::ios::binary);
    if (!file) throw UsageError("cannot write '" + o.path + "'");
    file << body.str();
    return out;
}

void write_text(const std::string& text, const OutputFlags& o, std::ostream& out) {
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(o.path, std::ios::binary);
    if (!file) throw UsageError("cannot write '" + o.path + "'");
    file << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conditional dynamics of a continuously measured, detuned parametric oscillator", "dmpa-sim"};
    app.require_subcommand(1);

    ParamFlags pf;
    OutputFlags of;

    auto* validate_cmd = app.add_subcommand("validate", "check parameters and drift stability");
    add_param_flags(validate_cmd, pf);

    auto* steady_cmd = app.add_subcommand("steady", "stationary conditional covariance");
    add_param_flags(steady_cmd, pf);
    double steady_t_end = 0.0;
    steady_cmd->add_option("--t-end", steady_t_end,
                           "also integrate from the thermal state to t_end and export the time series");
    add_output_flags(steady_cmd, of, {"csv", "json", "svg"});

    auto* traj_cmd = app.add_subcommand("trajectory", "stochastic conditional trajectory");
    add_param_flags(traj_cmd, pf);
    std::uint64_t seed = 1;
    double t_end = 20.0, dt = 0.0;
    std::size_t ensemble = 0;
    traj_cmd->add_option("--seed", seed, "RNG seed");
    traj_cmd->add_option("--t-end", t_end, "duration in units of 1/gamma");
    traj_cmd->add_option("--dt", dt, "time step in units of 1/gamma (default 0.005/Gamma)");
    traj_cmd->add_option("--ensemble", ensemble, "run an ensemble validation with this many trajectories");
    add_output_flags(traj_cmd, of, {"csv", "json", "svg"});

    auto* spec_cmd = app.add_subcommand("spectrum", "unconditional power spectral densities");
    add_param_flags(spec_cmd, pf);
    double omega_max = 0.0;
    std::size_t points = 401;
    spec_cmd->add_option("--omega-max", omega_max, "grid half-width in units of gamma (default 10(1+chi'))");
    spec_cmd->add_option("--points", points, "grid size");
    add_output_flags(spec_cmd, of, {"csv", "json", "svg"});

    auto* mu_cmd = app.add_subcommand("mu-opt", "measurement rate minimizing the DMPA squeezed variance");
    add_param_flags(mu_cmd, pf);
    std::string objective = "numeric";
    mu_cmd->add_option("--objective", objective, "numeric or closed")->check(CLI::IsMember({"numeric", "closed"}));
    add_output_flags(mu_cmd, of, {"csv", "json"});

    auto* fig1_cmd = app.add_subcommand("figure1", "optimal DMPA vs ideal BAE across squeezing targets");
    double fig_eta = 1.0, fig_N = 10.0;
    std::string targets;
    Figure1Options fig1;
    fig1_cmd->add_option("--eta", fig_eta, "detection efficiency");
    fig1_cmd->add_option("--N", fig_N, "bath phonon number");
    fig1_cmd->add_option("--targets", targets, "comma-separated V_X targets in (0, 0.5)");
    fig1_cmd->add_option("--chi-prime-min", fig1.chi_prime_min, "lower end of the chi/gamma search");
    fig1_cmd->add_option("--chi-prime-max", fig1.chi_prime_max, "upper end of the chi/gamma search");
    fig1_cmd->add_option("--objective", objective, "numeric or closed")->check(CLI::IsMember({"numeric", "closed"}));
    add_output_flags(fig1_cmd, of, {"csv", "json", "svg"});

    auto* fig2_cmd = app.add_subcommand("figure2", "mu_eff/mu against SNR/chi'^2");
    std::string chi_primes = "1,10,100";
    double x_min = 1e-12, x_max = 1e6;
    std::size_t x_points = 181;
    fig2_cmd->add_option("--chi-prime", chi_primes, "comma-separated chi/gamma values");
    fig2_cmd->add_option("--x-min", x_min, "smallest SNR/chi'^2");
    fig2_cmd->add_option("--x-max", x_max, "largest SNR/chi'^2");
    fig2_cmd->add_option("--points", x_points, "grid points per trace");
    add_output_flags(fig2_cmd, of, {"csv", "json", "svg"});

    auto* sweep_cmd = app.add_subcommand("sweep", "steady state along one parameter");
    add_param_flags(sweep_cmd, pf);
    std::string variable = "mu";
    double from = 0.01, to = 100.0;
    std::size_t sweep_points = 21;
    bool log_grid = false;
    sweep_cmd->add_option("--var", variable, "mu, chi, delta, eta, N or n_bad");
    sweep_cmd->add_option("--from", from, "first value");
    sweep_cmd->add_option("--to", to, "last value");
    sweep_cmd->add_option("--points", sweep_points, "number of values");
    sweep_cmd->add_flag("--log", log_grid, "log-spaced grid");
    add_output_flags(sweep_cmd, of, {"csv", "json", "svg"});

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (validate_cmd->parsed()) {
            const auto [p, scheme] = resolve(pf);
            const auto report = validate(p, scheme);
            for (const auto& w : report.warnings) out << "warning: " << w << '\n';
            for (const auto& e : report.errors) out << "error: " << e << '\n';
            out << "stable=" << (report.stable ? "true" : "false") << " max_real_eigenvalue="
                << fmt(report.max_real_eigenvalue) << '\n';
            return report.ok() ? kSuccess : kDomainError;
        }

        if (steady_cmd->parsed()) {
            const auto [p, scheme] = resolve(pf);
            const auto sol = solve_steady_state(p, scheme);
            const auto& s = sol.state;
            const double g = static_cast<double>(s.c / s.v_x);
            std::ostringstream line;
            line << "V_X=" << fmt(double(s.v_x)) << " V_Y=" << fmt(double(s.v_y)) << " C=" << fmt(double(s.c))
                 << " purity=" << fmt(purity(s)) << " g=" << fmt(g) << " mu_eff/mu=" << fmt(1.0 + g * g)
                 << " residual=" << fmt(sol.residual);
            if (steady_t_end > 0) {
                const double s2 = sigma2_total(p);
                const CovarianceState thermal{s2, s2, 0.0L};
                const auto series = integrate_riccati(thermal, p, scheme, steady_t_end / p.gamma,
                                                      default_riccati_dt(thermal, p, scheme));
                auto& summary = emit(to_table(series), of, relaxation_plot(), out, err);
                summary << line.str() << '\n';
            } else if (of.format == "json") {
                nlohmann::ordered_json j;
                j["v_x"] = double(s.v_x);
                j["v_y"] = double(s.v_y);
                j["c"] = double(s.c);
                j["purity"] = purity(s);
                j["g"] = g;
                j["mu_eff_ratio"] = 1.0 + g * g;
                j["residual"] = sol.residual;
                write_text(j.dump(2) + "\n", of, out);
                if (!of.path.empty()) out << line.str() << '\n';
            } else {
                out << line.str() << '\n';
            }
            return kSuccess;
        }

        if (traj_cmd->parsed()) {
            const auto [p, scheme] = resolve(pf);
            if (ensemble > 0) {
                EnsembleOptions opts;
                opts.seed = seed;
                opts.dt = dt / p.gamma;
                const auto report = ensemble_validate(p, scheme, ensemble, t_end / p.gamma, opts);
                write_text(ensemble_report_json(report), of, out);
                auto& summary = of.path.empty() ? err : out;
                summary << "ensemble n=" << report.n_traj << " pass=" << (report.pass ? "true" : "false");
                for (const auto& e : report.entries) summary << " z_" << e.name << '=' << fmt(e.z);
                summary << '\n';
                return report.pass ? kSuccess : kDomainError;
            }
            const double step = dt > 0 ? dt / p.gamma : default_trajectory_dt(p, scheme);
            const auto rec = simulate_conditional(p, scheme, seed, t_end / p.gamma, step);
            PlotSpec plot;
            plot.title = "Conditional quadrature means";
            plot.x_column = "t";
            plot.x_label = "t";
            plot.panels = {{{"mean_x", "mean_y"}, "conditional mean", false}};
            auto& summary = emit(to_table(rec), of, plot, out, err);
            summary << "trajectory seed=" << seed << " steps=" << rec.times.size() - 1
                    << " final_mean_x=" << fmt(rec.mean_x.back()) << " final_mean_y=" << fmt(rec.mean_y.back())
                    << '\n';
            return kSuccess;
        }

        if (spec_cmd->parsed()) {
            const auto [p, scheme] = resolve(pf);
            const double half = (omega_max > 0 ? omega_max : 10.0 * (1.0 + std::abs(p.chi / p.gamma))) * p.gamma;
            const auto spectrum = unconditional_psd(p, scheme, linear_grid(half, points));
            const auto total = integrated_psd(p, scheme);
            PlotSpec plot;
            plot.title = "Unconditional spectra";
            plot.x_column = "omega";
            plot.x_label = "omega";
            plot.panels = {{{"s_yy", "s_xx"}, "PSD", true}};
            auto& summary = emit(to_table(spectrum), of, plot, out, err);
            summary << "integrated V_X=" << fmt(total[0]) << " V_Y=" << fmt(total[1]) << " C=" << fmt(total[2])
                    << '\n';
            return kSuccess;
        }

        if (mu_cmd->parsed()) {
            auto [p, scheme] = resolve(pf);
            if (scheme.kind != SchemeKind::DMPA) throw UsageError("mu-opt applies to the dmpa scheme");
            OptimizeMuOptions opts;
            opts.objective = objective == "closed" ? VxObjective::closed_form : VxObjective::numeric;
            const auto opt = optimize_mu(p, opts);
            SweepResult table;
            table.columns = {"chi_prime", "mu_opt_over_gamma", "v_x_min", "at_boundary"};
            table.rows = {{p.chi / p.gamma, opt.mu_opt / p.gamma, opt.v_x_min, opt.at_boundary ? 1.0 : 0.0}};
            table.metadata = {{"objective", objective}, {"version", kVersion}};
            std::ostringstream line;
            line << "mu_opt/gamma=" << fmt(opt.mu_opt / p.gamma) << " V_X_min=" << fmt(opt.v_x_min)
                 << " boundary=" << (opt.at_boundary ? "true" : "false");
            if (of.path.empty()) {
                out << line.str() << '\n';
            } else {
                emit(table, of, {}, out, err) << line.str() << '\n';
            }
            return kSuccess;
        }

        if (fig1_cmd->parsed()) {
            fig1.optimize.objective = objective == "closed" ? VxObjective::closed_form : VxObjective::numeric;
            const auto t = targets.empty() ? log_space(0.02, 0.45, 12) : parse_list(targets);
            const auto table = figure1_sweep(fig_eta, fig_N, t, fig1);
            auto& summary = emit(table, of, figure1_plot(), out, err);
            const auto& last = table.rows.front();
            summary << "figure1 rows=" << table.rows.size() << " strongest: V_X=" << fmt(last[3])
                    << " chi'=" << fmt(last[1]) << " mu_opt/gamma=" << fmt(last[2]) << " purity_dmpa=" << fmt(last[4])
                    << " purity_bae=" << fmt(last[7]) << '\n';
            return kSuccess;
        }

        if (fig2_cmd->parsed()) {
            const auto table = figure2_sweep(parse_list(chi_primes), log_space(x_min, x_max, x_points));
            auto& summary = emit(table, of, figure2_plot(), out, err);
            summary << "figure2 traces=" << parse_list(chi_primes).size() << " rows=" << table.rows.size() << '\n';
            return kSuccess;
        }

        if (sweep_cmd->parsed()) {
            auto [p, scheme] = resolve(pf);
            const bool rate = variable == "mu" || variable == "chi" || variable == "delta";
            const double scale = (rate && !pf.absolute) ? p.gamma : 1.0;
            auto values = log_grid ? log_space(from, to, sweep_points) : std::vector<double>{};
            if (!log_grid) {
                for (std::size_t i = 0; i < sweep_points; ++i)
                    values.push_back(sweep_points == 1 ? from : from + (to - from) * i / (sweep_points - 1));
            }
            for (auto& v : values) v *= scale;
            const auto table = parameter_sweep(p, scheme, variable, values, !pf.delta);
            PlotSpec plot;
            plot.title = "Steady state vs " + variable;
            plot.x_column = variable;
            plot.x_label = variable;
            plot.log_x = log_grid;
            plot.panels = {{{"v_x", "v_y"}, "variance", true}, {{"purity"}, "purity", false}};
            auto& summary = emit(table, of, plot, out, err);
            summary << "sweep " << variable << " rows=" << table.rows.size() << '\n';
            return kSuccess;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kDomainError;
    }
    return kUsageError;
}

}  // namespace dmpa::cli
