#include "dmpa/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dmpa/closedform.hpp"

namespace dmpa {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_csv(std::ostream& out, const SweepResult& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw UsageError("empty CSV");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw UsageError("CSV line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != t.columns.size())
            throw UsageError("CSV line " + std::to_string(lineno) + ": expected " +
                             std::to_string(t.columns.size()) + " fields");
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_json(std::ostream& out, const SweepResult& table) {
    nlohmann::ordered_json doc;
    doc["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.metadata) doc["metadata"][k] = v;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r;
        for (std::size_t i = 0; i < table.columns.size(); ++i) r[table.columns[i]] = row[i];
        doc["rows"].push_back(std::move(r));
    }
    out << doc.dump(2) << '\n';
}

SweepResult to_table(const CovarianceSeries& series) {
    SweepResult t;
    t.columns = {"t", "v_x", "v_y", "c", "purity"};
    t.rows.reserve(series.times.size());
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const auto& v = series.states[i];
        t.rows.push_back({series.times[i], static_cast<double>(v.v_x), static_cast<double>(v.v_y),
                          static_cast<double>(v.c), purity(v)});
    }
    return t;
}

SweepResult to_table(const TrajectoryRecord& rec) {
    SweepResult t;
    t.columns = {"t", "mean_x", "mean_y", "v_x", "v_y", "c", "record_1", "record_2"};
    t.rows.reserve(rec.times.size());
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const auto& v = rec.cov_path[i];
        t.rows.push_back({rec.times[i], rec.mean_x[i], rec.mean_y[i], static_cast<double>(v.v_x),
                          static_cast<double>(v.v_y), static_cast<double>(v.c), rec.records[0][i],
                          rec.records[1][i]});
    }
    t.metadata = {{"seed", std::to_string(rec.rng_seed)}};
    return t;
}

SweepResult to_table(const SpectrumResult& s) {
    SweepResult t;
    t.columns = {"omega", "s_xx", "s_yy", "s_xy"};
    for (std::size_t i = 0; i < s.omega_grid.size(); ++i)
        t.rows.push_back({s.omega_grid[i], s.s_xx[i], s.s_yy[i], s.s_xy[i]});
    return t;
}

std::string ensemble_report_json(const EnsembleReport& report) {
    nlohmann::ordered_json doc;
    doc["entries"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json z = nlohmann::ordered_json::object();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json j;
        j["name"] = e.name;
        j["ensemble_cov"] = e.ensemble_cov;
        j["conditional"] = e.conditional;
        j["unconditional"] = e.unconditional;
        j["std_error"] = e.std_error;
        doc["entries"].push_back(std::move(j));
        // JSON has no infinity; a zero-variance mismatch is reported as a large sentinel.
        z[e.name] = std::isfinite(e.z) ? e.z : std::copysign(1e300, e.z);
    }
    z["mean_x"] = report.mean_z[0];
    z["mean_y"] = report.mean_z[1];
    doc["z_scores"] = std::move(z);
    doc["n_traj"] = report.n_traj;
    doc["t_end"] = report.t_end;
    doc["pass"] = report.pass;
    return doc.dump(2) + "\n";
}

// --- SVG -------------------------------------------------------------------

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 240.0;
constexpr double kLeft = 80.0, kRight = 24.0, kTop = 40.0, kGap = 36.0, kBottom = 48.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0, hi = 1;
    bool log = false;

    double transform(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return (transform(v) - lo) / (hi - lo); }
    bool usable(double v) const { return std::isfinite(v) && (!log || v > 0); }

    void fit(const std::vector<double>& values) {
        double a = INFINITY, b = -INFINITY;
        for (const double v : values) {
            if (!usable(v)) continue;
            a = std::min(a, transform(v));
            b = std::max(b, transform(v));
        }
        if (!std::isfinite(a)) {
            a = 0;
            b = 1;
        }
        if (log) {
            a = std::floor(a);
            b = std::ceil(b);
            if (b <= a) b = a + 1;
        } else {
            if (b <= a) {
                a -= 0.5;
                b += 0.5;
            }
            const double pad = 0.05 * (b - a);
            a -= pad;
            b += pad;
        }
        lo = a;
        hi = b;
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            const int span = static_cast<int>(hi - lo);
            const int stride = std::max(1, span / 8);
            for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += stride) out.push_back(std::pow(10.0, e));
            return out;
        }
        const double raw = (hi - lo) / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (const double m : {1.0, 2.0, 5.0, 10.0}) {
            step = m * mag;
            if (step >= raw) break;
        }
        for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step)
            out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
        return out;
    }
};

}  // namespace

std::string emit_svg(const SweepResult& table, const PlotSpec& spec) {
    if (table.rows.size() < 2) throw UsageError("cannot plot fewer than two rows");
    if (spec.panels.empty()) throw UsageError("plot needs at least one panel");

    const auto xs = table.values(spec.x_column);
    std::vector<double> groups(table.rows.size(), 0.0);
    std::vector<double> group_keys{0.0};
    if (!spec.group_column.empty()) {
        groups = table.values(spec.group_column);
        group_keys.clear();
        for (const double g : groups)
            if (std::find(group_keys.begin(), group_keys.end(), g) == group_keys.end()) group_keys.push_back(g);
    }

    Axis xaxis;
    xaxis.log = spec.log_x;
    xaxis.fit(xs);

    const double plot_w = kWidth - kLeft - kRight;
    const double height = kTop + spec.panels.size() * kPanelHeight + (spec.panels.size() - 1) * kGap + kBottom;
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth) << "\" height=\""
        << num(height) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(height) << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(height)
        << "\" fill=\"white\"/>\n"
        << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << escape(spec.title) << "</text>\n";

    for (std::size_t pi = 0; pi < spec.panels.size(); ++pi) {
        const auto& panel = spec.panels[pi];
        const double top = kTop + pi * (kPanelHeight + kGap);
        const double bottom = top + kPanelHeight;

        std::vector<double> all_y;
        for (const auto& col : panel.y_columns) {
            const auto ys = table.values(col);
            all_y.insert(all_y.end(), ys.begin(), ys.end());
        }
        Axis yaxis;
        yaxis.log = panel.log_y;
        yaxis.fit(all_y);

        auto px = [&](double x) { return kLeft + xaxis.frac(x) * plot_w; };
        auto py = [&](double y) { return bottom - yaxis.frac(y) * kPanelHeight; };

        svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
        svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
            << num(kPanelHeight) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (const double t : yaxis.ticks()) {
            const double y = py(t);
            svg << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\""
                << num(y) << "\" stroke=\"black\"/>"
                << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
                << tick_label(t) << "</text>\n";
        }
        for (const double t : xaxis.ticks()) {
            const double x = px(t);
            svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(x) << "\" y2=\""
                << num(bottom + 4) << "\" stroke=\"black\"/>";
            if (pi + 1 == spec.panels.size())
                svg << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 16) << "\" text-anchor=\"middle\">"
                    << tick_label(t) << "</text>";
            svg << '\n';
        }
        svg << "<text x=\"16\" y=\"" << num(top + kPanelHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
            << num(top + kPanelHeight / 2) << ")\">" << escape(panel.y_label) << "</text>\n";

        int trace = 0;
        for (std::size_t ci = 0; ci < panel.y_columns.size(); ++ci) {
            const auto ys = table.values(panel.y_columns[ci]);
            for (const double key : group_keys) {
                std::ostringstream pts;
                int count = 0;
                for (std::size_t r = 0; r < ys.size(); ++r) {
                    if (groups[r] != key || !xaxis.usable(xs[r]) || !yaxis.usable(ys[r])) continue;
                    pts << (count ? " " : "") << num(px(xs[r])) << ',' << num(py(ys[r]));
                    ++count;
                }
                if (count == 0) continue;
                svg << "<polyline fill=\"none\" stroke=\"" << kPalette[trace % 6] << "\" stroke-width=\"1.5\"";
                if (ci > 0) svg << " stroke-dasharray=\"6,4\"";
                svg << " points=\"" << pts.str() << "\"/>\n";
                ++trace;
            }
        }
        // Legend
        int entry = 0;
        for (std::size_t ci = 0; ci < panel.y_columns.size(); ++ci) {
            for (const double key : group_keys) {
                std::string label = panel.y_columns[ci];
                if (!spec.group_column.empty()) label += " (" + spec.group_column + "=" + tick_label(key) + ")";
                const double ly = top + 14 + 14 * entry;
                svg << "<line x1=\"" << num(kLeft + plot_w - 190) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
                    << num(kLeft + plot_w - 170) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << kPalette[entry % 6]
                    << "\" stroke-width=\"1.5\"" << (ci > 0 ? " stroke-dasharray=\"6,4\"" : "") << "/>"
                    << "<text x=\"" << num(kLeft + plot_w - 165) << "\" y=\"" << num(ly) << "\">" << escape(label)
                    << "</text>\n";
                ++entry;
            }
        }
        svg << "</g>\n";
    }
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(height - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(spec.x_label)
        << "</text>\n</svg>\n";
    return svg.str();
}

PlotSpec figure1_plot() {
    PlotSpec s;
    s.title = "Optimal DMPA vs ideal BAE in the squeezing regime";
    s.x_column = "v_x_target";
    s.x_label = "squeezed variance V_X";
    s.log_x = true;
    s.panels = {{{"purity_dmpa", "purity_bae"}, "purity", false},
                {{"mu_opt_over_gamma", "mu_bae_over_gamma"}, "mu / gamma", true},
                {{"chi_prime"}, "chi / gamma", true}};
    return s;
}

PlotSpec figure2_plot() {
    PlotSpec s;
    s.title = "Effective measurement enhancement";
    s.x_column = "snr_over_chi2";
    s.x_label = "SNR / chi'^2";
    s.log_x = true;
    s.panels = {{{"mu_eff_ratio"}, "mu_eff / mu", true}};
    s.group_column = "chi_prime";
    return s;
}

PlotSpec relaxation_plot() {
    PlotSpec s;
    s.title = "Conditional covariance relaxation";
    s.x_column = "t";
    s.x_label = "t (1/gamma)";
    s.panels = {{{"v_x"}, "V_X", false}};
    return s;
}

}  // namespace dmpa
