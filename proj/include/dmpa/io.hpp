#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dmpa/dynamics.hpp"
#include "dmpa/experiments.hpp"
#include "dmpa/spectra.hpp"
#include "dmpa/trajectory.hpp"

namespace dmpa {

/// 12 significant digits, shortest form ("%.12g").
std::string format_number(double v);

/// Header line of column names, then one comma-separated row per entry.
void write_csv(std::ostream& out, const SweepResult& table);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Parses CSV written by write_csv. Throws UsageError on ragged or non-numeric rows.
CsvTable read_csv(std::istream& in);

/// {"metadata": {...}, "rows": [{column: value, ...}, ...]}
void write_json(std::ostream& out, const SweepResult& table);

/// t, v_x, v_y, c, purity
SweepResult to_table(const CovarianceSeries& series);
/// t, mean_x, mean_y, v_x, v_y, c, record_1, record_2
SweepResult to_table(const TrajectoryRecord& record);
/// omega, s_xx, s_yy, s_xy
SweepResult to_table(const SpectrumResult& spectrum);

/// {"entries": [...], "z_scores": {...}, "pass": bool}
std::string ensemble_report_json(const EnsembleReport& report);

struct PanelSpec {
    std::vector<std::string> y_columns;
    std::string y_label;
    bool log_y = false;
};

struct PlotSpec {
    std::string title;
    std::string x_column;
    std::string x_label;
    bool log_x = false;
    std::vector<PanelSpec> panels;
    /// When set, rows are split into one trace per distinct value of this column.
    std::string group_column;
};

/// Self-contained SVG 1.1 line plot with one stacked panel per PanelSpec.
/// Points that are non-finite (or non-positive on a log axis) are skipped.
/// Throws UsageError for fewer than two rows.
std::string emit_svg(const SweepResult& table, const PlotSpec& spec);

PlotSpec figure1_plot();
PlotSpec figure2_plot();
PlotSpec relaxation_plot();

}  // namespace dmpa
