#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dagnet/experiments.hpp"

namespace dagnet {

/// Per-x means of one CSV column against another, ready for log2-log2 axes.
struct PlotData {
  std::vector<double> x;
  std::vector<double> mean;
  std::optional<SlopeFit> fit;  // absent for a single point
};

/// Reads a comma-separated table with a header row ('#' lines skipped).
/// Throws Error for a missing column or no data rows, and ParseError naming
/// the line of a value that is not positive.
PlotData load_plot_data(const std::string& csv_text, const std::string& x_column,
                        const std::string& y_column);

/// Standalone SVG: markers at the means, the OLS fit and a slope -1/2
/// reference through the first mean (both omitted for a single point).
std::string render_svg(const PlotData& data, const std::string& x_label,
                       const std::string& y_label);

void emit_plot(const std::string& csv_path, const std::string& x_column,
               const std::string& y_column, const std::string& out_path);

}  // namespace dagnet
