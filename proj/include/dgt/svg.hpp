#pragma once
#include <string>
#include <vector>

namespace dgt {

struct SvgSeries {
    std::string label;
    std::vector<double> values;  // indexed by iteration k
};

// Renders a standalone static SVG line chart with a log-scale vertical axis.
// Values that are not finite and positive break the line. The same inputs
// always produce the same bytes.
std::string render_log_chart(const std::string& title,
                             const std::vector<SvgSeries>& series);

void write_log_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series);

}  // namespace dgt
