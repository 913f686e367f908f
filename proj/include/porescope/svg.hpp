#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "porescope/streamline.hpp"

namespace porescope {

/// Wedge-per-bin polar histogram (rose plot). Axial histograms mirror each
/// wedge so the plot fills the circle.
void write_polar_histogram_svg(const std::filesystem::path& path, const PolarHistogram& hist,
                               bool axial, const std::string& title,
                               const std::string& comment = {});

struct XySeries {
    std::string name;
    std::vector<double> x, y;
    bool line = false; // scatter by default
};

/// Scatter/line chart with linear axes and optional fitted-line overlay.
void write_xy_chart_svg(const std::filesystem::path& path, const std::vector<XySeries>& series,
                        const std::string& x_label, const std::string& y_label,
                        const std::string& title, const std::string& comment = {});

} // namespace porescope
