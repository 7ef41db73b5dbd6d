#pragma once

#include <string>
#include <vector>

#include "lfdf/tensor.hpp"

namespace lfdf::fig {

// Scalar grid rendered as one color-mapped cell x cell block per entry.
// Values are normalized over the finite entries; infinities clamp to the ends.
void save_heatmap_png(const std::string& path, const Tensor& grid, int cell = 32);

// Minimal SVG line chart: one series per label, all over the shared xs.
void save_polyline_svg(const std::string& path, const std::vector<double>& xs,
                       const std::vector<std::vector<double>>& ys,
                       const std::vector<std::string>& labels,
                       const std::string& x_label, const std::string& y_label);

// [A, len, C] EPI slice rendered with each angular row repeated scale times,
// so the line slopes are visible at a glance.
void save_epi_strip_png(const std::string& path, const Tensor& epi, int scale = 8);

}  // namespace lfdf::fig
