#pragma once

#include <string>

#include "tsvstress/stress_grid.hpp"

namespace tsvstress {

struct RenderInfo {
    double min_value = 0.0;
    double max_value = 0.0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

/// PNG heatmap of a cut-plane grid, one pixel per sample, linear color
/// scale between the grid's min and max. Output bytes are deterministic
/// for a given input.
RenderInfo render_heatmap_png(const StressGrid& grid, const std::string& path);

}  // namespace tsvstress
