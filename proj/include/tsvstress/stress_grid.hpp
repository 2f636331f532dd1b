#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsvstress/core.hpp"

namespace tsvstress {

/// Gridded von Mises stress on the half-height cut plane: res x res sample
/// points per block, placed at the cell centers of the res x res partition.
struct StressGrid {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t res = 100;
    double pitch = 0.0;
    std::vector<double> values;  // ((row*cols + col)*res + py)*res + px

    static StressGrid make(std::uint32_t rows, std::uint32_t cols, std::uint32_t res, double pitch);

    double& at(std::uint32_t row, std::uint32_t col, std::uint32_t py, std::uint32_t px);
    double at(std::uint32_t row, std::uint32_t col, std::uint32_t py, std::uint32_t px) const;

    /// Within-block sample offset of index q: (q + 0.5) * pitch / res.
    double local_coord(std::uint32_t q) const;

    bool same_shape(const StressGrid& other) const {
        return rows == other.rows && cols == other.cols && res == other.res;
    }

    void save_csv(const std::string& path) const;
    static StressGrid load_csv(const std::string& path);

    /// Legacy ASCII VTK structured-points export (one file for the whole
    /// cut plane).
    void save_vtk(const std::string& path) const;
};

}  // namespace tsvstress
