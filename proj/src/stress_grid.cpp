#include "tsvstress/stress_grid.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tsvstress {

StressGrid StressGrid::make(std::uint32_t rows, std::uint32_t cols, std::uint32_t res,
                            double pitch) {
    if (rows < 1 || cols < 1 || res < 1) throw Error("StressGrid: rows, cols, res must be >= 1");
    StressGrid g;
    g.rows = rows;
    g.cols = cols;
    g.res = res;
    g.pitch = pitch;
    g.values.assign(static_cast<std::size_t>(rows) * cols * res * res, 0.0);
    return g;
}

double& StressGrid::at(std::uint32_t row, std::uint32_t col, std::uint32_t py, std::uint32_t px) {
    return values[((static_cast<std::size_t>(row) * cols + col) * res + py) * res + px];
}

double StressGrid::at(std::uint32_t row, std::uint32_t col, std::uint32_t py,
                      std::uint32_t px) const {
    return values[((static_cast<std::size_t>(row) * cols + col) * res + py) * res + px];
}

double StressGrid::local_coord(std::uint32_t q) const {
    return (static_cast<double>(q) + 0.5) * pitch / static_cast<double>(res);
}

void StressGrid::save_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("StressGrid: cannot open " + path);
    std::fputs("block_row,block_col,px,py,x,y,von_mises\n", f);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
            for (std::uint32_t py = 0; py < res; ++py)
                for (std::uint32_t px = 0; px < res; ++px) {
                    double x = static_cast<double>(c) * pitch + local_coord(px);
                    double y = static_cast<double>(r) * pitch + local_coord(py);
                    std::fprintf(f, "%" PRIu32 ",%" PRIu32 ",%" PRIu32 ",%" PRIu32 ",%.17g,%.17g,%.17g\n",
                                 r, c, px, py, x, y, at(r, c, py, px));
                }
    if (std::fclose(f) != 0) throw Error("StressGrid: write failed for " + path);
}

StressGrid StressGrid::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("StressGrid: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "block_row,block_col,px,py,x,y,von_mises")
        throw Error("StressGrid: " + path + " has an unexpected header");

    struct Row {
        std::uint32_t r, c, px, py;
        double x, vm;
    };
    std::vector<Row> parsed;
    std::uint32_t max_r = 0, max_c = 0, max_px = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Row row{};
        double y = 0.0;
        if (std::sscanf(line.c_str(), "%" SCNu32 ",%" SCNu32 ",%" SCNu32 ",%" SCNu32 ",%lg,%lg,%lg",
                        &row.r, &row.c, &row.px, &row.py, &row.x, &y, &row.vm) != 7)
            throw Error("StressGrid: " + path + ": malformed line " + std::to_string(line_no));
        max_r = std::max(max_r, row.r);
        max_c = std::max(max_c, row.c);
        max_px = std::max(max_px, row.px);
        parsed.push_back(row);
    }
    if (parsed.empty()) throw Error("StressGrid: " + path + " has no data rows");

    std::uint32_t res = max_px + 1;
    StressGrid g = make(max_r + 1, max_c + 1, res, 0.0);
    if (parsed.size() != g.values.size())
        throw Error("StressGrid: " + path + " row count does not fill a " +
                    std::to_string(g.rows) + "x" + std::to_string(g.cols) + " grid at " +
                    std::to_string(res) + "x" + std::to_string(res));
    double first_x = -1.0;
    for (const Row& row : parsed) {
        if (row.px >= res || row.py >= res)
            throw Error("StressGrid: " + path + " has an out-of-range sample index");
        g.at(row.r, row.c, row.py, row.px) = row.vm;
        if (row.c == 0 && row.px == 0) first_x = row.x;
    }
    // pitch back-solved from the first sample offset x = 0.5 * pitch / res
    g.pitch = first_x * 2.0 * static_cast<double>(res);
    return g;
}

void StressGrid::save_vtk(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("StressGrid: cannot open " + path);
    out.precision(17);
    double spacing = pitch / static_cast<double>(res);
    out << "# vtk DataFile Version 3.0\n";
    out << "cut-plane von Mises stress\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << cols * res << " " << rows * res << " 1\n";
    out << "ORIGIN " << 0.5 * spacing << " " << 0.5 * spacing << " 0\n";
    out << "SPACING " << spacing << " " << spacing << " 1\n";
    out << "POINT_DATA " << static_cast<std::size_t>(cols) * res * rows * res << "\n";
    out << "SCALARS von_mises double 1\nLOOKUP_TABLE default\n";
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t py = 0; py < res; ++py)
            for (std::uint32_t c = 0; c < cols; ++c)
                for (std::uint32_t px = 0; px < res; ++px) out << at(r, c, py, px) << "\n";
    if (!out) throw Error("StressGrid: write failed for " + path);
}

}  // namespace tsvstress
