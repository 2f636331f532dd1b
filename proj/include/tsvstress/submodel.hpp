#pragma once

#include <array>
#include <string>
#include <vector>

#include "tsvstress/core.hpp"

namespace tsvstress {

/// Displacement samples on a rectilinear grid, used as sub-model boundary
/// data. Trilinear interpolation between samples; exact on affine fields.
struct SubmodelBoundaryField {
    std::vector<double> x, y, z;                   // strictly increasing axes
    std::vector<std::array<double, 3>> samples;    // x fastest, then y, then z

    void validate() const;
    bool covers(const std::array<double, 3>& point) const;
    std::array<double, 3> interpolate(const std::array<double, 3>& point) const;

    /// Structured text format: sample counts, the three coordinate arrays,
    /// then one "ux uy uz" line per sample in row-major order (x fastest).
    static SubmodelBoundaryField load(const std::string& path);
    void save(const std::string& path) const;

    /// Samples u = scale * (r - r0) + offset on a box; handy for affine
    /// boundary data such as free thermal expansion.
    static SubmodelBoundaryField affine(const std::array<double, 3>& lo,
                                        const std::array<double, 3>& hi,
                                        const std::array<std::array<double, 3>, 3>& gradient,
                                        const std::array<double, 3>& origin,
                                        const std::array<double, 3>& offset = {0, 0, 0});
};

}  // namespace tsvstress
