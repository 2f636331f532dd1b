#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsvstress/core.hpp"
#include "tsvstress/material.hpp"

namespace tsvstress {

/// Unit TSV block: via diameter d, block/via height h, liner thickness t,
/// pitch p. All lengths in meters.
struct UnitBlockGeometry {
    double d = 5e-6;
    double h = 50e-6;
    double t = 0.5e-6;
    double p = 15e-6;

    void validate() const;
};

/// Strictly increasing coordinate lines of a tensor-product grid spanning
/// [0,p] x [0,p] x [0,h].
struct TensorGrid {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    std::size_t cells_x() const { return x.size() - 1; }
    std::size_t cells_y() const { return y.size() - 1; }
    std::size_t cells_z() const { return z.size() - 1; }
    std::size_t cell_count() const { return cells_x() * cells_y() * cells_z(); }
    std::size_t node_count() const { return x.size() * y.size() * z.size(); }

    void validate(double extent_x, double extent_y, double extent_z) const;
    bool operator==(const TensorGrid&) const = default;
};

enum class BlockKind : std::uint8_t { Tsv = 0, Dummy = 1 };

// Boundary face bits of node_boundary.
namespace face {
inline constexpr std::uint8_t x_min = 1;
inline constexpr std::uint8_t x_max = 2;
inline constexpr std::uint8_t y_min = 4;
inline constexpr std::uint8_t y_max = 8;
inline constexpr std::uint8_t z_min = 16;
inline constexpr std::uint8_t z_max = 32;
}  // namespace face

/// Structured hexahedral mesh. Node (i,j,k) has id (k*ny + j)*nx + i; cell
/// (i,j,k) likewise over cell counts. Element corners follow the usual
/// hexahedron ordering: bottom face CCW then top face CCW.
struct HexMesh {
    TensorGrid grid;  // the generating tensor grid (axis coordinate lines)
    std::vector<std::array<double, 3>> nodes;
    std::vector<std::array<std::uint32_t, 8>> elements;
    std::vector<MaterialId> element_material;
    std::vector<std::uint8_t> node_boundary;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t element_count() const { return elements.size(); }
    std::size_t dof_count() const { return nodes.size() * 3; }

    std::uint32_t node_id(std::size_t i, std::size_t j, std::size_t k) const;
    std::uint32_t cell_id(std::size_t i, std::size_t j, std::size_t k) const;

    /// Containing cell of a point; ties on shared faces resolve to the
    /// lowest cell index. Throws when the point is outside the mesh.
    std::array<std::size_t, 3> find_cell(const std::array<double, 3>& point) const;

    std::array<std::array<double, 3>, 8> element_corners(std::size_t element) const;
};

/// Containing cell index of v along one coordinate axis; a value exactly on
/// a grid line resolves to the lower cell. Throws when outside the axis.
std::size_t locate_axis_cell(const std::vector<double>& axis, double v);

/// Grid lines graded for the TSV cross-section: the liner annulus always
/// gets at least one radial layer, spacing coarsens geometrically toward
/// the block edge, z is uniform.
TensorGrid default_grading(const UnitBlockGeometry& geom, double target);

/// Mesh one unit block; material assigned by centroid radius from the
/// block axis (copper / liner / silicon).
HexMesh build_unit_block_mesh(const UnitBlockGeometry& geom, const TensorGrid& grid);

/// Same grid, every element silicon (the "dummy" block of sub-modeling).
HexMesh build_dummy_block_mesh(const UnitBlockGeometry& geom, const TensorGrid& grid);

/// Tile rows x cols copies of the block grid into one conforming array
/// mesh. Shared-face nodes coincide by structured indexing. kinds is
/// row-major (row*cols + col); dummy cells turn all-silicon.
HexMesh replicate_array_mesh(const HexMesh& block, std::size_t rows, std::size_t cols,
                             std::span<const BlockKind> kinds);

/// Legacy ASCII VTK unstructured-grid export (hexahedron cells, material
/// ids as cell data, optional nodal displacement vectors).
void write_vtk(const HexMesh& mesh, const std::string& path,
               std::span<const double> displacement = {});

}  // namespace tsvstress
