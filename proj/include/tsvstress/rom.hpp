#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsvstress/fem.hpp"
#include "tsvstress/linalg.hpp"
#include "tsvstress/mesh.hpp"

namespace tsvstress::rom {

/// Surface interpolation nodes of one unit block: (n_x, n_y, n_z) equally
/// spaced planes per axis, keeping only nodes on the block surface, ordered
/// lexicographically in (i, j, k).
struct NodeLayout {
    std::uint32_t n_x = 4, n_y = 4, n_z = 4;
    double extent_x = 0.0, extent_y = 0.0, extent_z = 0.0;

    std::vector<std::array<std::uint32_t, 3>> surface_nodes;  // lexicographic (i,j,k)
    std::vector<double> coords_x, coords_y, coords_z;

    static NodeLayout create(std::uint32_t n_x, std::uint32_t n_y, std::uint32_t n_z,
                             double extent_x, double extent_y, double extent_z);

    std::size_t node_count() const { return surface_nodes.size(); }
    std::size_t reduced_dofs() const { return surface_nodes.size() * 3; }
    std::array<double, 3> node_coord(std::size_t rank) const;
};

/// Reduced DoF count of a layout: surface lattice nodes x 3 components.
std::size_t num_element_dofs(std::uint32_t n_x, std::uint32_t n_y, std::uint32_t n_z);

/// 1D Lagrange cardinal polynomial on the given distinct nodes.
double lagrange_1d(std::span<const double> coords, std::size_t i, double x);

/// Tensor-product Lagrange weight of surface node (i,j,k) at a point.
double lagrange_3d(const NodeLayout& layout, const std::array<std::uint32_t, 3>& node,
                   const std::array<double, 3>& point);

/// Sparse interpolation operator from reduced DoFs to boundary fine DoFs.
/// Row r corresponds to fine DoF boundary_dofs[r]; the x, y, z components
/// are uncoupled.
struct InterpolationOperator {
    linalg::CsrMatrix weights;                // (boundary fine DoFs) x (reduced DoFs)
    std::vector<std::uint32_t> boundary_dofs;  // ascending fine DoF ids
};

InterpolationOperator build_interpolation_operator(const HexMesh& mesh, const NodeLayout& layout);

/// Precomputed reduced order model of one unit block: basis fields for every
/// reduced DoF, thermal particular solution, condensed element stiffness and
/// load. basis is (fine DoFs) x n row-major; thermal and b_element are for
/// ΔT = 1.
struct ReducedOrderModel {
    UnitBlockGeometry geometry;
    TensorGrid grid;
    MaterialTable materials;
    NodeLayout layout;
    BlockKind kind = BlockKind::Tsv;

    linalg::DenseMatrix basis;
    std::vector<double> thermal;
    linalg::DenseMatrix a_element;
    std::vector<double> b_element;
    Hash256 fingerprint{};

    std::size_t reduced_dofs() const { return layout.reduced_dofs(); }
    std::size_t fine_dofs() const { return basis.n_rows(); }
};

/// One-shot local stage: one factorization of the lifted block system, then
/// the thermal solve and one solve per reduced DoF, followed by the
/// condensation products.
ReducedOrderModel build_rom(const UnitBlockGeometry& geom, const HexMesh& mesh,
                            const MaterialTable& mats, const NodeLayout& layout, BlockKind kind,
                            int threads = 1);

/// Hash identifying (geometry, grid, materials, layout); equal for the tsv
/// and dummy models of one parameter set.
Hash256 rom_fingerprint(const UnitBlockGeometry& geom, const TensorGrid& grid,
                        const MaterialTable& mats, const NodeLayout& layout);

void save_rom(const ReducedOrderModel& model, const std::string& path);
ReducedOrderModel load_rom(const std::string& path);

}  // namespace tsvstress::rom
