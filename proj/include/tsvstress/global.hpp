#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tsvstress/rom.hpp"
#include "tsvstress/stress_grid.hpp"
#include "tsvstress/submodel.hpp"

namespace tsvstress::global {

/// Rectangular array of unit blocks: kind and thermal load per cell,
/// row-major (row * cols + col). rows advance along y, cols along x.
struct ArrayLayout {
    std::uint32_t rows = 1;
    std::uint32_t cols = 1;
    std::vector<BlockKind> kinds;   // empty = all tsv
    std::vector<double> delta_t;    // single entry = uniform
    double pitch = 0.0;
    double height = 0.0;

    void validate() const;
    BlockKind kind_at(std::uint32_t row, std::uint32_t col) const;
    double delta_t_at(std::uint32_t row, std::uint32_t col) const;
    bool uniform_delta_t() const;
    std::size_t cell_count() const { return static_cast<std::size_t>(rows) * cols; }

    /// Same array surrounded by `rings` rings of dummy blocks.
    ArrayLayout padded_with_dummies(std::uint32_t rings) const;
};

/// Loaded models per block kind; every array cell kind must be covered and
/// all fingerprints must agree.
struct RomSet {
    std::optional<rom::ReducedOrderModel> tsv;
    std::optional<rom::ReducedOrderModel> dummy;

    const rom::ReducedOrderModel& at(BlockKind kind) const;
    const rom::ReducedOrderModel& any() const;
    void check_consistency(const ArrayLayout& layout) const;
};

/// Identification of interpolation nodes across blocks by integer lattice
/// position; a node shared by several blocks gets one global id.
struct GlobalIndex {
    std::uint32_t lat_x = 0, lat_y = 0, lat_z = 0;  // lattice dimensions
    std::vector<std::int32_t> node_of_lattice;      // -1 where no block surface passes
    std::vector<std::array<std::uint32_t, 3>> lattice_of_node;
    std::uint32_t nx = 0, ny = 0, nz = 0;           // layout node counts

    std::size_t node_count() const { return lattice_of_node.size(); }
    std::size_t dof_count() const { return lattice_of_node.size() * 3; }

    std::size_t lattice_slot(std::uint32_t gx, std::uint32_t gy, std::uint32_t gz) const {
        return (static_cast<std::size_t>(gz) * lat_y + gy) * lat_x + gx;
    }
    /// Global reduced DoF of (cell, local reduced DoF).
    std::uint32_t global_dof(std::uint32_t row, std::uint32_t col, const rom::NodeLayout& layout,
                             std::size_t local_dof) const;
};

GlobalIndex index_global_nodes(const ArrayLayout& layout, const rom::NodeLayout& node_layout);

struct GlobalSystem {
    linalg::CsrMatrix stiffness;
    std::vector<double> load;
};

GlobalSystem assemble_global(const RomSet& roms, const ArrayLayout& layout,
                             const GlobalIndex& index);

struct GlobalBC {
    enum class Kind { ClampedTopBottom, Submodel };
    Kind kind = Kind::ClampedTopBottom;
    SubmodelBoundaryField field;  // used by Submodel

    static GlobalBC clamped() { return {}; }
    static GlobalBC submodel(SubmodelBoundaryField f);
};

/// Dirichlet values per global reduced DoF implied by a boundary condition.
fem::DirichletSet reduced_dirichlet(const GlobalBC& bc, const GlobalIndex& index,
                                    const ArrayLayout& layout);

/// Symmetric lifting of the reduced system for the given boundary condition.
GlobalSystem apply_global_bcs(GlobalSystem sys, const GlobalBC& bc, const GlobalIndex& index,
                              const ArrayLayout& layout);

struct GlobalSolution {
    std::vector<double> u;
    int iterations = 0;
    double relative_residual = 0.0;
    bool direct_fallback = false;
};

/// Iterative solve of the lifted reduced system; falls back to a direct
/// factorization when the iteration budget runs out.
GlobalSolution solve_global(const GlobalSystem& sys, const linalg::IterOptions& opts = {});

/// Per-cell reduced values of one block, gathered from the global vector.
std::vector<double> gather_cell_values(std::span<const double> u, std::uint32_t row,
                                       std::uint32_t col, const GlobalIndex& index,
                                       const rom::NodeLayout& layout);

/// u_block = ΔT * f_T + Σ v_i f_i on the block's fine mesh.
fem::DisplacementField reconstruct_block_field(const rom::ReducedOrderModel& model,
                                               std::span<const double> values, double delta_t);

/// Unit-block meshes rebuilt from the ROM headers (materials per element
/// are needed for stress evaluation).
struct BlockMeshes {
    std::optional<HexMesh> tsv;
    std::optional<HexMesh> dummy;

    static BlockMeshes from(const RomSet& roms);
    const HexMesh& at(BlockKind kind) const;
};

/// von Mises samples on z = h/2, res x res per block.
StressGrid cutplane_von_mises(const GlobalSolution& solution, const ArrayLayout& layout,
                              const RomSet& roms, const GlobalIndex& index,
                              const BlockMeshes& meshes, std::uint32_t res = 100,
                              int threads = 1);

}  // namespace tsvstress::global
