#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsvstress/global.hpp"

namespace tsvstress::baseline {

struct SolveStats {
    double wall_s = 0.0;
    int iterations = 0;
    double relative_residual = 0.0;
    std::size_t peak_mem_bytes = 0;
    std::size_t dofs = 0;
};

struct ReferenceOptions {
    std::size_t dof_cap = 3'000'000;
    linalg::IterOptions iter = {.tolerance = 1e-10,
                                .max_iterations = 50000,
                                .precond = linalg::Precond::BlockDiagonal};
    bool direct = false;  // factorize instead of iterating (small systems)
    std::uint32_t res = 100;
    int threads = 1;
};

/// Full fine-mesh solution over the replicated array mesh; the ground
/// truth every reduced solution is measured against.
struct ReferenceSolution {
    HexMesh mesh;            // replicated array mesh
    TensorGrid block_grid;   // the unit-block grid it was tiled from
    fem::DisplacementField u;
    std::vector<double> element_delta_t;
    SolveStats stats;
};

/// Replicate, assemble, lift (clamped fine top/bottom surfaces or a
/// sub-model field on all outer fine boundary nodes), and solve. The
/// residual is re-verified with an independent matrix-vector product.
/// tsv_block is the materially classified unit-block mesh; dummy cells of
/// the layout turn all-silicon during replication.
ReferenceSolution reference_solve(const global::ArrayLayout& layout, const global::GlobalBC& bc,
                                  const HexMesh& tsv_block, const MaterialTable& mats,
                                  const ReferenceOptions& opts = {});

/// Oracle entry: every block surface carries the Lagrange-interpolated
/// displacement of the given reduced vector (the same data the reduced
/// model reconstructs from).
ReferenceSolution reference_solve_prescribed(const global::ArrayLayout& layout,
                                             std::span<const double> reduced_u,
                                             const rom::NodeLayout& node_layout,
                                             const global::GlobalIndex& index,
                                             const HexMesh& tsv_block, const MaterialTable& mats,
                                             const ReferenceOptions& opts = {});

/// The same res x res per-block z = h/2 sampling the global module emits.
StressGrid reference_cutplane(const ReferenceSolution& sol, const global::ArrayLayout& layout,
                              const MaterialTable& mats, std::uint32_t res = 100, int threads = 1);

/// Single-TSV perturbation stress plus uniform background of the TSV-free
/// state, sampled on the half-height raster of a (2m+1) x (2m+1) halo.
struct SuperpositionModel {
    std::uint32_t halo = 2;
    std::uint32_t res = 100;
    double pitch = 0.0;
    double height = 0.0;
    double delta_t = 0.0;
    fem::StressTensor background;
    std::vector<fem::StressTensor> perturbation;  // ((br*(2h+1)+bc)*res+py)*res+px
    Hash256 fingerprint{};

    std::uint32_t span() const { return 2 * halo + 1; }
    const fem::StressTensor& pert_at(std::uint32_t br, std::uint32_t bc, std::uint32_t py,
                                     std::uint32_t px) const;
    double max_perturbation_von_mises() const;

    void save(const std::string& path) const;
    static SuperpositionModel load(const std::string& path);
};

Hash256 superposition_fingerprint(const UnitBlockGeometry& geom, const TensorGrid& grid,
                                  const MaterialTable& mats, std::uint32_t halo, std::uint32_t res,
                                  double delta_t);

/// Solve the halo domain once with the central TSV and once all-silicon
/// (both clamped top/bottom, lateral faces free); the difference is the
/// perturbation field.
SuperpositionModel superposition_single_solve(const UnitBlockGeometry& geom,
                                              const TensorGrid& block_grid,
                                              const MaterialTable& mats, std::uint32_t halo,
                                              double delta_t, const ReferenceOptions& opts = {});

/// background + sum of translated perturbations per TSV cell, von Mises
/// applied after the tensor sum. The layout's ΔT must be uniform; the
/// fields scale linearly from the model's ΔT.
StressGrid superposition_field(const SuperpositionModel& model, const global::ArrayLayout& layout);

/// mean(|a - b|) / max(b) with b the ground truth.
double normalized_mae(const StressGrid& a, const StressGrid& b);

}  // namespace tsvstress::baseline
