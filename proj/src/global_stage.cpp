#include "tsvstress/global.hpp"

#include <algorithm>
#include <cmath>

namespace tsvstress::global {

void ArrayLayout::validate() const {
    if (rows < 1 || cols < 1) throw Error("layout: rows and cols must be >= 1");
    if (!kinds.empty() && kinds.size() != cell_count())
        throw Error("layout: kinds must be empty or have rows*cols entries");
    if (delta_t.size() != 1 && delta_t.size() != cell_count())
        throw Error("layout: delta_t must have one entry or rows*cols entries");
    if (!(pitch > 0.0) || !(height > 0.0)) throw Error("layout: pitch and height must be > 0");
}

BlockKind ArrayLayout::kind_at(std::uint32_t row, std::uint32_t col) const {
    if (kinds.empty()) return BlockKind::Tsv;
    return kinds[static_cast<std::size_t>(row) * cols + col];
}

double ArrayLayout::delta_t_at(std::uint32_t row, std::uint32_t col) const {
    if (delta_t.size() == 1) return delta_t[0];
    return delta_t[static_cast<std::size_t>(row) * cols + col];
}

bool ArrayLayout::uniform_delta_t() const {
    for (double v : delta_t)
        if (v != delta_t[0]) return false;
    return true;
}

ArrayLayout ArrayLayout::padded_with_dummies(std::uint32_t rings) const {
    validate();
    if (rings == 0) return *this;
    ArrayLayout out;
    out.rows = rows + 2 * rings;
    out.cols = cols + 2 * rings;
    out.pitch = pitch;
    out.height = height;
    out.kinds.assign(out.cell_count(), BlockKind::Dummy);
    out.delta_t.assign(out.cell_count(), delta_t.size() == 1 ? delta_t[0] : 0.0);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) {
            std::size_t slot = static_cast<std::size_t>(r + rings) * out.cols + (c + rings);
            out.kinds[slot] = kind_at(r, c);
            out.delta_t[slot] = delta_t_at(r, c);
        }
    return out;
}

const rom::ReducedOrderModel& RomSet::at(BlockKind kind) const {
    const auto& slot = (kind == BlockKind::Tsv) ? tsv : dummy;
    if (!slot)
        throw Error(std::string("RomSet: no model loaded for ") +
                    (kind == BlockKind::Tsv ? "tsv" : "dummy") + " blocks");
    return *slot;
}

const rom::ReducedOrderModel& RomSet::any() const {
    if (tsv) return *tsv;
    if (dummy) return *dummy;
    throw Error("RomSet: no models loaded");
}

void RomSet::check_consistency(const ArrayLayout& layout) const {
    layout.validate();
    bool needs_tsv = false, needs_dummy = false;
    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c)
            (layout.kind_at(r, c) == BlockKind::Tsv ? needs_tsv : needs_dummy) = true;
    if (needs_tsv && !tsv) throw Error("layout contains tsv blocks but no tsv model is loaded");
    if (needs_dummy && !dummy)
        throw Error("layout contains dummy blocks but no dummy model is loaded");
    if (tsv && dummy && tsv->fingerprint != dummy->fingerprint)
        throw Error("tsv and dummy models come from different parameter sets (fingerprint mismatch)");
    const rom::ReducedOrderModel& m = any();
    if (m.geometry.p != layout.pitch || m.geometry.h != layout.height)
        throw Error("model geometry does not match the layout pitch/height (fingerprint mismatch)");
}

std::uint32_t GlobalIndex::global_dof(std::uint32_t row, std::uint32_t col,
                                      const rom::NodeLayout& layout, std::size_t local_dof) const {
    std::size_t rank = local_dof / 3;
    int comp = static_cast<int>(local_dof % 3);
    const auto& n = layout.surface_nodes[rank];
    std::uint32_t gx = col * (nx - 1) + n[0];
    std::uint32_t gy = row * (ny - 1) + n[1];
    std::uint32_t gz = n[2];
    std::int32_t id = node_of_lattice[lattice_slot(gx, gy, gz)];
    return static_cast<std::uint32_t>(id) * 3 + static_cast<std::uint32_t>(comp);
}

GlobalIndex index_global_nodes(const ArrayLayout& layout, const rom::NodeLayout& node_layout) {
    layout.validate();
    GlobalIndex idx;
    idx.nx = node_layout.n_x;
    idx.ny = node_layout.n_y;
    idx.nz = node_layout.n_z;
    idx.lat_x = layout.cols * (idx.nx - 1) + 1;
    idx.lat_y = layout.rows * (idx.ny - 1) + 1;
    idx.lat_z = idx.nz;

    idx.node_of_lattice.assign(static_cast<std::size_t>(idx.lat_x) * idx.lat_y * idx.lat_z, -1);
    // A lattice point is dropped only when it is strictly interior to one
    // block: off every block face plane in x and y, and off the top/bottom.
    for (std::uint32_t gz = 0; gz < idx.lat_z; ++gz)
        for (std::uint32_t gy = 0; gy < idx.lat_y; ++gy)
            for (std::uint32_t gx = 0; gx < idx.lat_x; ++gx) {
                bool x_interior = (gx % (idx.nx - 1)) != 0;
                bool y_interior = (gy % (idx.ny - 1)) != 0;
                bool z_interior = gz > 0 && gz < idx.lat_z - 1;
                if (x_interior && y_interior && z_interior) continue;
                idx.node_of_lattice[idx.lattice_slot(gx, gy, gz)] =
                    static_cast<std::int32_t>(idx.lattice_of_node.size());
                idx.lattice_of_node.push_back({gx, gy, gz});
            }
    return idx;
}

GlobalSystem assemble_global(const RomSet& roms, const ArrayLayout& layout,
                             const GlobalIndex& index) {
    roms.check_consistency(layout);
    const rom::NodeLayout& nl = roms.any().layout;
    const std::size_t n = nl.reduced_dofs();
    const std::size_t n_global = index.dof_count();

    std::vector<linalg::Triplet> triplets;
    triplets.reserve(layout.cell_count() * n * n);
    std::vector<double> b(n_global, 0.0);
    std::vector<std::uint32_t> dof_map(n);

    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c) {
            const rom::ReducedOrderModel& model = roms.at(layout.kind_at(r, c));
            double dt = layout.delta_t_at(r, c);
            for (std::size_t a = 0; a < n; ++a) dof_map[a] = index.global_dof(r, c, nl, a);
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t q = 0; q < n; ++q)
                    triplets.push_back({dof_map[a], dof_map[q], model.a_element.at(a, q)});
                b[dof_map[a]] += dt * model.b_element[a];
            }
        }
    return {linalg::csr_from_triplets(triplets, n_global, n_global), std::move(b)};
}

GlobalBC GlobalBC::submodel(SubmodelBoundaryField f) {
    GlobalBC bc;
    bc.kind = Kind::Submodel;
    bc.field = std::move(f);
    return bc;
}

fem::DirichletSet reduced_dirichlet(const GlobalBC& bc, const GlobalIndex& index,
                                    const ArrayLayout& layout) {
    fem::DirichletSet set;
    for (std::size_t id = 0; id < index.node_count(); ++id) {
        const auto& lat = index.lattice_of_node[id];
        bool top_bottom = lat[2] == 0 || lat[2] == index.lat_z - 1;
        if (bc.kind == GlobalBC::Kind::ClampedTopBottom) {
            if (!top_bottom) continue;
            for (int comp = 0; comp < 3; ++comp)
                set.set(static_cast<std::uint32_t>(3 * id + comp), 0.0);
        } else {
            bool outer = top_bottom || lat[0] == 0 || lat[0] == index.lat_x - 1 || lat[1] == 0 ||
                         lat[1] == index.lat_y - 1;
            if (!outer) continue;
            std::array<double, 3> point = {
                layout.pitch * static_cast<double>(lat[0]) / static_cast<double>(index.nx - 1),
                layout.pitch * static_cast<double>(lat[1]) / static_cast<double>(index.ny - 1),
                layout.height * static_cast<double>(lat[2]) / static_cast<double>(index.nz - 1)};
            std::array<double, 3> u = bc.field.interpolate(point);
            for (int comp = 0; comp < 3; ++comp)
                set.set(static_cast<std::uint32_t>(3 * id + comp), u[comp]);
        }
    }
    return set;
}

GlobalSystem apply_global_bcs(GlobalSystem sys, const GlobalBC& bc, const GlobalIndex& index,
                              const ArrayLayout& layout) {
    fem::DirichletSet set = reduced_dirichlet(bc, index, layout);
    fem::apply_dirichlet_lifting(sys.stiffness, sys.load, set);
    return sys;
}

GlobalSolution solve_global(const GlobalSystem& sys, const linalg::IterOptions& opts) {
    GlobalSolution sol;
    try {
        linalg::IterResult res = linalg::iterative_solve(sys.stiffness, sys.load, opts);
        sol.u = std::move(res.x);
        sol.iterations = res.iterations;
        sol.relative_residual = res.relative_residual;
    } catch (const linalg::NoConvergence& nc) {
        linalg::SymmetricFactor factor = linalg::factorize_spd(sys.stiffness);
        sol.u = factor.solve(sys.load);
        sol.iterations = nc.best.iterations;
        sol.direct_fallback = true;
        std::vector<double> r = linalg::spmv(sys.stiffness, sol.u);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= sys.load[i];
        double nb = linalg::norm2(sys.load);
        sol.relative_residual = nb > 0.0 ? linalg::norm2(r) / nb : 0.0;
    }
    return sol;
}

std::vector<double> gather_cell_values(std::span<const double> u, std::uint32_t row,
                                       std::uint32_t col, const GlobalIndex& index,
                                       const rom::NodeLayout& layout) {
    std::vector<double> v(layout.reduced_dofs());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = u[index.global_dof(row, col, layout, a)];
    return v;
}

fem::DisplacementField reconstruct_block_field(const rom::ReducedOrderModel& model,
                                               std::span<const double> values, double delta_t) {
    const std::size_t n = model.basis.n_cols();
    if (values.size() != n)
        throw Error("reconstruct_block_field: expected " + std::to_string(n) + " reduced values, got " +
                    std::to_string(values.size()));
    const std::size_t n_fine = model.basis.n_rows();
    fem::DisplacementField u(n_fine, 0.0);
    for (std::size_t dof = 0; dof < n_fine; ++dof) {
        const double* row = model.basis.row(dof);
        double acc = delta_t * model.thermal[dof];
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * values[i];
        u[dof] = acc;
    }
    return u;
}

BlockMeshes BlockMeshes::from(const RomSet& roms) {
    BlockMeshes m;
    if (roms.tsv) m.tsv = build_unit_block_mesh(roms.tsv->geometry, roms.tsv->grid);
    if (roms.dummy) m.dummy = build_dummy_block_mesh(roms.dummy->geometry, roms.dummy->grid);
    return m;
}

const HexMesh& BlockMeshes::at(BlockKind kind) const {
    const auto& slot = (kind == BlockKind::Tsv) ? tsv : dummy;
    if (!slot) throw Error("BlockMeshes: mesh not built for this kind");
    return *slot;
}

StressGrid cutplane_von_mises(const GlobalSolution& solution, const ArrayLayout& layout,
                              const RomSet& roms, const GlobalIndex& index,
                              const BlockMeshes& meshes, std::uint32_t res, int threads) {
    roms.check_consistency(layout);
    const rom::NodeLayout& nl = roms.any().layout;
    StressGrid grid = StressGrid::make(layout.rows, layout.cols, res, layout.pitch);
    const double z_mid = 0.5 * layout.height;

    parallel_for_ranges(layout.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t cell = begin; cell < end; ++cell) {
            std::uint32_t r = static_cast<std::uint32_t>(cell / layout.cols);
            std::uint32_t c = static_cast<std::uint32_t>(cell % layout.cols);
            BlockKind kind = layout.kind_at(r, c);
            const rom::ReducedOrderModel& model = roms.at(kind);
            const HexMesh& mesh = meshes.at(kind);
            double dt = layout.delta_t_at(r, c);

            std::vector<double> v = gather_cell_values(solution.u, r, c, index, nl);
            fem::DisplacementField field = reconstruct_block_field(model, v, dt);

            for (std::uint32_t py = 0; py < res; ++py)
                for (std::uint32_t px = 0; px < res; ++px) {
                    std::array<double, 3> point = {grid.local_coord(px), grid.local_coord(py), z_mid};
                    fem::StressTensor s = fem::evaluate_stress(field, mesh, point, model.materials, dt);
                    grid.at(r, c, py, px) = fem::von_mises(s);
                }
        }
    });
    return grid;
}

}  // namespace tsvstress::global
