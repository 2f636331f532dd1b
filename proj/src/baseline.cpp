#include "tsvstress/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tsvstress::baseline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<BlockKind> layout_kinds(const global::ArrayLayout& layout) {
    std::vector<BlockKind> kinds(layout.cell_count());
    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c)
            kinds[static_cast<std::size_t>(r) * layout.cols + c] = layout.kind_at(r, c);
    return kinds;
}

std::vector<double> per_element_delta_t(const global::ArrayLayout& layout, const HexMesh& array,
                                        std::size_t bx, std::size_t by) {
    const std::size_t cx = array.grid.cells_x(), cy = array.grid.cells_y();
    std::vector<double> dt(array.element_count(), 0.0);
    for (std::size_t e = 0; e < array.element_count(); ++e) {
        std::size_t i = e % cx;
        std::size_t j = (e / cx) % cy;
        dt[e] = layout.delta_t_at(static_cast<std::uint32_t>(j / by),
                                  static_cast<std::uint32_t>(i / bx));
    }
    return dt;
}

ReferenceSolution solve_on_mesh(HexMesh mesh, TensorGrid block_grid,
                                std::vector<double> element_dt, const fem::DirichletSet& bc,
                                const MaterialTable& mats, const ReferenceOptions& opts) {
    auto t0 = Clock::now();
    if (mesh.dof_count() > opts.dof_cap)
        throw Error("reference_solve: " + std::to_string(mesh.dof_count()) +
                    " DoFs exceed the cap of " + std::to_string(opts.dof_cap) +
                    "; reduce the array size or coarsen the grid");

    ReferenceSolution sol;
    sol.stats.dofs = mesh.dof_count();

    auto [a, b] = fem::assemble(mesh, mats, element_dt, opts.threads);
    fem::apply_dirichlet_lifting(a, b, bc);

    if (opts.direct) {
        linalg::SymmetricFactor factor = linalg::factorize_spd(a);
        sol.u = factor.solve(b);
        sol.stats.iterations = 0;
    } else {
        linalg::IterOptions iter = opts.iter;
        iter.threads = opts.threads;
        linalg::IterResult res = linalg::iterative_solve(a, b, iter);
        sol.u = std::move(res.x);
        sol.stats.iterations = res.iterations;
    }

    // residual re-verified independently of the solver
    std::vector<double> r(b.size());
    a.apply(sol.u, r, opts.threads);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    double nb = linalg::norm2(b);
    sol.stats.relative_residual = nb > 0.0 ? linalg::norm2(r) / nb : linalg::norm2(r);

    sol.mesh = std::move(mesh);
    sol.block_grid = std::move(block_grid);
    sol.element_delta_t = std::move(element_dt);
    sol.stats.wall_s = seconds_since(t0);
    sol.stats.peak_mem_bytes = peak_rss_bytes();
    return sol;
}

}  // namespace

ReferenceSolution reference_solve(const global::ArrayLayout& layout, const global::GlobalBC& bc,
                                  const HexMesh& tsv_block, const MaterialTable& mats,
                                  const ReferenceOptions& opts) {
    layout.validate();
    std::vector<BlockKind> kinds = layout_kinds(layout);
    HexMesh array = replicate_array_mesh(tsv_block, layout.rows, layout.cols, kinds);
    std::vector<double> dt =
        per_element_delta_t(layout, array, tsv_block.grid.cells_x(), tsv_block.grid.cells_y());

    fem::DirichletSet set;
    if (bc.kind == global::GlobalBC::Kind::ClampedTopBottom) {
        for (std::size_t node = 0; node < array.node_count(); ++node) {
            if (array.node_boundary[node] & (face::z_min | face::z_max))
                for (int comp = 0; comp < 3; ++comp)
                    set.set(static_cast<std::uint32_t>(3 * node + comp), 0.0);
        }
    } else {
        for (std::size_t node = 0; node < array.node_count(); ++node) {
            if (array.node_boundary[node] == 0) continue;
            std::array<double, 3> u = bc.field.interpolate(array.nodes[node]);
            for (int comp = 0; comp < 3; ++comp)
                set.set(static_cast<std::uint32_t>(3 * node + comp), u[comp]);
        }
    }
    return solve_on_mesh(std::move(array), tsv_block.grid, std::move(dt), set, mats, opts);
}

ReferenceSolution reference_solve_prescribed(const global::ArrayLayout& layout,
                                             std::span<const double> reduced_u,
                                             const rom::NodeLayout& node_layout,
                                             const global::GlobalIndex& index,
                                             const HexMesh& tsv_block, const MaterialTable& mats,
                                             const ReferenceOptions& opts) {
    layout.validate();
    if (reduced_u.size() != index.dof_count())
        throw Error("reference_solve_prescribed: reduced vector length mismatch");
    std::vector<BlockKind> kinds = layout_kinds(layout);
    HexMesh array = replicate_array_mesh(tsv_block, layout.rows, layout.cols, kinds);
    std::vector<double> dt =
        per_element_delta_t(layout, array, tsv_block.grid.cells_x(), tsv_block.grid.cells_y());

    rom::InterpolationOperator op = rom::build_interpolation_operator(tsv_block, node_layout);

    // Shared faces are written by both neighbouring blocks with the same
    // interpolated value; last writer wins.
    std::vector<double> value(array.dof_count(), 0.0);
    std::vector<std::uint8_t> prescribed(array.dof_count(), 0);

    const std::size_t bnx = tsv_block.grid.x.size(), bny = tsv_block.grid.y.size();
    const std::size_t bcx = tsv_block.grid.cells_x(), bcy = tsv_block.grid.cells_y();
    const std::size_t anx = array.grid.x.size(), any_ = array.grid.y.size();

    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c) {
            std::vector<double> v = global::gather_cell_values(reduced_u, r, c, index, node_layout);
            std::vector<double> ubc = linalg::spmv(op.weights, v);
            for (std::size_t row = 0; row < op.boundary_dofs.size(); ++row) {
                std::uint32_t local_dof = op.boundary_dofs[row];
                std::size_t local_node = local_dof / 3;
                int comp = static_cast<int>(local_dof % 3);
                std::size_t li = local_node % bnx;
                std::size_t lj = (local_node / bnx) % bny;
                std::size_t lk = local_node / (bnx * bny);
                std::size_t gi = static_cast<std::size_t>(c) * bcx + li;
                std::size_t gj = static_cast<std::size_t>(r) * bcy + lj;
                std::size_t gnode = (lk * any_ + gj) * anx + gi;
                value[3 * gnode + comp] = ubc[row];
                prescribed[3 * gnode + comp] = 1;
            }
        }

    fem::DirichletSet set;
    for (std::size_t dof = 0; dof < value.size(); ++dof)
        if (prescribed[dof]) set.set(static_cast<std::uint32_t>(dof), value[dof]);
    return solve_on_mesh(std::move(array), tsv_block.grid, std::move(dt), set, mats, opts);
}

namespace {

/// Stress tensors at the res x res per-block half-height samples. The cell
/// search runs on the unit-block axes so both pipelines pick identical
/// cells at knife-edge coordinates.
std::vector<fem::StressTensor> cutplane_tensors(const ReferenceSolution& sol,
                                                const global::ArrayLayout& layout,
                                                const MaterialTable& mats, std::uint32_t res,
                                                int threads) {
    const TensorGrid& bg = sol.block_grid;
    const std::size_t bcx = bg.cells_x(), bcy = bg.cells_y();
    const std::size_t acx = sol.mesh.grid.cells_x(), acy = sol.mesh.grid.cells_y();
    const double z_mid = 0.5 * layout.height;
    const std::size_t zc = locate_axis_cell(bg.z, z_mid);

    std::vector<fem::StressTensor> tensors(static_cast<std::size_t>(layout.rows) * layout.cols *
                                           res * res);
    parallel_for_ranges(layout.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t cell = begin; cell < end; ++cell) {
            std::uint32_t r = static_cast<std::uint32_t>(cell / layout.cols);
            std::uint32_t c = static_cast<std::uint32_t>(cell % layout.cols);
            double dt = layout.delta_t_at(r, c);
            for (std::uint32_t py = 0; py < res; ++py)
                for (std::uint32_t px = 0; px < res; ++px) {
                    double lx = (static_cast<double>(px) + 0.5) * layout.pitch / res;
                    double ly = (static_cast<double>(py) + 0.5) * layout.pitch / res;
                    std::size_t ci = c * bcx + locate_axis_cell(bg.x, lx);
                    std::size_t cj = r * bcy + locate_axis_cell(bg.y, ly);
                    std::size_t elem = (zc * acy + cj) * acx + ci;
                    std::array<double, 3> point = {static_cast<double>(c) * layout.pitch + lx,
                                                   static_cast<double>(r) * layout.pitch + ly,
                                                   z_mid};
                    tensors[(cell * res + py) * res + px] =
                        fem::evaluate_stress_in_element(sol.u, sol.mesh, elem, point, mats, dt);
                }
        }
    });
    return tensors;
}

}  // namespace

StressGrid reference_cutplane(const ReferenceSolution& sol, const global::ArrayLayout& layout,
                              const MaterialTable& mats, std::uint32_t res, int threads) {
    std::vector<fem::StressTensor> tensors = cutplane_tensors(sol, layout, mats, res, threads);
    StressGrid grid = StressGrid::make(layout.rows, layout.cols, res, layout.pitch);
    for (std::size_t i = 0; i < tensors.size(); ++i) grid.values[i] = fem::von_mises(tensors[i]);
    return grid;
}

const fem::StressTensor& SuperpositionModel::pert_at(std::uint32_t br, std::uint32_t bc,
                                                     std::uint32_t py, std::uint32_t px) const {
    return perturbation[((static_cast<std::size_t>(br) * span() + bc) * res + py) * res + px];
}

double SuperpositionModel::max_perturbation_von_mises() const {
    double peak = 0.0;
    for (const auto& t : perturbation) peak = std::max(peak, fem::von_mises(t));
    return peak;
}

Hash256 superposition_fingerprint(const UnitBlockGeometry& geom, const TensorGrid& grid,
                                  const MaterialTable& mats, std::uint32_t halo, std::uint32_t res,
                                  double delta_t) {
    ByteWriter w;
    w.f64(geom.d);
    w.f64(geom.h);
    w.f64(geom.t);
    w.f64(geom.p);
    for (const auto* axis : {&grid.x, &grid.y, &grid.z}) {
        w.u32(static_cast<std::uint32_t>(axis->size()));
        w.f64_array(axis->data(), axis->size());
    }
    for (std::uint8_t id = 0; id < 3; ++id) {
        const Material& m = mats.entries[id];
        w.u8(id);
        w.f64(m.youngs_modulus);
        w.f64(m.poisson_ratio);
        w.f64(m.thermal_expansion);
    }
    w.u32(halo);
    w.u32(res);
    w.f64(delta_t);
    return sha256(w.buffer().data(), w.buffer().size());
}

SuperpositionModel superposition_single_solve(const UnitBlockGeometry& geom,
                                              const TensorGrid& block_grid,
                                              const MaterialTable& mats, std::uint32_t halo,
                                              double delta_t, const ReferenceOptions& opts) {
    if (halo < 1) throw Error("superposition: halo must be >= 1");
    geom.validate();

    SuperpositionModel model;
    model.halo = halo;
    model.res = opts.res;
    model.pitch = geom.p;
    model.height = geom.h;
    model.delta_t = delta_t;
    model.fingerprint = superposition_fingerprint(geom, block_grid, mats, halo, opts.res, delta_t);

    const std::uint32_t span = model.span();
    global::ArrayLayout domain;
    domain.rows = span;
    domain.cols = span;
    domain.pitch = geom.p;
    domain.height = geom.h;
    domain.delta_t = {delta_t};
    domain.kinds.assign(domain.cell_count(), BlockKind::Dummy);
    domain.kinds[static_cast<std::size_t>(halo) * span + halo] = BlockKind::Tsv;

    HexMesh tsv_block = build_unit_block_mesh(geom, block_grid);
    global::GlobalBC clamped = global::GlobalBC::clamped();

    ReferenceSolution with_tsv = reference_solve(domain, clamped, tsv_block, mats, opts);
    std::vector<fem::StressTensor> tsv_tensors =
        cutplane_tensors(with_tsv, domain, mats, opts.res, opts.threads);
    with_tsv = ReferenceSolution{};  // release the mesh before the second solve

    global::ArrayLayout background = domain;
    background.kinds.assign(background.cell_count(), BlockKind::Dummy);
    ReferenceSolution silicon_only = reference_solve(background, clamped, tsv_block, mats, opts);
    std::vector<fem::StressTensor> bg_tensors =
        cutplane_tensors(silicon_only, background, mats, opts.res, opts.threads);

    model.perturbation.resize(tsv_tensors.size());
    for (std::size_t i = 0; i < tsv_tensors.size(); ++i) {
        fem::StressTensor d;
        d.xx = tsv_tensors[i].xx - bg_tensors[i].xx;
        d.yy = tsv_tensors[i].yy - bg_tensors[i].yy;
        d.zz = tsv_tensors[i].zz - bg_tensors[i].zz;
        d.xy = tsv_tensors[i].xy - bg_tensors[i].xy;
        d.yz = tsv_tensors[i].yz - bg_tensors[i].yz;
        d.zx = tsv_tensors[i].zx - bg_tensors[i].zx;
        model.perturbation[i] = d;
    }
    std::size_t center = ((static_cast<std::size_t>(halo) * span + halo) * opts.res + opts.res / 2) *
                             opts.res + opts.res / 2;
    model.background = bg_tensors[center];
    return model;
}

StressGrid superposition_field(const SuperpositionModel& model, const global::ArrayLayout& layout) {
    layout.validate();
    if (!layout.uniform_delta_t())
        throw Error("superposition_field: the layout thermal load must be uniform");
    if (layout.pitch != model.pitch || layout.height != model.height)
        throw Error("superposition_field: layout geometry does not match the model");
    double dt = layout.delta_t_at(0, 0);
    double scale;
    if (model.delta_t == 0.0) {
        if (dt != 0.0)
            throw Error("superposition_field: model was built at zero thermal load");
        scale = 0.0;
    } else {
        scale = dt / model.delta_t;  // everything is linear in the thermal load
    }

    const int m = static_cast<int>(model.halo);
    StressGrid grid = StressGrid::make(layout.rows, layout.cols, model.res, layout.pitch);
    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c)
            for (std::uint32_t py = 0; py < model.res; ++py)
                for (std::uint32_t px = 0; px < model.res; ++px) {
                    fem::StressTensor t = model.background;
                    for (int dr = -m; dr <= m; ++dr)
                        for (int dc = -m; dc <= m; ++dc) {
                            int tr = static_cast<int>(r) + dr;
                            int tc = static_cast<int>(c) + dc;
                            if (tr < 0 || tc < 0 || tr >= static_cast<int>(layout.rows) ||
                                tc >= static_cast<int>(layout.cols))
                                continue;
                            if (layout.kind_at(static_cast<std::uint32_t>(tr),
                                               static_cast<std::uint32_t>(tc)) != BlockKind::Tsv)
                                continue;
                            // this point sits at block offset (-dr,-dc) from the via
                            const fem::StressTensor& p = model.pert_at(
                                static_cast<std::uint32_t>(m - dr), static_cast<std::uint32_t>(m - dc),
                                py, px);
                            t.xx += p.xx;
                            t.yy += p.yy;
                            t.zz += p.zz;
                            t.xy += p.xy;
                            t.yz += p.yz;
                            t.zx += p.zx;
                        }
                    t.xx *= scale;
                    t.yy *= scale;
                    t.zz *= scale;
                    t.xy *= scale;
                    t.yz *= scale;
                    t.zx *= scale;
                    grid.at(r, c, py, px) = fem::von_mises(t);
                }
    return grid;
}

double normalized_mae(const StressGrid& a, const StressGrid& b) {
    if (!a.same_shape(b)) throw Error("normalized_mae: grid shapes differ");
    double sum = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        sum += std::abs(a.values[i] - b.values[i]);
        peak = std::max(peak, b.values[i]);
    }
    if (peak == 0.0) throw Error("normalized_mae: ground-truth grid is identically zero");
    return sum / static_cast<double>(a.values.size()) / peak;
}

namespace {
constexpr char kSupMagic[4] = {'M', 'S', 'U', 'P'};
constexpr std::uint32_t kSupVersion = 1;
}  // namespace

void SuperpositionModel::save(const std::string& path) const {
    ByteWriter w;
    w.bytes(kSupMagic, 4);
    w.u32(kSupVersion);
    w.bytes(fingerprint.data(), fingerprint.size());
    w.u32(halo);
    w.u32(res);
    w.f64(pitch);
    w.f64(height);
    w.f64(delta_t);
    const double* bg = &background.xx;
    w.f64_array(bg, 6);
    for (const auto& t : perturbation) w.f64_array(&t.xx, 6);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("superposition cache: cannot open " + path);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw Error("superposition cache: write failed for " + path);
}

SuperpositionModel SuperpositionModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("superposition cache: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(bytes.data(), bytes.size(), "superposition cache(" + path + ")");

    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kSupMagic, 4) != 0)
        throw Error("superposition cache: " + path + " has a bad magic");
    if (r.u32() != kSupVersion)
        throw Error("superposition cache: " + path + " has an unsupported version");

    SuperpositionModel m;
    r.bytes(m.fingerprint.data(), m.fingerprint.size());
    m.halo = r.u32();
    m.res = r.u32();
    m.pitch = r.f64();
    m.height = r.f64();
    m.delta_t = r.f64();
    r.f64_array(&m.background.xx, 6);
    std::size_t count = static_cast<std::size_t>(m.span()) * m.span() * m.res * m.res;
    if (r.remaining() != count * 6 * sizeof(double))
        throw Error("superposition cache: " + path + " has a corrupt length");
    m.perturbation.resize(count);
    for (auto& t : m.perturbation) r.f64_array(&t.xx, 6);
    return m;
}

}  // namespace tsvstress::baseline
