#include "tsvstress/rom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tsvstress::rom {

NodeLayout NodeLayout::create(std::uint32_t n_x, std::uint32_t n_y, std::uint32_t n_z,
                              double extent_x, double extent_y, double extent_z) {
    if (n_x < 2 || n_y < 2 || n_z < 2)
        throw Error("NodeLayout: need at least 2 interpolation nodes per axis");
    NodeLayout l;
    l.n_x = n_x;
    l.n_y = n_y;
    l.n_z = n_z;
    l.extent_x = extent_x;
    l.extent_y = extent_y;
    l.extent_z = extent_z;
    l.coords_x = linspace(0.0, extent_x, n_x - 1);
    l.coords_y = linspace(0.0, extent_y, n_y - 1);
    l.coords_z = linspace(0.0, extent_z, n_z - 1);
    for (std::uint32_t i = 0; i < n_x; ++i)
        for (std::uint32_t j = 0; j < n_y; ++j)
            for (std::uint32_t k = 0; k < n_z; ++k) {
                bool interior = i > 0 && i < n_x - 1 && j > 0 && j < n_y - 1 && k > 0 && k < n_z - 1;
                if (!interior) l.surface_nodes.push_back({i, j, k});
            }
    return l;
}

std::array<double, 3> NodeLayout::node_coord(std::size_t rank) const {
    const auto& n = surface_nodes[rank];
    return {coords_x[n[0]], coords_y[n[1]], coords_z[n[2]]};
}

std::size_t num_element_dofs(std::uint32_t n_x, std::uint32_t n_y, std::uint32_t n_z) {
    if (n_x < 2 || n_y < 2 || n_z < 2)
        throw Error("num_element_dofs: need at least 2 nodes per axis");
    std::size_t total = static_cast<std::size_t>(n_x) * n_y * n_z;
    std::size_t interior = static_cast<std::size_t>(n_x - 2) * (n_y - 2) * (n_z - 2);
    return (total - interior) * 3;
}

double lagrange_1d(std::span<const double> coords, std::size_t i, double x) {
    if (i >= coords.size()) throw Error("lagrange_1d: node index out of range");
    double w = 1.0;
    for (std::size_t m = 0; m < coords.size(); ++m) {
        if (m == i) continue;
        double denom = coords[i] - coords[m];
        if (denom == 0.0) throw Error("lagrange_1d: duplicate node coordinates");
        w *= (x - coords[m]) / denom;
    }
    return w;
}

double lagrange_3d(const NodeLayout& layout, const std::array<std::uint32_t, 3>& node,
                   const std::array<double, 3>& point) {
    return lagrange_1d(layout.coords_x, node[0], point[0]) *
           lagrange_1d(layout.coords_y, node[1], point[1]) *
           lagrange_1d(layout.coords_z, node[2], point[2]);
}

InterpolationOperator build_interpolation_operator(const HexMesh& mesh, const NodeLayout& layout) {
    // Per-axis cardinal tables: weight of layout node i at fine grid line f.
    auto axis_table = [](const std::vector<double>& fine, const std::vector<double>& nodes) {
        linalg::DenseMatrix t(fine.size(), nodes.size());
        for (std::size_t f = 0; f < fine.size(); ++f)
            for (std::size_t i = 0; i < nodes.size(); ++i)
                t.at(f, i) = lagrange_1d(nodes, i, fine[f]);
        return t;
    };
    linalg::DenseMatrix wx = axis_table(mesh.grid.x, layout.coords_x);
    linalg::DenseMatrix wy = axis_table(mesh.grid.y, layout.coords_y);
    linalg::DenseMatrix wz = axis_table(mesh.grid.z, layout.coords_z);

    InterpolationOperator op;
    const std::size_t nx = mesh.grid.x.size(), ny = mesh.grid.y.size();
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    offsets.push_back(0);

    for (std::size_t node = 0; node < mesh.node_count(); ++node) {
        if (mesh.node_boundary[node] == 0) continue;
        std::size_t fi = node % nx;
        std::size_t fj = (node / nx) % ny;
        std::size_t fk = node / (nx * ny);
        for (int c = 0; c < 3; ++c) {
            op.boundary_dofs.push_back(static_cast<std::uint32_t>(3 * node + c));
            for (std::size_t rank = 0; rank < layout.node_count(); ++rank) {
                const auto& ln = layout.surface_nodes[rank];
                double w = wx.at(fi, ln[0]) * wy.at(fj, ln[1]) * wz.at(fk, ln[2]);
                if (w != 0.0) {
                    cols.push_back(static_cast<std::uint32_t>(3 * rank + c));
                    vals.push_back(w);
                }
            }
            offsets.push_back(static_cast<std::uint32_t>(vals.size()));
        }
    }
    op.weights = linalg::CsrMatrix(op.boundary_dofs.size(), layout.reduced_dofs(),
                                   std::move(offsets), std::move(cols), std::move(vals));
    return op;
}

Hash256 rom_fingerprint(const UnitBlockGeometry& geom, const TensorGrid& grid,
                        const MaterialTable& mats, const NodeLayout& layout) {
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
    w.u32(layout.n_x);
    w.u32(layout.n_y);
    w.u32(layout.n_z);
    return sha256(w.buffer().data(), w.buffer().size());
}

ReducedOrderModel build_rom(const UnitBlockGeometry& geom, const HexMesh& mesh,
                            const MaterialTable& mats, const NodeLayout& layout, BlockKind kind,
                            int threads) {
    if (mesh.grid.x.back() != layout.extent_x || mesh.grid.y.back() != layout.extent_y ||
        mesh.grid.z.back() != layout.extent_z)
        throw Error("build_rom: layout extents do not match the mesh");

    const std::size_t n_fine = mesh.dof_count();
    const std::size_t n = layout.reduced_dofs();

    auto [a_local, b_unit] = fem::assemble(mesh, mats, {}, threads);
    InterpolationOperator op = build_interpolation_operator(mesh, layout);

    std::vector<std::uint8_t> constrained(n_fine, 0);
    std::vector<std::uint32_t> boundary_row(n_fine, 0);
    for (std::size_t r = 0; r < op.boundary_dofs.size(); ++r) {
        constrained[op.boundary_dofs[r]] = 1;
        boundary_row[op.boundary_dofs[r]] = static_cast<std::uint32_t>(r);
    }

    // Right-hand sides of all n+1 local problems, built against the
    // unlifted matrix: free rows get -A_f,bc * (L e_i); boundary rows carry
    // the prescribed interpolated values themselves.
    linalg::DenseMatrix rhs(n_fine, n);  // one column per basis field
    std::vector<double> rhs_thermal(n_fine, 0.0);
    {
        const auto& off = op.weights.row_offsets();
        const auto& wcols = op.weights.col_indices();
        const auto& wvals = op.weights.values();
        for (std::size_t r = 0; r < op.boundary_dofs.size(); ++r) {
            double* row = rhs.row(op.boundary_dofs[r]);
            for (std::uint32_t k = off[r]; k < off[r + 1]; ++k) row[wcols[k]] = wvals[k];
        }
        const auto& aoff = a_local.row_offsets();
        const auto& acols = a_local.col_indices();
        const auto& avals = a_local.values();
        for (std::size_t dof = 0; dof < n_fine; ++dof) {
            if (constrained[dof]) continue;
            rhs_thermal[dof] = b_unit[dof];
            double* row = rhs.row(dof);
            for (std::uint32_t k = aoff[dof]; k < aoff[dof + 1]; ++k) {
                std::uint32_t c = acols[k];
                if (!constrained[c]) continue;
                double v = avals[k];
                std::uint32_t br = boundary_row[c];
                for (std::uint32_t m = off[br]; m < off[br + 1]; ++m)
                    row[wcols[m]] -= v * wvals[m];
            }
        }
    }

    // One factorization serves the thermal solve and all basis solves.
    linalg::CsrMatrix a_lifted = a_local;
    {
        std::vector<double> dummy_b(n_fine, 0.0);
        fem::DirichletSet zeros;
        for (std::uint32_t dof : op.boundary_dofs) zeros.set(dof, 0.0);
        fem::apply_dirichlet_lifting(a_lifted, dummy_b, zeros);
    }
    linalg::SymmetricFactor factor = linalg::factorize_spd(a_lifted);

    ReducedOrderModel model;
    model.geometry = geom;
    model.grid = mesh.grid;
    model.materials = mats;
    model.layout = layout;
    model.kind = kind;
    model.basis = linalg::DenseMatrix(n_fine, n);
    model.thermal = factor.solve(rhs_thermal);

    parallel_for_ranges(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> col(n_fine);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t dof = 0; dof < n_fine; ++dof) col[dof] = rhs.at(dof, i);
            std::vector<double> x = factor.solve(col);
            for (std::size_t dof = 0; dof < n_fine; ++dof) model.basis.at(dof, i) = x[dof];
        }
    });
    // Prescribed entries are pinned to their exact interpolated values so the
    // boundary restriction of each basis column is the interpolation row
    // itself, bit for bit.
    for (std::size_t r = 0; r < op.boundary_dofs.size(); ++r) {
        std::uint32_t dof = op.boundary_dofs[r];
        model.thermal[dof] = 0.0;
        for (std::size_t i = 0; i < n; ++i) model.basis.at(dof, i) = rhs.at(dof, i);
    }

    // Condensation: A_element = basis^T (A_local basis), b_element = basis^T b.
    linalg::DenseMatrix a_basis(n_fine, n);  // reuse pattern of rhs, now A * basis
    parallel_for_ranges(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> col(n_fine), out(n_fine);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t dof = 0; dof < n_fine; ++dof) col[dof] = model.basis.at(dof, i);
            a_local.apply(col, out);
            for (std::size_t dof = 0; dof < n_fine; ++dof) a_basis.at(dof, i) = out[dof];
        }
    });

    using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajorMat> basis_map(model.basis.values().data(),
                                            static_cast<Eigen::Index>(n_fine),
                                            static_cast<Eigen::Index>(n));
    Eigen::Map<const RowMajorMat> a_basis_map(a_basis.values().data(),
                                              static_cast<Eigen::Index>(n_fine),
                                              static_cast<Eigen::Index>(n));
    model.a_element = linalg::DenseMatrix(n, n);
    Eigen::Map<RowMajorMat> a_el_map(model.a_element.values().data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(n));
    a_el_map.noalias() = basis_map.transpose() * a_basis_map;

    model.b_element.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t dof = 0; dof < n_fine; ++dof) acc += model.basis.at(dof, i) * b_unit[dof];
        model.b_element[i] = acc;
    }

    model.fingerprint = rom_fingerprint(geom, mesh.grid, mats, layout);
    return model;
}

namespace {

constexpr char kMagic[4] = {'M', 'R', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_rom(const ReducedOrderModel& model, const std::string& path) {
    ByteWriter header;
    header.f64(model.geometry.d);
    header.f64(model.geometry.h);
    header.f64(model.geometry.t);
    header.f64(model.geometry.p);
    for (const auto* axis : {&model.grid.x, &model.grid.y, &model.grid.z}) {
        header.u32(static_cast<std::uint32_t>(axis->size()));
        header.f64_array(axis->data(), axis->size());
    }
    for (std::uint8_t id = 0; id < 3; ++id) {
        const Material& m = model.materials.entries[id];
        header.u8(id);
        header.f64(m.youngs_modulus);
        header.f64(m.poisson_ratio);
        header.f64(m.thermal_expansion);
    }
    header.u32(model.layout.n_x);
    header.u32(model.layout.n_y);
    header.u32(model.layout.n_z);
    Hash256 fp = sha256(header.buffer().data(), header.buffer().size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_rom: cannot open " + path);
    ByteWriter file;
    file.bytes(kMagic, 4);
    file.u32(kVersion);
    file.u8(static_cast<std::uint8_t>(model.kind));
    file.bytes(header.buffer().data(), header.buffer().size());
    file.bytes(fp.data(), fp.size());

    const std::size_t n_fine = model.basis.n_rows();
    const std::size_t n = model.basis.n_cols();
    for (std::size_t i = 0; i < n; ++i)  // basis stored column-major
        for (std::size_t dof = 0; dof < n_fine; ++dof) file.f64(model.basis.at(dof, i));
    file.f64_array(model.thermal.data(), model.thermal.size());
    file.f64_array(model.a_element.values().data(), model.a_element.values().size());
    file.f64_array(model.b_element.data(), model.b_element.size());

    out.write(file.buffer().data(), static_cast<std::streamsize>(file.buffer().size()));
    if (!out) throw Error("save_rom: write failed for " + path);
}

ReducedOrderModel load_rom(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_rom: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    ByteReader r(bytes.data(), bytes.size(), "load_rom(" + path + ")");
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw Error("load_rom: " + path + " is not a ROM file (bad magic)");
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw Error("load_rom: " + path + " has unsupported format version " +
                    std::to_string(version));
    std::uint8_t kind_byte = r.u8();
    if (kind_byte > 1) throw Error("load_rom: invalid block kind byte");

    const std::size_t header_begin = 9;
    ReducedOrderModel model;
    model.kind = static_cast<BlockKind>(kind_byte);
    model.geometry.d = r.f64();
    model.geometry.h = r.f64();
    model.geometry.t = r.f64();
    model.geometry.p = r.f64();
    for (auto* axis : {&model.grid.x, &model.grid.y, &model.grid.z}) {
        std::uint32_t len = r.u32();
        if (len < 2 || len > 100000000u) throw Error("load_rom: corrupt grid axis length");
        axis->resize(len);
        r.f64_array(axis->data(), len);
    }
    for (std::uint8_t id = 0; id < 3; ++id) {
        std::uint8_t stored = r.u8();
        if (stored != id) throw Error("load_rom: material table out of order");
        double e = r.f64(), nu = r.f64(), alpha = r.f64();
        model.materials.entries[id] = Material::make(e, nu, alpha);
    }
    std::uint32_t n_x = r.u32(), n_y = r.u32(), n_z = r.u32();
    const std::size_t header_end = bytes.size() - r.remaining();

    Hash256 stored_fp{};
    r.bytes(stored_fp.data(), stored_fp.size());
    Hash256 computed = sha256(bytes.data() + header_begin, header_end - header_begin);
    if (stored_fp != computed)
        throw Error("load_rom: " + path + " fingerprint does not match its header (corrupt file)");
    model.fingerprint = stored_fp;

    model.geometry.validate();
    model.grid.validate(model.geometry.p, model.geometry.p, model.geometry.h);
    model.layout = NodeLayout::create(n_x, n_y, n_z, model.geometry.p, model.geometry.p,
                                      model.geometry.h);

    const std::size_t n_fine = model.grid.node_count() * 3;
    const std::size_t n = model.layout.reduced_dofs();
    const std::size_t expected_body = (n_fine * n + n_fine + n * n + n) * sizeof(double);
    if (r.remaining() != expected_body)
        throw Error("load_rom: " + path + ": corrupt length (body is " +
                    std::to_string(r.remaining()) + " bytes, expected " +
                    std::to_string(expected_body) + ")");

    model.basis = linalg::DenseMatrix(n_fine, n);
    std::vector<double> col(n_fine);
    for (std::size_t i = 0; i < n; ++i) {
        r.f64_array(col.data(), n_fine);
        for (std::size_t dof = 0; dof < n_fine; ++dof) model.basis.at(dof, i) = col[dof];
    }
    model.thermal.resize(n_fine);
    r.f64_array(model.thermal.data(), n_fine);
    model.a_element = linalg::DenseMatrix(n, n);
    r.f64_array(model.a_element.values().data(), n * n);
    model.b_element.resize(n);
    r.f64_array(model.b_element.data(), n);
    return model;
}

}  // namespace tsvstress::rom
