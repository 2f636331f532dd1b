#include "tsvstress/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tsvstress {

void UnitBlockGeometry::validate() const {
    if (!(d > 0.0)) throw Error("geometry: via diameter d must be > 0");
    if (!(t > 0.0)) throw Error("geometry: liner thickness t must be > 0");
    if (!(h > 0.0)) throw Error("geometry: block height h must be > 0");
    if (!(d + 2.0 * t < p))
        throw Error("geometry: d + 2t must be smaller than the pitch p");
}

void TensorGrid::validate(double extent_x, double extent_y, double extent_z) const {
    auto check_axis = [](const std::vector<double>& g, double extent, const char* name) {
        if (g.size() < 2) throw Error(std::string("grid: axis ") + name + " needs at least 2 lines");
        if (g.front() != 0.0 || g.back() != extent)
            throw Error(std::string("grid: axis ") + name + " must span [0, extent] exactly");
        for (std::size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1]))
                throw Error(std::string("grid: axis ") + name + " must be strictly increasing");
    };
    check_axis(x, extent_x, "x");
    check_axis(y, extent_y, "y");
    check_axis(z, extent_z, "z");
}

namespace {

constexpr double kGrowth = 1.5;  // geometric coarsening ratio toward the block edge

/// Cell sizes for the outer silicon span [0, w], finest (first) next to the
/// liner. Sizes grow geometrically from h0 up to target and are rescaled to
/// fill w exactly.
std::vector<double> outer_sizes(double w, double h0, double target) {
    if (w <= h0) return {w};
    std::vector<double> sizes;
    double s = h0;
    double sum = 0.0;
    while (sum < w) {
        sizes.push_back(s);
        sum += s;
        s = std::min(s * kGrowth, target);
    }
    double scale = w / sum;
    for (double& v : sizes) v *= scale;
    return sizes;
}

/// Graded half axis [0, p/2] for the TSV cross-section; returned ascending
/// with exact breakpoints at the liner radii.
std::vector<double> graded_half_axis(const UnitBlockGeometry& geom, double target) {
    const double c = 0.5 * geom.p;
    const double r_in = 0.5 * geom.d;
    const double r_out = r_in + geom.t;
    const double a1 = c - r_out;  // outer liner surface
    const double a2 = c - r_in;   // copper surface

    const std::size_t n_liner = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(geom.t / target - 1e-12)));
    const double h_liner = geom.t / static_cast<double>(n_liner);

    const double core_h = std::min(target, 0.5 * r_in);
    const std::size_t n_core = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r_in / core_h - 1e-12)));

    const double h0 = std::min(target, kGrowth * h_liner);
    std::vector<double> outer = outer_sizes(a1, h0, target);

    std::vector<double> axis;
    axis.push_back(0.0);
    // outer span, coarsest first
    double pos = 0.0;
    for (std::size_t i = outer.size(); i > 1; --i) {
        pos += outer[i - 1];
        axis.push_back(pos);
    }
    axis.push_back(a1);
    for (std::size_t i = 1; i < n_liner; ++i)
        axis.push_back(a1 + geom.t * static_cast<double>(i) / static_cast<double>(n_liner));
    axis.push_back(a2);
    for (std::size_t i = 1; i < n_core; ++i)
        axis.push_back(a2 + r_in * static_cast<double>(i) / static_cast<double>(n_core));
    axis.push_back(c);
    return axis;
}

std::vector<double> mirrored_axis(const std::vector<double>& half, double p) {
    std::vector<double> axis = half;
    for (std::size_t i = half.size() - 1; i > 0; --i) axis.push_back(p - half[i - 1]);
    return axis;
}

}  // namespace

std::size_t locate_axis_cell(const std::vector<double>& axis, double v) {
    if (v < axis.front() || v > axis.back()) throw Error("point outside mesh extents");
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t k = static_cast<std::size_t>(it - axis.begin());
    k = (k == 0) ? 0 : k - 1;  // axis[k] <= v
    if (k > 0 && axis[k] == v) return k - 1;  // on a grid plane: lower cell wins
    return std::min(k, axis.size() - 2);
}

TensorGrid default_grading(const UnitBlockGeometry& geom, double target) {
    geom.validate();
    if (!(target > 0.0) || !std::isfinite(target))
        throw Error("grading: target element size must be positive and finite");

    TensorGrid grid;
    std::vector<double> half = graded_half_axis(geom, target);
    grid.x = mirrored_axis(half, geom.p);
    grid.y = grid.x;
    std::size_t n_z = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(geom.h / target - 1e-12)));
    grid.z = linspace(0.0, geom.h, n_z);
    grid.validate(geom.p, geom.p, geom.h);
    return grid;
}

std::uint32_t HexMesh::node_id(std::size_t i, std::size_t j, std::size_t k) const {
    return static_cast<std::uint32_t>((k * grid.y.size() + j) * grid.x.size() + i);
}

std::uint32_t HexMesh::cell_id(std::size_t i, std::size_t j, std::size_t k) const {
    return static_cast<std::uint32_t>((k * grid.cells_y() + j) * grid.cells_x() + i);
}

std::array<std::size_t, 3> HexMesh::find_cell(const std::array<double, 3>& point) const {
    return {locate_axis_cell(grid.x, point[0]), locate_axis_cell(grid.y, point[1]),
            locate_axis_cell(grid.z, point[2])};
}

std::array<std::array<double, 3>, 8> HexMesh::element_corners(std::size_t element) const {
    std::array<std::array<double, 3>, 8> corners;
    for (int a = 0; a < 8; ++a) corners[a] = nodes[elements[element][a]];
    return corners;
}

namespace {

HexMesh build_structured_mesh(TensorGrid grid,
                              const std::function<MaterialId(std::size_t, std::size_t, std::size_t)>& classify) {
    HexMesh mesh;
    mesh.grid = std::move(grid);
    const std::size_t nx = mesh.grid.x.size(), ny = mesh.grid.y.size(), nz = mesh.grid.z.size();

    mesh.nodes.resize(nx * ny * nz);
    mesh.node_boundary.assign(nx * ny * nz, 0);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                std::size_t id = (k * ny + j) * nx + i;
                mesh.nodes[id] = {mesh.grid.x[i], mesh.grid.y[j], mesh.grid.z[k]};
                std::uint8_t tag = 0;
                if (i == 0) tag |= face::x_min;
                if (i == nx - 1) tag |= face::x_max;
                if (j == 0) tag |= face::y_min;
                if (j == ny - 1) tag |= face::y_max;
                if (k == 0) tag |= face::z_min;
                if (k == nz - 1) tag |= face::z_max;
                mesh.node_boundary[id] = tag;
            }

    const std::size_t cx = nx - 1, cy = ny - 1, cz = nz - 1;
    mesh.elements.resize(cx * cy * cz);
    mesh.element_material.resize(cx * cy * cz);
    for (std::size_t k = 0; k < cz; ++k)
        for (std::size_t j = 0; j < cy; ++j)
            for (std::size_t i = 0; i < cx; ++i) {
                std::size_t e = (k * cy + j) * cx + i;
                auto n = [&](std::size_t di, std::size_t dj, std::size_t dk) {
                    return static_cast<std::uint32_t>(((k + dk) * ny + (j + dj)) * nx + (i + di));
                };
                mesh.elements[e] = {n(0, 0, 0), n(1, 0, 0), n(1, 1, 0), n(0, 1, 0),
                                    n(0, 0, 1), n(1, 0, 1), n(1, 1, 1), n(0, 1, 1)};
                mesh.element_material[e] = classify(i, j, k);
            }
    return mesh;
}

MaterialId classify_tsv(const TensorGrid& grid, const UnitBlockGeometry& geom, std::size_t i,
                        std::size_t j) {
    double xc = 0.5 * (grid.x[i] + grid.x[i + 1]);
    double yc = 0.5 * (grid.y[j] + grid.y[j + 1]);
    double r = std::hypot(xc - 0.5 * geom.p, yc - 0.5 * geom.p);
    if (r < 0.5 * geom.d) return MaterialId::Copper;
    if (r < 0.5 * geom.d + geom.t) return MaterialId::Liner;
    return MaterialId::Silicon;
}

}  // namespace

HexMesh build_unit_block_mesh(const UnitBlockGeometry& geom, const TensorGrid& grid) {
    geom.validate();
    grid.validate(geom.p, geom.p, geom.h);
    return build_structured_mesh(grid, [&](std::size_t i, std::size_t j, std::size_t) {
        return classify_tsv(grid, geom, i, j);
    });
}

HexMesh build_dummy_block_mesh(const UnitBlockGeometry& geom, const TensorGrid& grid) {
    geom.validate();
    grid.validate(geom.p, geom.p, geom.h);
    return build_structured_mesh(grid,
                                 [](std::size_t, std::size_t, std::size_t) { return MaterialId::Silicon; });
}

HexMesh replicate_array_mesh(const HexMesh& block, std::size_t rows, std::size_t cols,
                             std::span<const BlockKind> kinds) {
    if (rows < 1 || cols < 1) throw Error("replicate_array_mesh: rows and cols must be >= 1");
    if (!kinds.empty() && kinds.size() != rows * cols)
        throw Error("replicate_array_mesh: kinds must have rows*cols entries");
    if (block.grid.node_count() != block.node_count())
        throw Error("replicate_array_mesh: block mesh must come from a tensor grid");

    const double pitch_x = block.grid.x.back();
    const double pitch_y = block.grid.y.back();
    auto concat = [](const std::vector<double>& axis, std::size_t count, double extent) {
        std::vector<double> out;
        out.reserve((axis.size() - 1) * count + 1);
        for (std::size_t b = 0; b < count; ++b) {
            double offset = static_cast<double>(b) * extent;
            for (std::size_t i = 0; i + 1 < axis.size(); ++i) out.push_back(offset + axis[i]);
        }
        out.push_back(static_cast<double>(count) * extent);
        return out;
    };

    TensorGrid grid;
    grid.x = concat(block.grid.x, cols, pitch_x);
    grid.y = concat(block.grid.y, rows, pitch_y);
    grid.z = block.grid.z;

    const std::size_t bx = block.grid.cells_x(), by = block.grid.cells_y();
    auto classify = [&](std::size_t i, std::size_t j, std::size_t k) {
        std::size_t col = i / bx, row = j / by;
        BlockKind kind = kinds.empty() ? BlockKind::Tsv : kinds[row * cols + col];
        if (kind == BlockKind::Dummy) return MaterialId::Silicon;
        return block.element_material[block.cell_id(i % bx, j % by, k)];
    };
    return build_structured_mesh(std::move(grid), classify);
}

void write_vtk(const HexMesh& mesh, const std::string& path, std::span<const double> displacement) {
    if (!displacement.empty() && displacement.size() != mesh.dof_count())
        throw Error("write_vtk: displacement length must be 3 x node count");
    std::ofstream out(path);
    if (!out) throw Error("write_vtk: cannot open " + path);
    out.precision(17);
    out << "# vtk DataFile Version 3.0\n";
    out << "hexahedral mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.node_count() << " double\n";
    for (const auto& n : mesh.nodes) out << n[0] << " " << n[1] << " " << n[2] << "\n";
    out << "CELLS " << mesh.element_count() << " " << mesh.element_count() * 9 << "\n";
    for (const auto& e : mesh.elements) {
        out << 8;
        for (auto id : e) out << " " << id;
        out << "\n";
    }
    out << "CELL_TYPES " << mesh.element_count() << "\n";
    for (std::size_t i = 0; i < mesh.element_count(); ++i) out << 12 << "\n";
    out << "CELL_DATA " << mesh.element_count() << "\n";
    out << "SCALARS material int 1\nLOOKUP_TABLE default\n";
    for (MaterialId m : mesh.element_material) out << static_cast<int>(m) << "\n";
    if (!displacement.empty()) {
        out << "POINT_DATA " << mesh.node_count() << "\n";
        out << "VECTORS displacement double\n";
        for (std::size_t n = 0; n < mesh.node_count(); ++n)
            out << displacement[3 * n] << " " << displacement[3 * n + 1] << " "
                << displacement[3 * n + 2] << "\n";
    }
    if (!out) throw Error("write_vtk: write failed for " + path);
}

}  // namespace tsvstress
