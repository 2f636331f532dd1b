#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "tsvstress/mesh.hpp"

using namespace tsvstress;

namespace {

UnitBlockGeometry default_geom() {
    UnitBlockGeometry g;
    g.d = 5e-6;
    g.h = 50e-6;
    g.t = 0.5e-6;
    g.p = 15e-6;
    return g;
}

double copper_liner_volume(const HexMesh& mesh) {
    double v = 0.0;
    const auto& g = mesh.grid;
    for (std::size_t k = 0; k < g.cells_z(); ++k)
        for (std::size_t j = 0; j < g.cells_y(); ++j)
            for (std::size_t i = 0; i < g.cells_x(); ++i) {
                MaterialId m = mesh.element_material[mesh.cell_id(i, j, k)];
                if (m == MaterialId::Silicon) continue;
                v += (g.x[i + 1] - g.x[i]) * (g.y[j + 1] - g.y[j]) * (g.z[k + 1] - g.z[k]);
            }
    return v;
}

}  // namespace

TEST_CASE("geometry invariants") {
    UnitBlockGeometry g = default_geom();
    CHECK_NOTHROW(g.validate());
    g.t = 0.0;
    CHECK_THROWS_AS(g.validate(), Error);
    g = default_geom();
    g.d = 14.5e-6;  // d + 2t >= p
    CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("default grading refines the liner annulus") {
    UnitBlockGeometry g = default_geom();
    TensorGrid grid = default_grading(g, 2e-6);

    // min spacing across the radial band [c - d/2 - t, c - d/2]
    double lo = 0.5 * g.p - 0.5 * g.d - g.t;
    double hi = 0.5 * g.p - 0.5 * g.d;
    double min_spacing = 1.0;
    for (std::size_t i = 0; i + 1 < grid.x.size(); ++i)
        if (grid.x[i + 1] > lo && grid.x[i] < hi)
            min_spacing = std::min(min_spacing, grid.x[i + 1] - grid.x[i]);
    CHECK(min_spacing <= 0.5e-6);
}

TEST_CASE("default grading is symmetric about the block center") {
    UnitBlockGeometry g = default_geom();
    TensorGrid grid = default_grading(g, 2e-6);
    const std::size_t n = grid.x.size();
    // the upper half mirrors the lower half exactly
    for (std::size_t i = 0; i < n / 2; ++i) CHECK(grid.x[n - 1 - i] == g.p - grid.x[i]);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(grid.x[i] + grid.x[n - 1 - i] == doctest::Approx(g.p).epsilon(1e-15));
    CHECK(grid.y == grid.x);
}

TEST_CASE("default grading stays valid when the target is below the liner thickness") {
    UnitBlockGeometry g = default_geom();
    TensorGrid grid = default_grading(g, 0.1e-6);
    CHECK_NOTHROW(grid.validate(g.p, g.p, g.h));
}

TEST_CASE("default grading rejects a non-positive target") {
    CHECK_THROWS_AS(default_grading(default_geom(), 0.0), Error);
    CHECK_THROWS_AS(default_grading(default_geom(), -1.0), Error);
}

TEST_CASE("centroid material classification") {
    UnitBlockGeometry g = default_geom();
    TensorGrid grid;
    grid.x = {0.0, 0.2 * g.p, g.p};
    grid.y = grid.x;
    grid.z = {0.0, g.h};
    HexMesh mesh = build_unit_block_mesh(g, grid);
    // centroid of cell (0,0) is far from the axis, cell (1,1) straddles it
    CHECK(mesh.element_material[mesh.cell_id(0, 0, 0)] == MaterialId::Silicon);
    CHECK(mesh.element_material[mesh.cell_id(1, 1, 0)] == MaterialId::Copper);
}

TEST_CASE("default-graded unit block contains all three materials") {
    UnitBlockGeometry g = default_geom();
    HexMesh mesh = build_unit_block_mesh(g, default_grading(g, 2e-6));
    std::size_t counts[3] = {0, 0, 0};
    for (MaterialId m : mesh.element_material) counts[static_cast<int>(m)]++;
    CHECK(counts[0] > 0);  // copper
    CHECK(counts[1] > 0);  // liner
    CHECK(counts[2] > 0);  // silicon
}

TEST_CASE("boundary tags follow the coordinates") {
    UnitBlockGeometry g = default_geom();
    HexMesh mesh = build_unit_block_mesh(g, default_grading(g, 5e-6));
    for (std::size_t n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[n];
        std::uint8_t expect = 0;
        if (p[0] == 0.0) expect |= face::x_min;
        if (p[0] == g.p) expect |= face::x_max;
        if (p[1] == 0.0) expect |= face::y_min;
        if (p[1] == g.p) expect |= face::y_max;
        if (p[2] == 0.0) expect |= face::z_min;
        if (p[2] == g.h) expect |= face::z_max;
        CHECK(mesh.node_boundary[n] == expect);
    }
}

TEST_CASE("replicate 1x1 is the identity") {
    UnitBlockGeometry g = default_geom();
    HexMesh block = build_unit_block_mesh(g, default_grading(g, 3e-6));
    HexMesh one = replicate_array_mesh(block, 1, 1, {});
    CHECK(one.node_count() == block.node_count());
    CHECK(one.element_count() == block.element_count());
    CHECK(one.element_material == block.element_material);
    CHECK(one.nodes == block.nodes);
}

TEST_CASE("replicate 2x1 merges the shared face") {
    UnitBlockGeometry g = default_geom();
    HexMesh block = build_unit_block_mesh(g, default_grading(g, 3e-6));
    HexMesh two = replicate_array_mesh(block, 1, 2, {});
    std::size_t face_nodes = block.grid.y.size() * block.grid.z.size();
    CHECK(two.node_count() == 2 * block.node_count() - face_nodes);
    CHECK(two.element_count() == 2 * block.element_count());
}

TEST_CASE("replicate all-dummy turns every element silicon") {
    UnitBlockGeometry g = default_geom();
    HexMesh block = build_unit_block_mesh(g, default_grading(g, 3e-6));
    std::vector<BlockKind> kinds(4, BlockKind::Dummy);
    HexMesh arr = replicate_array_mesh(block, 2, 2, kinds);
    for (MaterialId m : arr.element_material) CHECK(m == MaterialId::Silicon);
}

TEST_CASE("replicate rejects bad inputs") {
    UnitBlockGeometry g = default_geom();
    HexMesh block = build_unit_block_mesh(g, default_grading(g, 5e-6));
    CHECK_THROWS_AS(replicate_array_mesh(block, 0, 1, {}), Error);
    std::vector<BlockKind> kinds(3, BlockKind::Tsv);
    CHECK_THROWS_AS(replicate_array_mesh(block, 2, 2, kinds), Error);
}

TEST_CASE("merged array mesh is watertight") {
    UnitBlockGeometry g = default_geom();
    HexMesh block = build_unit_block_mesh(g, default_grading(g, 6e-6));
    HexMesh arr = replicate_array_mesh(block, 2, 2, {});

    // every interior face must be shared by exactly two hexahedra
    static const int faces[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                    {2, 3, 7, 6}, {0, 3, 7, 4}, {1, 2, 6, 5}};
    std::map<std::array<std::uint32_t, 4>, int> count;
    for (const auto& e : arr.elements)
        for (const auto& f : faces) {
            std::array<std::uint32_t, 4> key = {e[f[0]], e[f[1]], e[f[2]], e[f[3]]};
            std::sort(key.begin(), key.end());
            count[key]++;
        }
    std::size_t boundary_faces = 0;
    for (const auto& [key, c] : count) {
        CHECK(c <= 2);
        if (c == 1) ++boundary_faces;
    }
    const auto& gr = arr.grid;
    std::size_t expect_boundary = 2 * gr.cells_x() * gr.cells_y() +
                                  2 * gr.cells_y() * gr.cells_z() +
                                  2 * gr.cells_x() * gr.cells_z();
    CHECK(boundary_faces == expect_boundary);
}

TEST_CASE("copper+liner volume approaches the analytic cylinder volume") {
    UnitBlockGeometry g = default_geom();
    double r_out = 0.5 * g.d + g.t;
    double analytic = M_PI * r_out * r_out * g.h;
    auto volume_error = [&](double target) {
        HexMesh mesh = build_unit_block_mesh(g, default_grading(g, target));
        return std::abs(copper_liner_volume(mesh) - analytic) / analytic;
    };

    double err_default = volume_error(2e-6);
    CHECK(err_default < 0.10);
    // halving the target improves the staircase error, and every finer
    // level stays below the default's error
    double err_half = volume_error(1e-6);
    CHECK(err_half < err_default);
    for (double target : {0.5e-6, 0.25e-6}) CHECK(volume_error(target) < err_default);
}

TEST_CASE("mesh generation is deterministic") {
    UnitBlockGeometry g = default_geom();
    HexMesh a = build_unit_block_mesh(g, default_grading(g, 2e-6));
    HexMesh b = build_unit_block_mesh(g, default_grading(g, 2e-6));
    CHECK(a.nodes == b.nodes);
    CHECK(a.elements == b.elements);
    CHECK(a.element_material == b.element_material);
    CHECK(a.node_boundary == b.node_boundary);
}

TEST_CASE("find_cell resolves grid-plane ties to the lower cell") {
    UnitBlockGeometry g = default_geom();
    TensorGrid grid;
    grid.x = {0.0, 7.5e-6, 15e-6};
    grid.y = grid.x;
    grid.z = {0.0, 25e-6, 50e-6};
    HexMesh mesh = build_unit_block_mesh(g, grid);

    auto cell = mesh.find_cell({7.5e-6, 1e-6, 1e-6});
    CHECK(cell[0] == 0);  // on the shared plane: lower cell
    cell = mesh.find_cell({8e-6, 1e-6, 1e-6});
    CHECK(cell[0] == 1);
    cell = mesh.find_cell({15e-6, 15e-6, 50e-6});
    CHECK(cell == std::array<std::size_t, 3>{1, 1, 1});
    CHECK_THROWS_AS(mesh.find_cell({-1e-9, 0.0, 0.0}), Error);
    CHECK_THROWS_AS(mesh.find_cell({0.0, 0.0, 51e-6}), Error);
}

TEST_CASE("vtk export writes a legacy unstructured grid") {
    UnitBlockGeometry g = default_geom();
    HexMesh mesh = build_unit_block_mesh(g, default_grading(g, 6e-6));
    std::string path = "/tmp/tsvstress_test_mesh.vtk";
    write_vtk(mesh, path);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == "# vtk DataFile Version 3.0");
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(all.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(all.find("CELL_TYPES") != std::string::npos);
    std::remove(path.c_str());
}
