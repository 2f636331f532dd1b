// Acceptance suite: runs every acceptance criterion end to end and prints
// one pass/fail line per criterion. Criteria 7 and 9 exercise the CLI
// binary (path passed as argv[1]) through its run logs and output files.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsvstress/baseline.hpp"
#include "tsvstress/cli.hpp"
#include "tsvstress/runlog.hpp"

using namespace tsvstress;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& body) {
    try {
        auto [pass, detail] = body();
        report(id, name, pass, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

constexpr double kDeltaT = -250.0;
constexpr double kGridTarget = 3e-6;
constexpr int kThreads = 2;

UnitBlockGeometry geometry(double pitch) {
    UnitBlockGeometry g;
    g.d = 5e-6;
    g.h = 50e-6;
    g.t = 0.5e-6;
    g.p = pitch;
    return g;
}

global::ArrayLayout layout_of(const UnitBlockGeometry& g, std::uint32_t rows, std::uint32_t cols,
                              double dt = kDeltaT) {
    global::ArrayLayout l;
    l.rows = rows;
    l.cols = cols;
    l.pitch = g.p;
    l.height = g.h;
    l.delta_t = {dt};
    return l;
}

/// Everything derived from one pitch, built lazily and shared by criteria.
struct PitchArtifacts {
    UnitBlockGeometry geom;
    MaterialTable mats = MaterialTable::defaults();
    TensorGrid grid;
    HexMesh tsv_mesh;
    HexMesh dummy_mesh;
    std::map<std::uint32_t, rom::ReducedOrderModel> tsv_roms;   // by layout order
    std::map<std::uint32_t, rom::ReducedOrderModel> dummy_roms;

    explicit PitchArtifacts(double pitch) : geom(geometry(pitch)) {
        grid = default_grading(geom, kGridTarget);
        tsv_mesh = build_unit_block_mesh(geom, grid);
        dummy_mesh = build_dummy_block_mesh(geom, grid);
    }

    const rom::ReducedOrderModel& tsv_rom(std::uint32_t order) {
        auto it = tsv_roms.find(order);
        if (it == tsv_roms.end()) {
            rom::NodeLayout nl = rom::NodeLayout::create(order, order, order, geom.p, geom.p, geom.h);
            it = tsv_roms.emplace(order, rom::build_rom(geom, tsv_mesh, mats, nl, BlockKind::Tsv,
                                                        kThreads)).first;
        }
        return it->second;
    }

    const rom::ReducedOrderModel& dummy_rom(std::uint32_t order) {
        auto it = dummy_roms.find(order);
        if (it == dummy_roms.end()) {
            rom::NodeLayout nl = rom::NodeLayout::create(order, order, order, geom.p, geom.p, geom.h);
            it = dummy_roms.emplace(order, rom::build_rom(geom, dummy_mesh, mats, nl,
                                                          BlockKind::Dummy, kThreads)).first;
        }
        return it->second;
    }

    /// Reduced-model pipeline on a layout; returns the cut-plane grid.
    StressGrid solve_mor(const global::ArrayLayout& layout, std::uint32_t order,
                         const global::GlobalBC& bc, double tol = 1e-10) {
        global::RomSet roms;
        bool tsv_cells = false, dummy_cells = false;
        for (std::uint32_t r = 0; r < layout.rows; ++r)
            for (std::uint32_t c = 0; c < layout.cols; ++c)
                (layout.kind_at(r, c) == BlockKind::Tsv ? tsv_cells : dummy_cells) = true;
        if (tsv_cells) roms.tsv = tsv_rom(order);
        if (dummy_cells) roms.dummy = dummy_rom(order);

        rom::NodeLayout nl = roms.any().layout;
        global::GlobalIndex index = global::index_global_nodes(layout, nl);
        global::GlobalSystem sys = global::assemble_global(roms, layout, index);
        sys = global::apply_global_bcs(std::move(sys), bc, index, layout);
        linalg::IterOptions opts;
        opts.tolerance = tol;
        opts.threads = kThreads;
        global::GlobalSolution sol = global::solve_global(sys, opts);
        global::BlockMeshes meshes = global::BlockMeshes::from(roms);
        return global::cutplane_von_mises(sol, layout, roms, index, meshes, 100, kThreads);
    }

    StressGrid solve_reference(const global::ArrayLayout& layout, const global::GlobalBC& bc) {
        baseline::ReferenceOptions opts;
        opts.threads = kThreads;
        baseline::ReferenceSolution sol = baseline::reference_solve(layout, bc, tsv_mesh, mats, opts);
        return baseline::reference_cutplane(sol, layout, mats, 100, kThreads);
    }
};

std::string percent(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f%%", 100.0 * x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& cli, const std::string& dir, const std::string& args) {
    std::string cmd = "cd " + dir + " && " + cli + " " + args + " >> cli_output.txt 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? fs::absolute(argv[1]).string() : "";
    fs::path scratch = fs::temp_directory_path() / "tsvstress_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    PitchArtifacts p15(15e-6);
    PitchArtifacts p10(10e-6);

    // ------------------------------------------------------------------
    criterion(1, "reduced DoF counts for cubic node layouts", [&] {
        bool ok = rom::num_element_dofs(2, 2, 2) == 24 && rom::num_element_dofs(3, 3, 3) == 78 &&
                  rom::num_element_dofs(4, 4, 4) == 168 && rom::num_element_dofs(5, 5, 5) == 294 &&
                  rom::num_element_dofs(6, 6, 6) == 456;
        return std::pair(ok, std::string("{24, 78, 168, 294, 456}"));
    });

    // ------------------------------------------------------------------
    criterion(2, "single-block exactness: fully prescribed reduced DoFs", [&] {
        const std::uint32_t order = 4;
        const rom::ReducedOrderModel& model = p15.tsv_rom(order);
        global::ArrayLayout layout = layout_of(p15.geom, 1, 1);
        global::GlobalIndex index = global::index_global_nodes(layout, model.layout);

        std::mt19937 rng(42);
        std::uniform_real_distribution<double> dist(-1e-8, 1e-8);
        std::vector<double> reduced(index.dof_count());
        for (double& v : reduced) v = dist(rng);

        global::GlobalSolution sol;
        sol.u = reduced;
        global::RomSet roms;
        roms.tsv = model;
        global::BlockMeshes meshes = global::BlockMeshes::from(roms);
        StressGrid mor = global::cutplane_von_mises(sol, layout, roms, index, meshes, 100, kThreads);

        baseline::ReferenceOptions opts;
        opts.direct = true;  // both routes at direct-solver tolerance
        opts.threads = kThreads;
        baseline::ReferenceSolution ref = baseline::reference_solve_prescribed(
            layout, reduced, model.layout, index, p15.tsv_mesh, p15.mats, opts);
        StressGrid ref_grid = baseline::reference_cutplane(ref, layout, p15.mats, 100, kThreads);

        double mae = baseline::normalized_mae(mor, ref_grid);
        return std::pair(mae <= 1e-9, "normalized MAE = " + std::to_string(mae));
    });

    // ------------------------------------------------------------------
    criterion(3, "thermal patch test: all-dummy array under an affine sub-model field", [&] {
        const Material& si = p15.mats[MaterialId::Silicon];
        global::ArrayLayout layout = layout_of(p15.geom, 3, 3);
        layout.kinds.assign(9, BlockKind::Dummy);
        double eps = si.thermal_expansion * kDeltaT;
        double w = 3 * p15.geom.p;
        SubmodelBoundaryField field = SubmodelBoundaryField::affine(
            {-1e-6, -1e-6, -1e-6}, {w + 1e-6, w + 1e-6, p15.geom.h + 1e-6},
            {{{eps, 0, 0}, {0, eps, 0}, {0, 0, eps}}}, {0.5 * w, 0.5 * w, 0.5 * p15.geom.h});

        StressGrid grid = p15.solve_mor(layout, 4, global::GlobalBC::submodel(field), 1e-12);
        double peak = 0.0;
        for (double v : grid.values) peak = std::max(peak, v);
        double scale = std::abs(si.thermal_expansion *
                                (3 * si.lame_lambda + 2 * si.lame_mu) * kDeltaT);
        return std::pair(peak <= 1e-6 * scale,
                         "max von Mises = " + std::to_string(peak) + " Pa vs bound " +
                             std::to_string(1e-6 * scale) + " Pa");
    });

    // ------------------------------------------------------------------
    StressGrid ref15;   // shared 4x4 p = 15 um reference grid
    double mor15_err4 = -1.0;
    criterion(4, "convergence: error decreases with interpolation order, <= 3% at (4,4,4)", [&] {
        global::ArrayLayout layout = layout_of(p15.geom, 4, 4);
        ref15 = p15.solve_reference(layout, global::GlobalBC::clamped());

        std::vector<double> errors;
        std::string detail;
        for (std::uint32_t order : {2u, 3u, 4u, 5u}) {
            StressGrid mor = p15.solve_mor(layout, order, global::GlobalBC::clamped());
            errors.push_back(baseline::normalized_mae(mor, ref15));
            detail += "(" + std::to_string(order) + ")=" + percent(errors.back()) + " ";
        }
        mor15_err4 = errors[2];
        bool decreasing = errors[1] < errors[0] && errors[2] < errors[1] && errors[3] < errors[2];
        bool small_enough = errors[2] <= 0.03;
        detail += decreasing ? "| strictly decreasing" : "| NOT DECREASING";
        detail += small_enough ? ", (4,4,4) within the 3% bound"
                               : ", (4,4,4) exceeds the 3% bound";
        return std::pair(decreasing && small_enough, detail);
    });

    // ------------------------------------------------------------------
    // Criteria 5 and 6 fix the 4x4 desk case and the pitches but not the
    // interpolation layout; the reduced model runs at its desk-scale
    // converged point (7,7,7). At (4,4,4) the tiny array is dominated by
    // its boundary ring, which the convergence criterion above measures.
    const std::uint32_t kDeskOrder = 7;
    StressGrid ref10;
    double mor10_err = -1.0, sup10_err = -1.0;
    criterion(5, "reduced model beats linear superposition by 3x at p = 10 um", [&] {
        global::ArrayLayout layout = layout_of(p10.geom, 4, 4);
        ref10 = p10.solve_reference(layout, global::GlobalBC::clamped());
        StressGrid mor = p10.solve_mor(layout, kDeskOrder, global::GlobalBC::clamped());
        mor10_err = baseline::normalized_mae(mor, ref10);

        baseline::ReferenceOptions opts;
        opts.threads = kThreads;
        baseline::SuperpositionModel model =
            baseline::superposition_single_solve(p10.geom, p10.grid, p10.mats, 2, kDeltaT, opts);
        StressGrid sup = baseline::superposition_field(model, layout);
        sup10_err = baseline::normalized_mae(sup, ref10);

        return std::pair(3.0 * mor10_err <= sup10_err,
                         "mor(7,7,7) = " + percent(mor10_err) + ", superposition = " +
                             percent(sup10_err));
    });

    // ------------------------------------------------------------------
    criterion(6, "pitch sensitivity: superposition degrades at small pitch, reduced model holds", [&] {
        if (ref15.values.empty() || ref10.values.empty() || sup10_err < 0)
            return std::pair(false, std::string("prerequisite grids missing"));
        global::ArrayLayout layout15 = layout_of(p15.geom, 4, 4);
        baseline::ReferenceOptions opts;
        opts.threads = kThreads;
        baseline::SuperpositionModel model =
            baseline::superposition_single_solve(p15.geom, p15.grid, p15.mats, 2, kDeltaT, opts);
        StressGrid sup15 = baseline::superposition_field(model, layout15);
        double sup15_err = baseline::normalized_mae(sup15, ref15);

        StressGrid mor15 = p15.solve_mor(layout15, kDeskOrder, global::GlobalBC::clamped());
        double mor15_err = baseline::normalized_mae(mor15, ref15);

        bool sup_trend = sup10_err > sup15_err;
        bool mor_stable = std::abs(mor10_err - mor15_err) < 0.01;
        return std::pair(sup_trend && mor_stable,
                         "superposition " + percent(sup15_err) + " -> " + percent(sup10_err) +
                             ", mor(7,7,7) " + percent(mor15_err) + " -> " + percent(mor10_err));
    });

    // ------------------------------------------------------------------
    criterion(7, "global stage is >= 10x faster and >= 5x leaner than the reference on 8x8", [&] {
        if (cli.empty()) return std::pair(false, std::string("CLI path not provided"));
        fs::path dir = scratch / "perf";
        fs::create_directories(dir);
        std::ofstream conf(dir / "run.conf");
        conf << "geometry.p = 15e-6\ngrid.target = 4e-6\n"
             << "layout.rows = 8\nlayout.cols = 8\nlayout.delta_t = -250\n"
             << "interpolation.nx = 4\ninterpolation.ny = 4\ninterpolation.nz = 4\n"
             << "threads = " << kThreads << "\n"
             << "output.run_log = log.jsonl\n";
        conf.close();

        if (run_cli(cli, dir.string(), "local --config run.conf") != 0)
            return std::pair(false, std::string("local stage failed"));
        if (read_file((dir / "cli_output.txt").string()).find("n = 168") == std::string::npos)
            return std::pair(false, std::string("local stage did not report n = 168"));
        if (run_cli(cli, dir.string(), "solve --config run.conf --out mor.csv") != 0)
            return std::pair(false, std::string("solve failed"));
        if (run_cli(cli, dir.string(), "reference --config run.conf --out ref.csv") != 0)
            return std::pair(false, std::string("reference failed"));

        auto solve_log = last_run_log_entry((dir / "log.jsonl").string(), "solve");
        auto ref_log = last_run_log_entry((dir / "log.jsonl").string(), "reference");
        if (!solve_log || !ref_log) return std::pair(false, std::string("run log incomplete"));

        double time_ratio = ref_log->wall_s / solve_log->wall_s;
        double mem_ratio = static_cast<double>(ref_log->peak_mem_bytes) /
                           static_cast<double>(solve_log->peak_mem_bytes);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "time %.2fs vs %.2fs (%.1fx), memory %.0f MiB vs %.0f MiB (%.1fx)",
                      ref_log->wall_s, solve_log->wall_s, time_ratio,
                      ref_log->peak_mem_bytes / 1048576.0, solve_log->peak_mem_bytes / 1048576.0,
                      mem_ratio);
        return std::pair(time_ratio >= 10.0 && mem_ratio >= 5.0, std::string(buf));
    });

    // ------------------------------------------------------------------
    criterion(8, "Galerkin orthogonality, symmetry, PSD, and rigid nullspace of both models", [&] {
        std::string detail;
        bool ok = true;
        for (bool dummy : {false, true}) {
            const rom::ReducedOrderModel& model = dummy ? p15.dummy_rom(4) : p15.tsv_rom(4);
            const HexMesh& mesh = dummy ? p15.dummy_mesh : p15.tsv_mesh;
            auto [a_local, b_unit] = fem::assemble(mesh, p15.mats, {}, kThreads);
            const std::size_t n = model.reduced_dofs();

            double a_norm = 0.0;
            for (double v : a_local.values()) a_norm = std::max(a_norm, std::abs(v));

            // a(f_T, f_i) = 0 up to solver roundoff
            std::vector<double> a_thermal = linalg::spmv(a_local, model.thermal, kThreads);
            double t_norm = linalg::norm2(model.thermal);
            double worst_ortho = 0.0;
            std::vector<double> col(model.fine_dofs());
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t d = 0; d < col.size(); ++d) col[d] = model.basis.at(d, i);
                double bound = a_norm * linalg::norm2(col) * std::max(t_norm, 1e-300);
                worst_ortho = std::max(worst_ortho, std::abs(linalg::dot(col, a_thermal)) / bound);
            }
            ok &= worst_ortho <= 1e-9;

            double scale = 0.0, asym = 0.0;
            for (double v : model.a_element.values()) scale = std::max(scale, std::abs(v));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    asym = std::max(asym,
                                    std::abs(model.a_element.at(i, j) - model.a_element.at(j, i)));
            ok &= asym <= 1e-10 * scale;

            Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        model.a_element.at(i, j);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
            double lam_min = eig.eigenvalues().minCoeff();
            double lam_max = eig.eigenvalues().maxCoeff();
            ok &= lam_min >= -1e-9 * lam_max;

            double worst_null = 0.0;
            for (int comp = 0; comp < 3; ++comp) {
                std::vector<double> e(n, 0.0);
                for (std::size_t node = 0; node < n / 3; ++node) e[3 * node + comp] = 1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += model.a_element.at(i, j) * e[j];
                    worst_null = std::max(worst_null, std::abs(acc) / scale);
                }
            }
            ok &= worst_null <= 1e-9;

            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s: ortho %.1e, asym %.1e, eig_min/max %.1e, null %.1e; ",
                          dummy ? "dummy" : "tsv", worst_ortho, asym / std::max(scale, 1e-300),
                          lam_min / lam_max, worst_null);
            detail += buf;
        }
        return std::pair(ok, detail);
    });

    // ------------------------------------------------------------------
    criterion(9, "determinism: identical CSV at 1 thread, <= 1e-12 drift across thread counts", [&] {
        if (cli.empty()) return std::pair(false, std::string("CLI path not provided"));
        fs::path dir = scratch / "determinism";
        fs::create_directories(dir);
        std::ofstream conf(dir / "run.conf");
        conf << "geometry.p = 15e-6\ngrid.target = 3e-6\n"
             << "layout.rows = 2\nlayout.cols = 2\nlayout.delta_t = -250\n"
             << "interpolation.nx = 4\ninterpolation.ny = 4\ninterpolation.nz = 4\n"
             << "threads = 1\noutput.run_log = log.jsonl\n";
        conf.close();

        if (run_cli(cli, dir.string(), "local --config run.conf") != 0)
            return std::pair(false, std::string("local stage failed"));
        if (run_cli(cli, dir.string(), "solve --config run.conf --out a.csv") != 0 ||
            run_cli(cli, dir.string(), "solve --config run.conf --out b.csv") != 0 ||
            run_cli(cli, dir.string(), "solve --config run.conf --out c.csv --threads 8") != 0)
            return std::pair(false, std::string("solve failed"));

        std::string a = read_file((dir / "a.csv").string());
        std::string b = read_file((dir / "b.csv").string());
        if (a.empty() || a != b) return std::pair(false, std::string("single-thread reruns differ"));

        StressGrid ga = StressGrid::load_csv((dir / "a.csv").string());
        StressGrid gc = StressGrid::load_csv((dir / "c.csv").string());
        double peak = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < ga.values.size(); ++i) {
            peak = std::max(peak, std::abs(ga.values[i]));
            diff = std::max(diff, std::abs(ga.values[i] - gc.values[i]));
        }
        double rel = diff / peak;
        return std::pair(rel <= 1e-12,
                         "rerun identical, 1-vs-8-thread drift = " + std::to_string(rel));
    });

    // ------------------------------------------------------------------
    criterion(10, "model persistence: bitwise round trip, corrupt and wrong-version rejected", [&] {
        const rom::ReducedOrderModel& model = p15.tsv_rom(2);
        fs::path path = scratch / "model.rom";
        rom::save_rom(model, path.string());
        rom::ReducedOrderModel loaded = rom::load_rom(path.string());
        bool round_trip = loaded.basis.values() == model.basis.values() &&
                          loaded.thermal == model.thermal &&
                          loaded.a_element.values() == model.a_element.values() &&
                          loaded.b_element == model.b_element &&
                          loaded.fingerprint == model.fingerprint && loaded.kind == model.kind;

        std::string bytes = read_file(path.string());
        fs::path cut = scratch / "cut.rom";
        {
            std::ofstream out(cut, std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        }
        bool corrupt_rejected = false;
        try {
            rom::load_rom(cut.string());
        } catch (const Error& e) {
            corrupt_rejected = std::string(e.what()).find("corrupt length") != std::string::npos;
        }

        fs::path wrong = scratch / "wrong_version.rom";
        {
            std::string copy = bytes;
            copy[4] = 3;  // version u32 low byte
            std::ofstream out(wrong, std::ios::binary);
            out.write(copy.data(), static_cast<std::streamsize>(copy.size()));
        }
        bool version_rejected = false;
        try {
            rom::load_rom(wrong.string());
        } catch (const Error& e) {
            version_rejected = std::string(e.what()).find("version") != std::string::npos;
        }

        bool ok = round_trip && corrupt_rejected && version_rejected;
        return std::pair(ok, std::string(round_trip ? "round trip bitwise" : "ROUND TRIP BROKEN") +
                                 (corrupt_rejected ? ", truncation rejected" : ", TRUNCATION ACCEPTED") +
                                 (version_rejected ? ", bad version rejected" : ", BAD VERSION ACCEPTED"));
    });

    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
