#include "tsvstress/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "tsvstress/image.hpp"
#include "tsvstress/runlog.hpp"

namespace tsvstress::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool needs_dummy(const global::ArrayLayout& layout) {
    for (std::uint32_t r = 0; r < layout.rows; ++r)
        for (std::uint32_t c = 0; c < layout.cols; ++c)
            if (layout.kind_at(r, c) == BlockKind::Dummy) return true;
    return false;
}

global::RomSet load_roms(const config::RunConfig& cfg, const global::ArrayLayout& layout) {
    global::RomSet roms;
    bool want_dummy = needs_dummy(layout);
    bool want_tsv = false;
    for (std::uint32_t r = 0; r < layout.rows && !want_tsv; ++r)
        for (std::uint32_t c = 0; c < layout.cols && !want_tsv; ++c)
            want_tsv = layout.kind_at(r, c) == BlockKind::Tsv;

    Hash256 expected = cfg.rom_fingerprint();
    auto check = [&](const rom::ReducedOrderModel& m, const std::string& path) {
        if (m.fingerprint != expected)
            throw Error("ROM " + path + " was built for a different configuration (fingerprint " +
                        hash_hex(m.fingerprint) + ", config expects " + hash_hex(expected) + ")");
    };
    if (want_tsv) {
        roms.tsv = rom::load_rom(cfg.rom_tsv);
        check(*roms.tsv, cfg.rom_tsv);
    }
    if (want_dummy) {
        roms.dummy = rom::load_rom(cfg.rom_dummy);
        check(*roms.dummy, cfg.rom_dummy);
    }
    return roms;
}

void maybe_write_vtk(const config::RunConfig& cfg, const StressGrid& grid) {
    if (!cfg.out_vtk.empty()) grid.save_vtk(cfg.out_vtk);
}

}  // namespace

int cmd_local(const config::RunConfig& cfg) {
    auto t0 = Clock::now();
    TensorGrid grid = cfg.grid();
    rom::NodeLayout layout = cfg.node_layout();
    global::ArrayLayout effective = cfg.effective_layout();

    std::printf("n = %zu\n", rom::num_element_dofs(cfg.interp_nx, cfg.interp_ny, cfg.interp_nz));

    HexMesh tsv_mesh = build_unit_block_mesh(cfg.geometry, grid);
    rom::ReducedOrderModel tsv =
        rom::build_rom(cfg.geometry, tsv_mesh, cfg.materials, layout, BlockKind::Tsv, cfg.threads);
    rom::save_rom(tsv, cfg.rom_tsv);
    std::printf("wrote %s\n", cfg.rom_tsv.c_str());

    if (needs_dummy(effective)) {
        HexMesh dummy_mesh = build_dummy_block_mesh(cfg.geometry, grid);
        rom::ReducedOrderModel dummy = rom::build_rom(cfg.geometry, dummy_mesh, cfg.materials,
                                                      layout, BlockKind::Dummy, cfg.threads);
        rom::save_rom(dummy, cfg.rom_dummy);
        std::printf("wrote %s\n", cfg.rom_dummy.c_str());
    }

    double wall = seconds_since(t0);
    std::printf("local stage: %.3f s\n", wall);
    append_run_log(cfg.run_log, {"local", wall, peak_rss_bytes(), tsv.fine_dofs(), 0});
    return 0;
}

int cmd_solve(const config::RunConfig& cfg) {
    global::ArrayLayout layout = cfg.effective_layout();
    global::RomSet roms = load_roms(cfg, layout);
    global::GlobalBC bc = cfg.boundary_condition();

    auto t0 = Clock::now();
    rom::NodeLayout nl = roms.any().layout;
    global::GlobalIndex index = global::index_global_nodes(layout, nl);
    global::GlobalSystem sys = global::assemble_global(roms, layout, index);
    sys = global::apply_global_bcs(std::move(sys), bc, index, layout);
    global::GlobalSolution sol = global::solve_global(sys, cfg.solver);
    global::BlockMeshes meshes = global::BlockMeshes::from(roms);
    StressGrid grid =
        global::cutplane_von_mises(sol, layout, roms, index, meshes, cfg.grid_res, cfg.threads);
    double wall = seconds_since(t0);

    grid.save_csv(cfg.out_csv);
    maybe_write_vtk(cfg, grid);
    std::printf("reduced dofs = %zu, iterations = %d, residual = %.3e%s\n", index.dof_count(),
                sol.iterations, sol.relative_residual, sol.direct_fallback ? " (direct fallback)" : "");
    std::printf("global stage: %.3f s, wrote %s\n", wall, cfg.out_csv.c_str());
    append_run_log(cfg.run_log, {"solve", wall, peak_rss_bytes(), index.dof_count(), sol.iterations});
    return 0;
}

int cmd_reference(const config::RunConfig& cfg) {
    global::ArrayLayout layout = cfg.effective_layout();
    global::GlobalBC bc = cfg.boundary_condition();
    TensorGrid grid_lines = cfg.grid();
    HexMesh tsv_block = build_unit_block_mesh(cfg.geometry, grid_lines);

    baseline::ReferenceOptions opts;
    opts.dof_cap = cfg.dof_cap;
    opts.iter.tolerance = cfg.solver.tolerance;
    opts.iter.max_iterations = cfg.solver.max_iterations;
    opts.res = cfg.grid_res;
    opts.threads = cfg.threads;

    auto t0 = Clock::now();
    baseline::ReferenceSolution sol = baseline::reference_solve(layout, bc, tsv_block, cfg.materials, opts);
    StressGrid grid =
        baseline::reference_cutplane(sol, layout, cfg.materials, cfg.grid_res, cfg.threads);
    double wall = seconds_since(t0);

    grid.save_csv(cfg.out_csv);
    maybe_write_vtk(cfg, grid);
    std::printf("fine dofs = %zu, iterations = %d, residual = %.3e\n", sol.stats.dofs,
                sol.stats.iterations, sol.stats.relative_residual);
    std::printf("reference solve: %.3f s, wrote %s\n", wall, cfg.out_csv.c_str());
    append_run_log(cfg.run_log, {"reference", wall, peak_rss_bytes(), sol.stats.dofs,
                                 sol.stats.iterations});
    return 0;
}

int cmd_superpose(const config::RunConfig& cfg) {
    global::ArrayLayout layout = cfg.layout();
    TensorGrid grid_lines = cfg.grid();
    if (!layout.uniform_delta_t())
        throw Error("superpose: the layout thermal load must be uniform");
    double dt = layout.delta_t_at(0, 0);

    baseline::ReferenceOptions opts;
    opts.dof_cap = cfg.dof_cap;
    opts.iter.tolerance = cfg.solver.tolerance;
    opts.iter.max_iterations = cfg.solver.max_iterations;
    opts.res = cfg.grid_res;
    opts.threads = cfg.threads;

    auto t0 = Clock::now();
    Hash256 expected = baseline::superposition_fingerprint(cfg.geometry, grid_lines, cfg.materials,
                                                           cfg.superposition_halo, cfg.grid_res, dt);
    baseline::SuperpositionModel model;
    bool from_cache = false;
    if (!cfg.superposition_cache.empty() && std::ifstream(cfg.superposition_cache).good()) {
        model = baseline::SuperpositionModel::load(cfg.superposition_cache);
        if (model.fingerprint == expected) {
            from_cache = true;
        } else {
            std::fprintf(stderr, "superpose: cache %s belongs to another configuration; rebuilding\n",
                         cfg.superposition_cache.c_str());
        }
    }
    if (!from_cache) {
        model = baseline::superposition_single_solve(cfg.geometry, grid_lines, cfg.materials,
                                                     cfg.superposition_halo, dt, opts);
        if (!cfg.superposition_cache.empty()) model.save(cfg.superposition_cache);
    }
    StressGrid grid = baseline::superposition_field(model, layout);
    double wall = seconds_since(t0);

    grid.save_csv(cfg.out_csv);
    maybe_write_vtk(cfg, grid);
    std::printf("superposition (halo %u%s): %.3f s, wrote %s\n", model.halo,
                from_cache ? ", cached model" : "", wall, cfg.out_csv.c_str());
    append_run_log(cfg.run_log, {"superpose", wall, peak_rss_bytes(),
                                 static_cast<std::size_t>(layout.cell_count()) * cfg.grid_res * cfg.grid_res,
                                 0});
    return 0;
}

int cmd_compare(const CompareArgs& args) {
    StressGrid a = StressGrid::load_csv(args.grid_a);
    StressGrid b = StressGrid::load_csv(args.grid_b);
    double mae = baseline::normalized_mae(a, b);

    double max_err = 0.0;
    std::uint32_t mr = 0, mc = 0, mpy = 0, mpx = 0;
    for (std::uint32_t r = 0; r < a.rows; ++r)
        for (std::uint32_t c = 0; c < a.cols; ++c)
            for (std::uint32_t py = 0; py < a.res; ++py)
                for (std::uint32_t px = 0; px < a.res; ++px) {
                    double e = std::abs(a.at(r, c, py, px) - b.at(r, c, py, px));
                    if (e > max_err) {
                        max_err = e;
                        mr = r;
                        mc = c;
                        mpy = py;
                        mpx = px;
                    }
                }

    nlohmann::json report{
        {"normalized_mae", mae},
        {"max_abs_error", max_err},
        {"max_error_location",
         {{"block_row", mr},
          {"block_col", mc},
          {"px", mpx},
          {"py", mpy},
          {"x", static_cast<double>(mc) * b.pitch + b.local_coord(mpx)},
          {"y", static_cast<double>(mr) * b.pitch + b.local_coord(mpy)}}},
        {"a", nullptr},
        {"b", nullptr},
    };
    auto attach_log = [&](const std::string& path, const char* slot, const std::string& grid_path) {
        if (path.empty()) return;
        // the newest entry whose output the grid plausibly is: match by command = any
        auto entries = read_run_log(path);
        if (entries.empty()) return;
        const RunLogEntry& e = entries.back();
        report[slot] = {{"command", e.command},
                        {"wall_s", e.wall_s},
                        {"peak_mem_bytes", e.peak_mem_bytes},
                        {"dofs", e.dofs},
                        {"iterations", e.iterations},
                        {"grid", grid_path}};
    };
    attach_log(args.log_a, "a", args.grid_a);
    attach_log(args.log_b, "b", args.grid_b);

    std::printf("normalized MAE  : %.6e  (%.4f %%)\n", mae, mae * 100.0);
    std::printf("max abs error   : %.6e Pa at block (%u, %u), sample (%u, %u)\n", max_err, mr, mc,
                mpx, mpy);
    for (const char* slot : {"a", "b"}) {
        if (report[slot].is_null()) {
            std::printf("run stats %s     : (no run log given)\n", slot);
        } else {
            std::printf("run stats %s     : %s, %.3f s, peak %.1f MiB\n", slot,
                        report[slot]["command"].get<std::string>().c_str(),
                        report[slot]["wall_s"].get<double>(),
                        report[slot]["peak_mem_bytes"].get<double>() / (1024.0 * 1024.0));
        }
    }
    if (!args.json_out.empty()) {
        std::ofstream out(args.json_out);
        if (!out) throw Error("compare: cannot open " + args.json_out);
        out << report.dump(2) << "\n";
    }
    return 0;
}

int cmd_render(const std::string& grid_csv, const std::string& image_path) {
    StressGrid grid = StressGrid::load_csv(grid_csv);
    RenderInfo info = render_heatmap_png(grid, image_path);
    std::printf("rendered %ux%u px, von Mises range [%.6e, %.6e] Pa -> %s\n", info.width,
                info.height, info.min_value, info.max_value, image_path.c_str());
    return 0;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"thermal stress of TSV arrays via reduced-order unit blocks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    int threads_override = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_override, "override the output grid CSV path");
        sub->add_option("--threads", threads_override, "override the thread count");
    };

    CLI::App* local = app.add_subcommand("local", "one-shot local stage: build and save the ROMs");
    CLI::App* solve = app.add_subcommand("solve", "global stage on the configured array");
    CLI::App* reference = app.add_subcommand("reference", "full fine-mesh reference solve");
    CLI::App* superpose = app.add_subcommand("superpose", "linear superposition baseline");
    add_common(local);
    add_common(solve);
    add_common(reference);
    add_common(superpose);

    CompareArgs cargs;
    CLI::App* compare = app.add_subcommand("compare", "error metrics between two grid CSVs");
    compare->add_option("grid_a", cargs.grid_a, "grid to evaluate")->required();
    compare->add_option("grid_b", cargs.grid_b, "ground-truth grid")->required();
    compare->add_option("--json", cargs.json_out, "write the report as JSON");
    compare->add_option("--log-a", cargs.log_a, "run log for grid_a");
    compare->add_option("--log-b", cargs.log_b, "run log for grid_b");

    std::string render_csv, render_png;
    CLI::App* render = app.add_subcommand("render", "render a grid CSV as a PNG heatmap");
    render->add_option("grid", render_csv, "grid CSV")->required();
    render->add_option("image", render_png, "output PNG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (compare->parsed()) return cmd_compare(cargs);
        if (render->parsed()) return cmd_render(render_csv, render_png);

        config::RunConfig cfg = config::RunConfig::from_file(config_path);
        if (!out_override.empty()) cfg.out_csv = out_override;
        if (threads_override > 0) {
            cfg.threads = threads_override;
            cfg.solver.threads = threads_override;
        }
        if (local->parsed()) return cmd_local(cfg);
        if (solve->parsed()) return cmd_solve(cfg);
        if (reference->parsed()) return cmd_reference(cfg);
        if (superpose->parsed()) return cmd_superpose(cfg);
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace tsvstress::cli
