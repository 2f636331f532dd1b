#pragma once

#include <string>
#include <vector>

#include "tsvstress/config.hpp"

namespace tsvstress::cli {

/// Builds and saves the ROMs the configured run needs (tsv, plus dummy
/// when the layout or sub-model padding uses dummy blocks). Prints the
/// reduced DoF count and the stage wall time.
int cmd_local(const config::RunConfig& cfg);

/// Global stage end to end: load ROMs, assemble, solve, sample the cut
/// plane, write the CSV (and optional VTK), append a run-log line.
int cmd_solve(const config::RunConfig& cfg);

/// Full fine-mesh reference run with the same outputs.
int cmd_reference(const config::RunConfig& cfg);

/// Linear superposition baseline with the same outputs.
int cmd_superpose(const config::RunConfig& cfg);

struct CompareArgs {
    std::string grid_a;
    std::string grid_b;  // ground truth
    std::string json_out;
    std::string log_a;
    std::string log_b;
};
int cmd_compare(const CompareArgs& args);

int cmd_render(const std::string& grid_csv, const std::string& image_path);

/// Entry point behind main(): parses subcommands, maps errors to exit
/// code 1 with a message on stderr.
int run(int argc, const char* const* argv);

}  // namespace tsvstress::cli
