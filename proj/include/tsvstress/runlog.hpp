#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsvstress/core.hpp"

namespace tsvstress {

/// One JSON-lines record per command invocation.
struct RunLogEntry {
    std::string command;
    double wall_s = 0.0;
    std::size_t peak_mem_bytes = 0;
    std::size_t dofs = 0;
    int iterations = 0;
};

void append_run_log(const std::string& path, const RunLogEntry& entry);
std::vector<RunLogEntry> read_run_log(const std::string& path);

/// Most recent entry for a command, if any.
std::optional<RunLogEntry> last_run_log_entry(const std::string& path, const std::string& command);

}  // namespace tsvstress
