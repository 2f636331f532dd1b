#include "tsvstress/runlog.hpp"

#include <json.hpp>

#include <fstream>

namespace tsvstress {

void append_run_log(const std::string& path, const RunLogEntry& entry) {
    nlohmann::json j{{"command", entry.command},
                     {"wall_s", entry.wall_s},
                     {"peak_mem_bytes", entry.peak_mem_bytes},
                     {"dofs", entry.dofs},
                     {"iterations", entry.iterations}};
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("run log: cannot open " + path);
    out << j.dump() << "\n";
    if (!out) throw Error("run log: write failed for " + path);
}

std::vector<RunLogEntry> read_run_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("run log: cannot open " + path);
    std::vector<RunLogEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error("run log: " + path + ": malformed JSON on line " + std::to_string(line_no));
        RunLogEntry e;
        e.command = j.value("command", "");
        e.wall_s = j.value("wall_s", 0.0);
        e.peak_mem_bytes = j.value("peak_mem_bytes", std::size_t{0});
        e.dofs = j.value("dofs", std::size_t{0});
        e.iterations = j.value("iterations", 0);
        entries.push_back(std::move(e));
    }
    return entries;
}

std::optional<RunLogEntry> last_run_log_entry(const std::string& path,
                                              const std::string& command) {
    std::optional<RunLogEntry> found;
    for (const RunLogEntry& e : read_run_log(path))
        if (e.command == command) found = e;
    return found;
}

}  // namespace tsvstress
