#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsvstress/baseline.hpp"
#include "tsvstress/global.hpp"

namespace tsvstress::config {

/// Ordered `key = value` store with dotted section keys. Comments start
/// with '#'. parse(serialize(parse(text))) == parse(text).
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues parse_file(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;
    void set(const std::string& key, std::string value);

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    double get_double(const std::string& key, std::optional<double> fallback = {}) const;
    long get_int(const std::string& key, std::optional<long> fallback = {}) const;
    std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
    std::vector<double> get_double_list(const std::string& key) const;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Fully validated run parameters.
struct RunConfig {
    UnitBlockGeometry geometry;
    MaterialTable materials = MaterialTable::defaults();

    std::optional<TensorGrid> explicit_grid;
    double grid_target = 2e-6;
    std::uint32_t grid_res = 100;

    std::uint32_t rows = 1, cols = 1;
    std::vector<BlockKind> kinds;   // empty = all tsv
    std::vector<double> delta_t = {-250.0};

    std::uint32_t interp_nx = 4, interp_ny = 4, interp_nz = 4;

    enum class BcKind { Clamped, Submodel };
    BcKind bc = BcKind::Clamped;
    std::string submodel_file;
    std::uint32_t dummy_rings = 2;

    linalg::IterOptions solver;
    std::size_t dof_cap = 3'000'000;

    std::uint32_t superposition_halo = 2;
    std::string superposition_cache;

    std::string rom_tsv = "tsv.rom";
    std::string rom_dummy = "dummy.rom";
    std::string out_csv = "stress_grid.csv";
    std::string out_vtk;
    std::string run_log = "run_log.jsonl";
    int threads = 1;

    /// Parse + validate; errors name the offending dotted key.
    static RunConfig from(const KeyValues& kv);
    static RunConfig from_file(const std::string& path);

    TensorGrid grid() const;
    rom::NodeLayout node_layout() const;
    global::ArrayLayout layout() const;
    /// Layout with the configured dummy rings applied (sub-model runs).
    global::ArrayLayout effective_layout() const;
    global::GlobalBC boundary_condition() const;
    Hash256 rom_fingerprint() const;
};

}  // namespace tsvstress::config
