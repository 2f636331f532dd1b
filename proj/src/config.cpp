#include "tsvstress/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsvstress::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw Error("config: " + key + ": " + why);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("config: line " + std::to_string(line_no) + " is not 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw Error("config: empty key on line " + std::to_string(line_no));
        kv.set(key, value);
    }
    return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValues::serialize() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + " = " + v + "\n";
    return out;
}

bool KeyValues::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* KeyValues::find(const std::string& key) const {
    for (const auto& [k, v] : items_)
        if (k == key) return &v;
    return nullptr;
}

void KeyValues::set(const std::string& key, std::string value) {
    for (auto& [k, v] : items_)
        if (k == key) {
            v = std::move(value);
            return;
        }
    items_.emplace_back(key, std::move(value));
}

double KeyValues::get_double(const std::string& key, std::optional<double> fallback) const {
    const std::string* v = find(key);
    if (!v) {
        if (fallback) return *fallback;
        bad_key(key, "missing required value");
    }
    try {
        std::size_t pos = 0;
        double d = std::stod(*v, &pos);
        if (pos != v->size()) bad_key(key, "'" + *v + "' is not a number");
        return d;
    } catch (const std::exception&) {
        bad_key(key, "'" + *v + "' is not a number");
    }
}

long KeyValues::get_int(const std::string& key, std::optional<long> fallback) const {
    const std::string* v = find(key);
    if (!v) {
        if (fallback) return *fallback;
        bad_key(key, "missing required value");
    }
    try {
        std::size_t pos = 0;
        long n = std::stol(*v, &pos);
        if (pos != v->size()) bad_key(key, "'" + *v + "' is not an integer");
        return n;
    } catch (const std::exception&) {
        bad_key(key, "'" + *v + "' is not an integer");
    }
}

std::string KeyValues::get_string(const std::string& key,
                                  std::optional<std::string> fallback) const {
    const std::string* v = find(key);
    if (!v) {
        if (fallback) return *fallback;
        bad_key(key, "missing required value");
    }
    return *v;
}

std::vector<double> KeyValues::get_double_list(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) bad_key(key, "missing required value");
    std::vector<double> out;
    std::string item;
    std::istringstream iss(*v);
    while (std::getline(iss, item, ',')) {
        item = trim(item);
        if (item.empty()) bad_key(key, "empty list entry");
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            bad_key(key, "'" + item + "' is not a number");
        }
    }
    if (out.empty()) bad_key(key, "empty list");
    return out;
}

namespace {

const char* const kKnownKeys[] = {
    "geometry.d", "geometry.h", "geometry.t", "geometry.p",
    "material.copper.e", "material.copper.nu", "material.copper.alpha",
    "material.liner.e", "material.liner.nu", "material.liner.alpha",
    "material.silicon.e", "material.silicon.nu", "material.silicon.alpha",
    "grid.target", "grid.x", "grid.y", "grid.z", "grid.res",
    "layout.rows", "layout.cols", "layout.kinds", "layout.delta_t",
    "interpolation.nx", "interpolation.ny", "interpolation.nz",
    "bc.type", "bc.submodel_file", "bc.dummy_rings",
    "solver.tolerance", "solver.max_iterations", "solver.precond", "solver.method",
    "reference.dof_cap",
    "superposition.halo", "superposition.cache",
    "rom.tsv", "rom.dummy",
    "output.grid_csv", "output.vtk", "output.run_log",
    "threads",
};

Material read_material(const KeyValues& kv, const std::string& prefix, const Material& def) {
    double e = kv.get_double(prefix + ".e", def.youngs_modulus);
    double nu = kv.get_double(prefix + ".nu", def.poisson_ratio);
    double alpha = kv.get_double(prefix + ".alpha", def.thermal_expansion);
    if (!(e > 0.0)) bad_key(prefix + ".e", "must be > 0");
    if (!(nu > -1.0 && nu < 0.5)) bad_key(prefix + ".nu", "must lie in (-1, 0.5)");
    return Material::make(e, nu, alpha);
}

std::vector<BlockKind> parse_kinds(const std::string& text, std::uint32_t rows, std::uint32_t cols,
                                   const std::string& key) {
    if (text == "tsv") return {};
    std::vector<BlockKind> kinds;
    if (text == "dummy") {
        kinds.assign(static_cast<std::size_t>(rows) * cols, BlockKind::Dummy);
        return kinds;
    }
    std::vector<std::string> row_strings;
    std::istringstream iss(text);
    std::string row;
    while (std::getline(iss, row, ';')) row_strings.push_back(trim(row));
    if (row_strings.size() != rows)
        bad_key(key, "pattern has " + std::to_string(row_strings.size()) + " rows, layout has " +
                         std::to_string(rows));
    for (const std::string& r : row_strings) {
        if (r.size() != cols)
            bad_key(key, "pattern row '" + r + "' does not have " + std::to_string(cols) + " cells");
        for (char ch : r) {
            if (ch == 't')
                kinds.push_back(BlockKind::Tsv);
            else if (ch == 'd')
                kinds.push_back(BlockKind::Dummy);
            else
                bad_key(key, std::string("unknown cell kind '") + ch + "' (use 't' or 'd')");
        }
    }
    return kinds;
}

std::vector<double> parse_delta_t(const KeyValues& kv, std::uint32_t rows, std::uint32_t cols) {
    const std::string key = "layout.delta_t";
    const std::string* v = kv.find(key);
    if (!v) return {-250.0};
    if (v->find(';') == std::string::npos && v->find(',') == std::string::npos)
        return {kv.get_double(key)};
    std::vector<double> out;
    std::istringstream iss(*v);
    std::string row;
    std::size_t n_rows = 0;
    while (std::getline(iss, row, ';')) {
        ++n_rows;
        std::istringstream riss(row);
        std::string item;
        std::size_t n_cols = 0;
        while (std::getline(riss, item, ',')) {
            ++n_cols;
            try {
                out.push_back(std::stod(trim(item)));
            } catch (const std::exception&) {
                bad_key(key, "'" + trim(item) + "' is not a number");
            }
        }
        if (n_cols != cols) bad_key(key, "each row needs " + std::to_string(cols) + " values");
    }
    if (n_rows != rows) bad_key(key, "needs " + std::to_string(rows) + " rows");
    return out;
}

std::vector<double> parse_axis(const KeyValues& kv, const std::string& key, double extent) {
    std::vector<double> axis = kv.get_double_list(key);
    if (axis.size() < 2) bad_key(key, "needs at least 2 coordinates");
    if (axis.front() != 0.0 || axis.back() != extent)
        bad_key(key, "must span [0, " + std::to_string(extent) + "] exactly");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1])) bad_key(key, "must be strictly increasing");
    return axis;
}

}  // namespace

RunConfig RunConfig::from(const KeyValues& kv) {
    for (const auto& [key, value] : kv.items()) {
        bool known = false;
        for (const char* k : kKnownKeys) known |= (key == k);
        if (!known) bad_key(key, "unknown key");
    }

    RunConfig c;
    c.geometry.d = kv.get_double("geometry.d", 5e-6);
    c.geometry.h = kv.get_double("geometry.h", 50e-6);
    c.geometry.t = kv.get_double("geometry.t", 0.5e-6);
    c.geometry.p = kv.get_double("geometry.p", 15e-6);
    if (!(c.geometry.d > 0.0)) bad_key("geometry.d", "must be > 0");
    if (!(c.geometry.h > 0.0)) bad_key("geometry.h", "must be > 0");
    if (!(c.geometry.t > 0.0)) bad_key("geometry.t", "must be > 0");
    if (!(c.geometry.d + 2.0 * c.geometry.t < c.geometry.p))
        bad_key("geometry.p", "pitch must exceed d + 2t");

    MaterialTable defaults = MaterialTable::defaults();
    c.materials[MaterialId::Copper] = read_material(kv, "material.copper", defaults[MaterialId::Copper]);
    c.materials[MaterialId::Liner] = read_material(kv, "material.liner", defaults[MaterialId::Liner]);
    c.materials[MaterialId::Silicon] =
        read_material(kv, "material.silicon", defaults[MaterialId::Silicon]);

    c.grid_target = kv.get_double("grid.target", 2e-6);
    if (!(c.grid_target > 0.0)) bad_key("grid.target", "must be > 0");
    if (kv.has("grid.x") || kv.has("grid.y") || kv.has("grid.z")) {
        if (!(kv.has("grid.x") && kv.has("grid.y") && kv.has("grid.z")))
            bad_key("grid.x", "explicit grids need all of grid.x, grid.y, grid.z");
        TensorGrid g;
        g.x = parse_axis(kv, "grid.x", c.geometry.p);
        g.y = parse_axis(kv, "grid.y", c.geometry.p);
        g.z = parse_axis(kv, "grid.z", c.geometry.h);
        c.explicit_grid = std::move(g);
    }
    long res = kv.get_int("grid.res", 100);
    if (res < 1 || res > 4096) bad_key("grid.res", "must lie in [1, 4096]");
    c.grid_res = static_cast<std::uint32_t>(res);

    long rows = kv.get_int("layout.rows", 1);
    long cols = kv.get_int("layout.cols", 1);
    if (rows < 1) bad_key("layout.rows", "must be >= 1");
    if (cols < 1) bad_key("layout.cols", "must be >= 1");
    c.rows = static_cast<std::uint32_t>(rows);
    c.cols = static_cast<std::uint32_t>(cols);
    c.kinds = parse_kinds(kv.get_string("layout.kinds", "tsv"), c.rows, c.cols, "layout.kinds");
    c.delta_t = parse_delta_t(kv, c.rows, c.cols);

    auto read_count = [&](const std::string& key) {
        long n = kv.get_int(key, 4);
        if (n < 2 || n > 64) bad_key(key, "must lie in [2, 64]");
        return static_cast<std::uint32_t>(n);
    };
    c.interp_nx = read_count("interpolation.nx");
    c.interp_ny = read_count("interpolation.ny");
    c.interp_nz = read_count("interpolation.nz");

    std::string bc = kv.get_string("bc.type", "clamped");
    if (bc == "clamped")
        c.bc = BcKind::Clamped;
    else if (bc == "submodel")
        c.bc = BcKind::Submodel;
    else
        bad_key("bc.type", "'" + bc + "' is not one of clamped|submodel");
    c.submodel_file = kv.get_string("bc.submodel_file", "");
    if (c.bc == BcKind::Submodel) {
        if (c.submodel_file.empty()) bad_key("bc.submodel_file", "required for bc.type = submodel");
        if (!std::ifstream(c.submodel_file)) bad_key("bc.submodel_file", "file does not exist");
    }
    long rings = kv.get_int("bc.dummy_rings", 2);
    if (rings < 0 || rings > 16) bad_key("bc.dummy_rings", "must lie in [0, 16]");
    c.dummy_rings = static_cast<std::uint32_t>(rings);

    c.solver.tolerance = kv.get_double("solver.tolerance", 1e-10);
    if (!(c.solver.tolerance > 0.0)) bad_key("solver.tolerance", "must be > 0");
    long max_it = kv.get_int("solver.max_iterations", 10000);
    if (max_it < 1) bad_key("solver.max_iterations", "must be >= 1");
    c.solver.max_iterations = static_cast<int>(max_it);
    std::string precond = kv.get_string("solver.precond", "diagonal");
    if (precond == "none")
        c.solver.precond = linalg::Precond::None;
    else if (precond == "diagonal")
        c.solver.precond = linalg::Precond::Diagonal;
    else if (precond == "block")
        c.solver.precond = linalg::Precond::BlockDiagonal;
    else
        bad_key("solver.precond", "'" + precond + "' is not one of none|diagonal|block");
    std::string method = kv.get_string("solver.method", "cg");
    if (method == "cg")
        c.solver.method = linalg::IterMethod::Cg;
    else if (method == "gmres")
        c.solver.method = linalg::IterMethod::Gmres;
    else
        bad_key("solver.method", "'" + method + "' is not one of cg|gmres");

    long cap = kv.get_int("reference.dof_cap", 3'000'000);
    if (cap < 1) bad_key("reference.dof_cap", "must be >= 1");
    c.dof_cap = static_cast<std::size_t>(cap);

    long halo = kv.get_int("superposition.halo", 2);
    if (halo < 1 || halo > 8) bad_key("superposition.halo", "must lie in [1, 8]");
    c.superposition_halo = static_cast<std::uint32_t>(halo);
    c.superposition_cache = kv.get_string("superposition.cache", "");

    c.rom_tsv = kv.get_string("rom.tsv", "tsv.rom");
    c.rom_dummy = kv.get_string("rom.dummy", "dummy.rom");
    c.out_csv = kv.get_string("output.grid_csv", "stress_grid.csv");
    c.out_vtk = kv.get_string("output.vtk", "");
    c.run_log = kv.get_string("output.run_log", "run_log.jsonl");

    long threads = kv.get_int("threads", 1);
    if (threads < 1 || threads > 256) bad_key("threads", "must lie in [1, 256]");
    c.threads = static_cast<int>(threads);
    c.solver.threads = c.threads;
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from(KeyValues::parse_file(path));
}

TensorGrid RunConfig::grid() const {
    if (explicit_grid) return *explicit_grid;
    return default_grading(geometry, grid_target);
}

rom::NodeLayout RunConfig::node_layout() const {
    return rom::NodeLayout::create(interp_nx, interp_ny, interp_nz, geometry.p, geometry.p,
                                   geometry.h);
}

global::ArrayLayout RunConfig::layout() const {
    global::ArrayLayout l;
    l.rows = rows;
    l.cols = cols;
    l.kinds = kinds;
    l.delta_t = delta_t;
    l.pitch = geometry.p;
    l.height = geometry.h;
    l.validate();
    return l;
}

global::ArrayLayout RunConfig::effective_layout() const {
    global::ArrayLayout l = layout();
    if (bc == BcKind::Submodel) l = l.padded_with_dummies(dummy_rings);
    return l;
}

global::GlobalBC RunConfig::boundary_condition() const {
    if (bc == BcKind::Clamped) return global::GlobalBC::clamped();
    return global::GlobalBC::submodel(SubmodelBoundaryField::load(submodel_file));
}

Hash256 RunConfig::rom_fingerprint() const {
    return rom::rom_fingerprint(geometry, grid(), materials, node_layout());
}

}  // namespace tsvstress::config
