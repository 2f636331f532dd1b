#include "tsvstress/submodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsvstress {

void SubmodelBoundaryField::validate() const {
    auto check_axis = [](const std::vector<double>& g, const char* name) {
        if (g.empty()) throw Error(std::string("submodel field: axis ") + name + " is empty");
        for (std::size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1]))
                throw Error(std::string("submodel field: axis ") + name +
                            " must be strictly increasing");
    };
    check_axis(x, "x");
    check_axis(y, "y");
    check_axis(z, "z");
    if (samples.size() != x.size() * y.size() * z.size())
        throw Error("submodel field: sample count does not match the grid");
}

bool SubmodelBoundaryField::covers(const std::array<double, 3>& point) const {
    return point[0] >= x.front() && point[0] <= x.back() && point[1] >= y.front() &&
           point[1] <= y.back() && point[2] >= z.front() && point[2] <= z.back();
}

namespace {

// Cell index and interpolation weight along one axis; single-point axes
// act as constant extrusions.
std::pair<std::size_t, double> axis_weight(const std::vector<double>& g, double v) {
    if (g.size() == 1) return {0, 0.0};
    auto it = std::upper_bound(g.begin(), g.end(), v);
    std::size_t k = static_cast<std::size_t>(it - g.begin());
    k = (k == 0) ? 0 : k - 1;
    if (k >= g.size() - 1) k = g.size() - 2;
    double w = (v - g[k]) / (g[k + 1] - g[k]);
    return {k, w};
}

}  // namespace

std::array<double, 3> SubmodelBoundaryField::interpolate(const std::array<double, 3>& point) const {
    if (!covers(point))
        throw Error("submodel field does not cover the boundary node at (" +
                    std::to_string(point[0]) + ", " + std::to_string(point[1]) + ", " +
                    std::to_string(point[2]) + ")");
    auto [ix, wx] = axis_weight(x, point[0]);
    auto [iy, wy] = axis_weight(y, point[1]);
    auto [iz, wz] = axis_weight(z, point[2]);

    auto sample = [&](std::size_t dx, std::size_t dy, std::size_t dz) -> const std::array<double, 3>& {
        std::size_t jx = std::min(ix + dx, x.size() - 1);
        std::size_t jy = std::min(iy + dy, y.size() - 1);
        std::size_t jz = std::min(iz + dz, z.size() - 1);
        return samples[(jz * y.size() + jy) * x.size() + jx];
    };

    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
        double c00 = sample(0, 0, 0)[c] * (1 - wx) + sample(1, 0, 0)[c] * wx;
        double c10 = sample(0, 1, 0)[c] * (1 - wx) + sample(1, 1, 0)[c] * wx;
        double c01 = sample(0, 0, 1)[c] * (1 - wx) + sample(1, 0, 1)[c] * wx;
        double c11 = sample(0, 1, 1)[c] * (1 - wx) + sample(1, 1, 1)[c] * wx;
        double c0 = c00 * (1 - wy) + c10 * wy;
        double c1 = c01 * (1 - wy) + c11 * wy;
        out[c] = c0 * (1 - wz) + c1 * wz;
    }
    return out;
}

SubmodelBoundaryField SubmodelBoundaryField::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("submodel field: cannot open " + path);
    auto next_data_line = [&](std::string& line) {
        while (std::getline(in, line)) {
            std::size_t pos = line.find('#');
            if (pos != std::string::npos) line.erase(pos);
            std::size_t start = line.find_first_not_of(" \t\r");
            if (start == std::string::npos) continue;
            return true;
        }
        return false;
    };

    std::string line;
    if (!next_data_line(line)) throw Error("submodel field: " + path + " is empty");
    std::istringstream counts(line);
    std::size_t nx = 0, ny = 0, nz = 0;
    if (!(counts >> nx >> ny >> nz) || nx == 0 || ny == 0 || nz == 0)
        throw Error("submodel field: " + path + ": expected 'nx ny nz' counts");

    SubmodelBoundaryField f;
    auto read_axis = [&](std::vector<double>& axis, std::size_t n, const char* name) {
        axis.resize(n);
        std::size_t got = 0;
        while (got < n) {
            if (!next_data_line(line))
                throw Error(std::string("submodel field: truncated ") + name + " axis in " + path);
            std::istringstream iss(line);
            double v;
            while (got < n && (iss >> v)) axis[got++] = v;
        }
    };
    read_axis(f.x, nx, "x");
    read_axis(f.y, ny, "y");
    read_axis(f.z, nz, "z");

    f.samples.resize(nx * ny * nz);
    for (std::size_t s = 0; s < f.samples.size(); ++s) {
        if (!next_data_line(line))
            throw Error("submodel field: " + path + " is missing displacement samples");
        std::istringstream iss(line);
        if (!(iss >> f.samples[s][0] >> f.samples[s][1] >> f.samples[s][2]))
            throw Error("submodel field: " + path + ": malformed sample line");
    }
    f.validate();
    return f;
}

void SubmodelBoundaryField::save(const std::string& path) const {
    validate();
    std::ofstream out(path);
    if (!out) throw Error("submodel field: cannot open " + path);
    out.precision(17);
    out << "# sub-model boundary displacement samples\n";
    out << x.size() << " " << y.size() << " " << z.size() << "\n";
    for (const auto* axis : {&x, &y, &z}) {
        for (std::size_t i = 0; i < axis->size(); ++i) out << (i ? " " : "") << (*axis)[i];
        out << "\n";
    }
    out << "# ux uy uz, x fastest\n";
    for (const auto& s : samples) out << s[0] << " " << s[1] << " " << s[2] << "\n";
    if (!out) throw Error("submodel field: write failed for " + path);
}

SubmodelBoundaryField SubmodelBoundaryField::affine(const std::array<double, 3>& lo,
                                                    const std::array<double, 3>& hi,
                                                    const std::array<std::array<double, 3>, 3>& gradient,
                                                    const std::array<double, 3>& origin,
                                                    const std::array<double, 3>& offset) {
    SubmodelBoundaryField f;
    f.x = {lo[0], hi[0]};
    f.y = {lo[1], hi[1]};
    f.z = {lo[2], hi[2]};
    for (double zc : f.z)
        for (double yc : f.y)
            for (double xc : f.x) {
                std::array<double, 3> r = {xc - origin[0], yc - origin[1], zc - origin[2]};
                std::array<double, 3> u{};
                for (int i = 0; i < 3; ++i)
                    u[i] = offset[i] + gradient[i][0] * r[0] + gradient[i][1] * r[1] +
                           gradient[i][2] * r[2];
                f.samples.push_back(u);
            }
    f.validate();
    return f;
}

}  // namespace tsvstress
