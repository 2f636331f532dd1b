#include "tsvstress/fem.hpp"

#include <algorithm>
#include <cmath>

namespace tsvstress::fem {

namespace {

// Natural corner coordinates matching the mesh's hexahedron ordering.
constexpr double kXi[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
constexpr double kEta[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
constexpr double kZeta[8] = {-1, -1, -1, -1, 1, 1, 1, 1};

const double kGauss = 1.0 / std::sqrt(3.0);

void shape_gradients_natural(double xi, double eta, double zeta, double out[8][3]) {
    for (int a = 0; a < 8; ++a) {
        out[a][0] = 0.125 * kXi[a] * (1.0 + kEta[a] * eta) * (1.0 + kZeta[a] * zeta);
        out[a][1] = 0.125 * kEta[a] * (1.0 + kXi[a] * xi) * (1.0 + kZeta[a] * zeta);
        out[a][2] = 0.125 * kZeta[a] * (1.0 + kXi[a] * xi) * (1.0 + kEta[a] * eta);
    }
}

/// Physical shape gradients and |J| at a natural point. Throws for a
/// degenerate (non-positive Jacobian) element.
double physical_gradients(const std::array<std::array<double, 3>, 8>& corners, double xi,
                          double eta, double zeta, double grad[8][3]) {
    double dn[8][3];
    shape_gradients_natural(xi, eta, zeta, dn);

    double jac[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (int a = 0; a < 8; ++a)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) jac[r][c] += dn[a][r] * corners[a][c];

    double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                 jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                 jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    if (!(det > 0.0)) throw Error("element: degenerate hexahedron (non-positive Jacobian)");

    double inv[3][3];
    inv[0][0] = (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) / det;
    inv[0][1] = (jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2]) / det;
    inv[0][2] = (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]) / det;
    inv[1][0] = (jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2]) / det;
    inv[1][1] = (jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0]) / det;
    inv[1][2] = (jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2]) / det;
    inv[2][0] = (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]) / det;
    inv[2][1] = (jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1]) / det;
    inv[2][2] = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]) / det;

    // grad N_a = J^{-T} dN_a
    for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i)
            grad[a][i] = inv[0][i] * dn[a][0] + inv[1][i] * dn[a][1] + inv[2][i] * dn[a][2];
    return det;
}

}  // namespace

void DirichletSet::set(std::uint32_t dof, double value) {
    entries_.emplace_back(dof, value);
    sorted_ = false;
}

const std::vector<std::pair<std::uint32_t, double>>& DirichletSet::entries() const {
    if (!sorted_) {
        std::sort(entries_.begin(), entries_.end());
        for (std::size_t i = 1; i < entries_.size(); ++i)
            if (entries_[i].first == entries_[i - 1].first) {
                if (entries_[i].second != entries_[i - 1].second)
                    throw Error("DirichletSet: dof " + std::to_string(entries_[i].first) +
                                " prescribed twice with different values");
            }
        entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
        sorted_ = true;
    }
    return entries_;
}

linalg::DenseMatrix element_stiffness(const std::array<std::array<double, 3>, 8>& corners,
                                      const Material& mat) {
    linalg::DenseMatrix k(24, 24);
    const double lambda = mat.lame_lambda, mu = mat.lame_mu;
    double grad[8][3];
    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy)
            for (int gz = 0; gz < 2; ++gz) {
                double xi = (gx ? kGauss : -kGauss);
                double eta = (gy ? kGauss : -kGauss);
                double zeta = (gz ? kGauss : -kGauss);
                double w = physical_gradients(corners, xi, eta, zeta, grad);
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) {
                        double gg = grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1] +
                                    grad[a][2] * grad[b][2];
                        for (int i = 0; i < 3; ++i)
                            for (int j = 0; j < 3; ++j) {
                                double v = lambda * grad[a][i] * grad[b][j] +
                                           mu * grad[a][j] * grad[b][i];
                                if (i == j) v += mu * gg;
                                k.at(3 * a + i, 3 * b + j) += w * v;
                            }
                    }
            }
    return k;
}

std::array<double, 24> element_thermal_load(const std::array<std::array<double, 3>, 8>& corners,
                                            const Material& mat) {
    std::array<double, 24> load{};
    const double coef = mat.thermal_expansion * (3.0 * mat.lame_lambda + 2.0 * mat.lame_mu);
    double grad[8][3];
    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy)
            for (int gz = 0; gz < 2; ++gz) {
                double xi = (gx ? kGauss : -kGauss);
                double eta = (gy ? kGauss : -kGauss);
                double zeta = (gz ? kGauss : -kGauss);
                double w = physical_gradients(corners, xi, eta, zeta, grad);
                for (int a = 0; a < 8; ++a)
                    for (int i = 0; i < 3; ++i) load[3 * a + i] += w * coef * grad[a][i];
            }
    return load;
}

namespace {

/// Node-to-node adjacency of the mesh, rows sorted. Used to build the CSR
/// pattern without materializing per-element triplets.
std::vector<std::vector<std::uint32_t>> node_adjacency(const HexMesh& mesh) {
    std::vector<std::vector<std::uint32_t>> adj(mesh.node_count());
    for (auto& v : adj) v.reserve(27);
    for (const auto& elem : mesh.elements)
        for (std::uint32_t a : elem)
            for (std::uint32_t b : elem) adj[a].push_back(b);
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

}  // namespace

AssembledSystem assemble(const HexMesh& mesh, const MaterialTable& mats,
                         std::span<const double> element_delta_t, int threads) {
    if (!element_delta_t.empty() && element_delta_t.size() != mesh.element_count())
        throw Error("assemble: element_delta_t must have one entry per element");

    const std::size_t n_dofs = mesh.dof_count();
    auto adj = node_adjacency(mesh);

    std::vector<std::uint32_t> offsets(n_dofs + 1, 0);
    std::size_t nnz = 0;
    for (std::size_t node = 0; node < mesh.node_count(); ++node) {
        for (int c = 0; c < 3; ++c) offsets[3 * node + c + 1] = static_cast<std::uint32_t>(adj[node].size() * 3);
        nnz += adj[node].size() * 9;
    }
    for (std::size_t i = 0; i < n_dofs; ++i) offsets[i + 1] += offsets[i];

    std::vector<std::uint32_t> cols(nnz);
    std::vector<double> vals(nnz, 0.0);
    for (std::size_t node = 0; node < mesh.node_count(); ++node)
        for (int c = 0; c < 3; ++c) {
            std::size_t base = offsets[3 * node + c];
            for (std::size_t m = 0; m < adj[node].size(); ++m)
                for (int cc = 0; cc < 3; ++cc)
                    cols[base + 3 * m + cc] = 3 * adj[node][m] + static_cast<std::uint32_t>(cc);
        }
    adj.clear();
    adj.shrink_to_fit();

    linalg::CsrMatrix a(n_dofs, n_dofs, std::move(offsets), std::move(cols), std::move(vals));
    std::vector<double> b(n_dofs, 0.0);

    // Element matrices are computed in parallel chunk by chunk; the scatter
    // runs serially in element order, so results are bitwise identical for
    // every thread count.
    constexpr std::size_t kChunk = 512;
    std::vector<linalg::DenseMatrix> k_buf(kChunk);
    std::vector<std::array<double, 24>> f_buf(kChunk);
    std::vector<std::string> errors(kChunk);

    for (std::size_t chunk_begin = 0; chunk_begin < mesh.element_count(); chunk_begin += kChunk) {
        const std::size_t chunk = std::min(kChunk, mesh.element_count() - chunk_begin);
        parallel_for_ranges(chunk, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t s = begin; s < end; ++s) {
                std::size_t e = chunk_begin + s;
                const Material& mat = mats[mesh.element_material[e]];
                auto corners = mesh.element_corners(e);
                try {
                    k_buf[s] = element_stiffness(corners, mat);
                    f_buf[s] = element_thermal_load(corners, mat);
                    errors[s].clear();
                } catch (const Error& err) {
                    errors[s] = err.what();
                }
            }
        });
        for (std::size_t s = 0; s < chunk; ++s) {
            std::size_t e = chunk_begin + s;
            if (!errors[s].empty())
                throw Error("assemble: element " + std::to_string(e) + ": " + errors[s]);
            const auto& elem = mesh.elements[e];
            double dt = element_delta_t.empty() ? 1.0 : element_delta_t[e];
            for (int ar = 0; ar < 8; ++ar)
                for (int i = 0; i < 3; ++i) {
                    std::uint32_t row = 3 * elem[ar] + static_cast<std::uint32_t>(i);
                    for (int br = 0; br < 8; ++br)
                        for (int j = 0; j < 3; ++j) {
                            double* slot = a.find_entry(row, 3 * elem[br] + static_cast<std::uint32_t>(j));
                            *slot += k_buf[s].at(3 * ar + i, 3 * br + j);
                        }
                    b[row] += dt * f_buf[s][3 * ar + i];
                }
        }
    }
    return {std::move(a), std::move(b)};
}

void apply_dirichlet_lifting(linalg::CsrMatrix& a, std::vector<double>& b,
                             const DirichletSet& bc) {
    if (b.size() != a.n_rows()) throw Error("apply_dirichlet_lifting: dimension mismatch");
    if (bc.empty()) return;

    std::vector<std::uint8_t> constrained(a.n_rows(), 0);
    std::vector<double> value(a.n_rows(), 0.0);
    for (const auto& [dof, g] : bc.entries()) {
        if (dof >= a.n_rows())
            throw Error("apply_dirichlet_lifting: dof " + std::to_string(dof) + " out of range");
        constrained[dof] = 1;
        value[dof] = g;
    }

    const auto& offsets = a.row_offsets();
    const auto& cols = a.col_indices();
    auto& vals = a.values();
    for (std::size_t r = 0; r < a.n_rows(); ++r) {
        if (constrained[r]) {
            bool has_diag = false;
            for (std::uint32_t k = offsets[r]; k < offsets[r + 1]; ++k) {
                has_diag |= (cols[k] == r);
                vals[k] = (cols[k] == r) ? 1.0 : 0.0;
            }
            if (!has_diag)
                throw Error("apply_dirichlet_lifting: constrained dof " + std::to_string(r) +
                            " has no stored diagonal entry");
            b[r] = value[r];
        } else {
            for (std::uint32_t k = offsets[r]; k < offsets[r + 1]; ++k) {
                if (constrained[cols[k]]) {
                    b[r] -= vals[k] * value[cols[k]];
                    vals[k] = 0.0;
                }
            }
        }
    }
}

StressTensor evaluate_stress_in_element(const DisplacementField& field, const HexMesh& mesh,
                                        std::size_t element, const std::array<double, 3>& point,
                                        const MaterialTable& mats, double delta_t) {
    if (field.size() != mesh.dof_count())
        throw Error("evaluate_stress: field length must be 3 x node count");
    const auto& elem = mesh.elements[element];
    auto corners = mesh.element_corners(element);

    // Axis-aligned box cell: the natural coordinates are affine in x.
    double xi = 2.0 * (point[0] - corners[0][0]) / (corners[1][0] - corners[0][0]) - 1.0;
    double eta = 2.0 * (point[1] - corners[0][1]) / (corners[2][1] - corners[0][1]) - 1.0;
    double zeta = 2.0 * (point[2] - corners[0][2]) / (corners[4][2] - corners[0][2]) - 1.0;

    double grad[8][3];
    physical_gradients(corners, xi, eta, zeta, grad);

    double du[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) du[i][j] += field[3 * elem[a] + i] * grad[a][j];

    double exx = du[0][0], eyy = du[1][1], ezz = du[2][2];
    double exy = 0.5 * (du[0][1] + du[1][0]);
    double eyz = 0.5 * (du[1][2] + du[2][1]);
    double ezx = 0.5 * (du[2][0] + du[0][2]);

    const Material& mat = mats[mesh.element_material[element]];
    double lambda = mat.lame_lambda, mu = mat.lame_mu;
    double trace = exx + eyy + ezz;
    double thermal = mat.thermal_expansion * (3.0 * lambda + 2.0 * mu) * delta_t;

    StressTensor s;
    s.xx = lambda * trace + 2.0 * mu * exx - thermal;
    s.yy = lambda * trace + 2.0 * mu * eyy - thermal;
    s.zz = lambda * trace + 2.0 * mu * ezz - thermal;
    s.xy = 2.0 * mu * exy;
    s.yz = 2.0 * mu * eyz;
    s.zx = 2.0 * mu * ezx;
    return s;
}

StressTensor evaluate_stress(const DisplacementField& field, const HexMesh& mesh,
                             const std::array<double, 3>& point, const MaterialTable& mats,
                             double delta_t) {
    auto cell = mesh.find_cell(point);
    std::size_t element = mesh.cell_id(cell[0], cell[1], cell[2]);
    return evaluate_stress_in_element(field, mesh, element, point, mats, delta_t);
}

double von_mises(const StressTensor& s) {
    double d1 = s.xx - s.yy, d2 = s.yy - s.zz, d3 = s.zz - s.xx;
    double v = 0.5 * (d1 * d1 + d2 * d2 + d3 * d3) +
               3.0 * (s.xy * s.xy + s.yz * s.yz + s.zx * s.zx);
    return std::sqrt(std::max(v, 0.0));
}

}  // namespace tsvstress::fem
