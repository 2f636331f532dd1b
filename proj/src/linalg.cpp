#include "tsvstress/linalg.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace tsvstress::linalg {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint32_t> row_offsets,
                     std::vector<std::uint32_t> col_indices, std::vector<double> values)
    : n_rows_(rows),
      n_cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    if (row_offsets_.size() != n_rows_ + 1)
        throw Error("CsrMatrix: row_offsets length must be n_rows + 1");
    if (col_indices_.size() != values_.size() || row_offsets_.back() != values_.size())
        throw Error("CsrMatrix: inconsistent index/value lengths");
    for (std::size_t r = 0; r < n_rows_; ++r) {
        if (row_offsets_[r] > row_offsets_[r + 1]) throw Error("CsrMatrix: row_offsets not non-decreasing");
        for (std::uint32_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            if (col_indices_[k] >= n_cols_) throw Error("CsrMatrix: column index out of range");
            if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1])
                throw Error("CsrMatrix: columns within a row must be strictly increasing");
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::span<const Triplet> triplets, std::size_t rows,
                                   std::size_t cols) {
    for (const Triplet& t : triplets) {
        if (t.row >= rows || t.col >= cols)
            throw Error("csr_from_triplets: index (" + std::to_string(t.row) + ", " +
                        std::to_string(t.col) + ") outside shape " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
    std::vector<std::uint32_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (triplets[a].row != triplets[b].row) return triplets[a].row < triplets[b].row;
        return triplets[a].col < triplets[b].col;
    });

    std::vector<std::uint32_t> offsets(rows + 1, 0);
    std::vector<std::uint32_t> cols_out;
    std::vector<double> vals_out;
    cols_out.reserve(triplets.size());
    vals_out.reserve(triplets.size());

    std::size_t k = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        offsets[r] = static_cast<std::uint32_t>(vals_out.size());
        while (k < order.size() && triplets[order[k]].row == r) {
            std::uint32_t c = triplets[order[k]].col;
            double v = 0.0;
            while (k < order.size() && triplets[order[k]].row == r && triplets[order[k]].col == c) {
                v += triplets[order[k]].value;  // duplicates summed in stable input order
                ++k;
            }
            cols_out.push_back(c);
            vals_out.push_back(v);
        }
    }
    offsets[rows] = static_cast<std::uint32_t>(vals_out.size());
    return CsrMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals_out));
}

void CsrMatrix::apply(std::span<const double> x, std::span<double> y, int threads) const {
    if (x.size() != n_cols_ || y.size() != n_rows_)
        throw Error("spmv: dimension mismatch (matrix " + std::to_string(n_rows_) + "x" +
                    std::to_string(n_cols_) + ", x " + std::to_string(x.size()) + ")");
    parallel_for_ranges(n_rows_, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            double acc = 0.0;
            for (std::uint32_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
                acc += values_[k] * x[col_indices_[k]];
            y[r] = acc;
        }
    });
}

double CsrMatrix::coeff(std::uint32_t row, std::uint32_t col) const {
    const std::uint32_t* begin = col_indices_.data() + row_offsets_[row];
    const std::uint32_t* end = col_indices_.data() + row_offsets_[row + 1];
    const std::uint32_t* it = std::lower_bound(begin, end, col);
    if (it != end && *it == col) return values_[static_cast<std::size_t>(it - col_indices_.data())];
    return 0.0;
}

double* CsrMatrix::find_entry(std::uint32_t row, std::uint32_t col) {
    const std::uint32_t* begin = col_indices_.data() + row_offsets_[row];
    const std::uint32_t* end = col_indices_.data() + row_offsets_[row + 1];
    const std::uint32_t* it = std::lower_bound(begin, end, col);
    if (it != end && *it == col) return values_.data() + (it - col_indices_.data());
    return nullptr;
}

double CsrMatrix::max_asymmetry() const {
    if (n_rows_ != n_cols_) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::uint32_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            std::uint32_t c = col_indices_[k];
            double mirror = coeff(c, static_cast<std::uint32_t>(r));
            worst = std::max(worst, std::abs(values_[k] - mirror));
        }
    }
    return worst;
}

bool CsrMatrix::is_symmetric(double rel_tol) const {
    if (n_rows_ != n_cols_) return false;
    double scale = 0.0;
    for (double v : values_) scale = std::max(scale, std::abs(v));
    return max_asymmetry() <= rel_tol * std::max(scale, 1.0);
}

CsrMatrix csr_from_triplets(std::span<const Triplet> triplets, std::size_t rows,
                            std::size_t cols) {
    return CsrMatrix::from_triplets(triplets, rows, cols);
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x, int threads) {
    std::vector<double> y(a.n_rows());
    a.apply(x, y, threads);
    return y;
}

NotPositiveDefinite::NotPositiveDefinite(std::size_t index, double value)
    : Error("factorize_spd: matrix is not positive definite (pivot " + std::to_string(index) +
            " = " + std::to_string(value) + ")"),
      pivot_index(index),
      pivot_value(value) {}

struct SymmetricFactor::Impl {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    std::size_t dim = 0;
};

SymmetricFactor::SymmetricFactor() : impl_(std::make_unique<Impl>()) {}
SymmetricFactor::~SymmetricFactor() = default;
SymmetricFactor::SymmetricFactor(SymmetricFactor&&) noexcept = default;
SymmetricFactor& SymmetricFactor::operator=(SymmetricFactor&&) noexcept = default;

std::size_t SymmetricFactor::dim() const { return impl_->dim; }

std::vector<double> SymmetricFactor::solve(std::span<const double> rhs) const {
    if (rhs.size() != impl_->dim)
        throw Error("solve_factored: rhs length " + std::to_string(rhs.size()) +
                    " does not match factor dimension " + std::to_string(impl_->dim));
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = impl_->ldlt.solve(b);
    return std::vector<double>(x.data(), x.data() + x.size());
}

SymmetricFactor factorize_spd(const CsrMatrix& a) {
    if (a.n_rows() != a.n_cols()) throw Error("factorize_spd: matrix must be square");
    if (!a.is_symmetric(1e-10)) throw Error("factorize_spd: matrix is not symmetric");

    using SpMat = Eigen::SparseMatrix<double>;
    const auto n = static_cast<Eigen::Index>(a.n_rows());
    Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> mapped(
        n, n, static_cast<Eigen::Index>(a.nnz()),
        reinterpret_cast<const int*>(a.row_offsets().data()),
        reinterpret_cast<const int*>(a.col_indices().data()), a.values().data());
    SpMat mat = mapped;  // copy into column-major for the solver

    SymmetricFactor f;
    f.impl_->dim = a.n_rows();
    auto& ldlt = f.impl_->ldlt;
    ldlt.compute(mat);
    if (ldlt.info() != Eigen::Success)
        throw Error("factorize_spd: factorization failed");

    // LDLT exposes the pivots directly; any non-positive one means the
    // matrix was not SPD. Report it in the original row numbering.
    const auto& d = ldlt.vectorD();
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (!(d[k] > 0.0)) {
            Eigen::Index orig = ldlt.permutationPinv().indices()[k];
            throw NotPositiveDefinite(static_cast<std::size_t>(orig), d[k]);
        }
    }
    return f;
}

std::vector<double> solve_factored(const SymmetricFactor& factor, std::span<const double> rhs) {
    return factor.solve(rhs);
}

void IterOptions::validate() const {
    if (!(tolerance > 0.0)) throw Error("IterOptions: tolerance must be > 0");
    if (max_iterations < 1) throw Error("IterOptions: max_iterations must be >= 1");
}

NoConvergence::NoConvergence(IterResult best_result, std::string what)
    : Error(std::move(what)), best(std::move(best_result)) {}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

namespace {

void check_finite(std::span<const double> v, const char* where) {
    for (double x : v)
        if (!std::isfinite(x)) throw Error(std::string(where) + ": NaN/Inf breakdown");
}

/// Preconditioner application z = M^{-1} r.
class Preconditioner {
public:
    Preconditioner(const CsrMatrix& a, Precond kind) : kind_(kind) {
        const std::size_t n = a.n_rows();
        if (kind_ == Precond::Diagonal) {
            inv_diag_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                double d = a.coeff(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i));
                inv_diag_[i] = d != 0.0 ? 1.0 / d : 1.0;
            }
        } else if (kind_ == Precond::BlockDiagonal) {
            if (n % 3 != 0) throw Error("block-diagonal preconditioner needs dimension divisible by 3");
            blocks_.resize(n / 3 * 9);
            for (std::size_t nb = 0; nb < n / 3; ++nb) {
                double m[9];
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        m[r * 3 + c] = a.coeff(static_cast<std::uint32_t>(3 * nb + r),
                                               static_cast<std::uint32_t>(3 * nb + c));
                double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                             m[2] * (m[3] * m[7] - m[4] * m[6]);
                double* inv = blocks_.data() + nb * 9;
                if (std::abs(det) < 1e-300) {
                    // fall back to the diagonal for a degenerate node block
                    for (int i = 0; i < 9; ++i) inv[i] = 0.0;
                    for (int i = 0; i < 3; ++i) {
                        double d = m[i * 3 + i];
                        inv[i * 3 + i] = d != 0.0 ? 1.0 / d : 1.0;
                    }
                } else {
                    inv[0] = (m[4] * m[8] - m[5] * m[7]) / det;
                    inv[1] = (m[2] * m[7] - m[1] * m[8]) / det;
                    inv[2] = (m[1] * m[5] - m[2] * m[4]) / det;
                    inv[3] = (m[5] * m[6] - m[3] * m[8]) / det;
                    inv[4] = (m[0] * m[8] - m[2] * m[6]) / det;
                    inv[5] = (m[2] * m[3] - m[0] * m[5]) / det;
                    inv[6] = (m[3] * m[7] - m[4] * m[6]) / det;
                    inv[7] = (m[1] * m[6] - m[0] * m[7]) / det;
                    inv[8] = (m[0] * m[4] - m[1] * m[3]) / det;
                }
            }
        }
    }

    void apply(std::span<const double> r, std::span<double> z) const {
        switch (kind_) {
            case Precond::None:
                std::copy(r.begin(), r.end(), z.begin());
                break;
            case Precond::Diagonal:
                for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
                break;
            case Precond::BlockDiagonal:
                for (std::size_t nb = 0; nb < r.size() / 3; ++nb) {
                    const double* m = blocks_.data() + nb * 9;
                    const double* ri = r.data() + nb * 3;
                    double* zi = z.data() + nb * 3;
                    zi[0] = m[0] * ri[0] + m[1] * ri[1] + m[2] * ri[2];
                    zi[1] = m[3] * ri[0] + m[4] * ri[1] + m[5] * ri[2];
                    zi[2] = m[6] * ri[0] + m[7] * ri[1] + m[8] * ri[2];
                }
                break;
        }
    }

private:
    Precond kind_;
    std::vector<double> inv_diag_;
    std::vector<double> blocks_;
};

IterResult cg_solve(const CsrMatrix& a, std::span<const double> b, const IterOptions& opts,
                    std::span<const double> x0) {
    const std::size_t n = a.n_rows();
    const double norm_b = norm2(b);
    IterResult res;
    res.x.assign(n, 0.0);
    if (norm_b == 0.0) return res;  // x = 0 solves exactly

    if (!x0.empty()) {
        if (x0.size() != n) throw Error("iterative_solve: x0 dimension mismatch");
        std::copy(x0.begin(), x0.end(), res.x.begin());
    }

    Preconditioner precond(a, opts.precond);
    std::vector<double> r(n), z(n), p(n), ap(n);

    a.apply(res.x, r, opts.threads);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];

    precond.apply(r, z);
    std::copy(z.begin(), z.end(), p.begin());
    double rho = dot(r, z);
    double res_norm = norm2(r);

    std::vector<double> best_x = res.x;
    double best_res = res_norm;
    int it = 0;

    while (it < opts.max_iterations) {
        if (res_norm <= opts.tolerance * norm_b) {
            // recurrence residual can drift; accept only a verified true residual
            a.apply(res.x, r, opts.threads);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
            res_norm = norm2(r);
            if (res_norm <= opts.tolerance * norm_b) break;
            precond.apply(r, z);
            std::copy(z.begin(), z.end(), p.begin());
            rho = dot(r, z);
        }
        a.apply(p, ap, opts.threads);
        double pap = dot(p, ap);
        if (!std::isfinite(pap)) throw Error("iterative_solve: NaN/Inf breakdown");
        if (pap <= 0.0) throw Error("iterative_solve: matrix not positive definite for CG (p'Ap <= 0)");
        double alpha = rho / pap;
        for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
        precond.apply(r, z);
        double rho_next = dot(r, z);
        double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        res_norm = norm2(r);
        if (!std::isfinite(res_norm)) throw Error("iterative_solve: NaN/Inf breakdown");
        ++it;
        if (res_norm < best_res) {
            best_res = res_norm;
            best_x = res.x;
        }
    }

    res.iterations = it;
    res.relative_residual = res_norm / norm_b;
    if (res.relative_residual > opts.tolerance) {
        IterResult best{std::move(best_x), it, best_res / norm_b};
        throw NoConvergence(std::move(best),
                            "iterative_solve: CG did not reach tolerance " +
                                std::to_string(opts.tolerance) + " in " + std::to_string(it) +
                                " iterations (best residual " + std::to_string(best_res / norm_b) + ")");
    }
    return res;
}

IterResult gmres_solve(const CsrMatrix& a, std::span<const double> b, const IterOptions& opts,
                       std::span<const double> x0) {
    const std::size_t n = a.n_rows();
    const double norm_b = norm2(b);
    IterResult res;
    res.x.assign(n, 0.0);
    if (norm_b == 0.0) return res;
    if (!x0.empty()) {
        if (x0.size() != n) throw Error("iterative_solve: x0 dimension mismatch");
        std::copy(x0.begin(), x0.end(), res.x.begin());
    }

    Preconditioner precond(a, opts.precond);
    const int m = std::max(1, opts.gmres_restart);
    std::vector<std::vector<double>> v(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
    std::vector<double> h(static_cast<std::size_t>(m + 1) * m, 0.0);
    std::vector<double> cs(m), sn(m), g(m + 1);
    std::vector<double> r(n), w(n);

    std::vector<double> best_x = res.x;
    double best_res = std::numeric_limits<double>::infinity();
    int total_it = 0;

    while (total_it < opts.max_iterations) {
        a.apply(res.x, r, opts.threads);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        precond.apply(r, w);
        double beta = norm2(w);
        double true_res = norm2(r) / norm_b;
        if (true_res < best_res) {
            best_res = true_res;
            best_x = res.x;
        }
        if (true_res <= opts.tolerance) {
            res.iterations = total_it;
            res.relative_residual = true_res;
            return res;
        }
        if (beta == 0.0) break;

        for (std::size_t i = 0; i < n; ++i) v[0][i] = w[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int k = 0;
        for (; k < m && total_it < opts.max_iterations; ++k, ++total_it) {
            a.apply(v[static_cast<std::size_t>(k)], r, opts.threads);
            precond.apply(r, w);
            // modified Gram-Schmidt
            for (int i = 0; i <= k; ++i) {
                double hik = dot(w, v[static_cast<std::size_t>(i)]);
                h[static_cast<std::size_t>(i) * m + k] = hik;
                for (std::size_t j = 0; j < n; ++j) w[j] -= hik * v[static_cast<std::size_t>(i)][j];
            }
            double hk1 = norm2(w);
            h[static_cast<std::size_t>(k + 1) * m + k] = hk1;
            if (!std::isfinite(hk1)) throw Error("iterative_solve: NaN/Inf breakdown");
            if (hk1 != 0.0)
                for (std::size_t j = 0; j < n; ++j) v[static_cast<std::size_t>(k) + 1][j] = w[j] / hk1;

            // apply accumulated Givens rotations to the new column
            for (int i = 0; i < k; ++i) {
                double t = cs[i] * h[static_cast<std::size_t>(i) * m + k] +
                           sn[i] * h[static_cast<std::size_t>(i + 1) * m + k];
                h[static_cast<std::size_t>(i + 1) * m + k] =
                    -sn[i] * h[static_cast<std::size_t>(i) * m + k] +
                    cs[i] * h[static_cast<std::size_t>(i + 1) * m + k];
                h[static_cast<std::size_t>(i) * m + k] = t;
            }
            double denom = std::hypot(h[static_cast<std::size_t>(k) * m + k], hk1);
            if (denom == 0.0) {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[static_cast<std::size_t>(k) * m + k] / denom;
                sn[k] = hk1 / denom;
            }
            h[static_cast<std::size_t>(k) * m + k] = denom;
            h[static_cast<std::size_t>(k + 1) * m + k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];

            if (std::abs(g[k + 1]) <= opts.tolerance * norm_b) {
                ++k;
                ++total_it;
                break;
            }
        }

        // back-substitute y and update x
        std::vector<double> y(static_cast<std::size_t>(k));
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= h[static_cast<std::size_t>(i) * m + j] * y[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s / h[static_cast<std::size_t>(i) * m + i];
        }
        for (int i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) res.x[j] += y[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)][j];
        check_finite(res.x, "iterative_solve");
    }

    a.apply(res.x, r, opts.threads);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double final_res = norm2(r) / norm_b;
    if (final_res < best_res) {
        best_res = final_res;
        best_x = res.x;
    }
    if (final_res <= opts.tolerance) {
        res.iterations = total_it;
        res.relative_residual = final_res;
        return res;
    }
    IterResult best{std::move(best_x), total_it, best_res};
    throw NoConvergence(std::move(best), "iterative_solve: GMRES did not reach tolerance " +
                                             std::to_string(opts.tolerance) + " in " +
                                             std::to_string(total_it) + " iterations");
}

}  // namespace

IterResult iterative_solve(const CsrMatrix& a, std::span<const double> b, const IterOptions& opts,
                           std::span<const double> x0) {
    if (a.n_rows() != a.n_cols()) throw Error("iterative_solve: matrix must be square");
    if (b.size() != a.n_rows()) throw Error("iterative_solve: rhs dimension mismatch");
    opts.validate();
    check_finite(b, "iterative_solve");
    if (opts.method == IterMethod::Cg) return cg_solve(a, b, opts, x0);
    return gmres_solve(a, b, opts, x0);
}

}  // namespace tsvstress::linalg
