#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tsvstress/core.hpp"

namespace tsvstress::linalg {

struct Triplet {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;
};

/// Compressed sparse row matrix. Immutable once built; columns within each
/// row are strictly increasing and duplicates have been summed.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint32_t> row_offsets,
              std::vector<std::uint32_t> col_indices, std::vector<double> values);

    static CsrMatrix from_triplets(std::span<const Triplet> triplets, std::size_t rows,
                                   std::size_t cols);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::uint32_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::uint32_t>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y, int threads = 1) const;

    /// Stored entry (row, col), or 0 when absent.
    double coeff(std::uint32_t row, std::uint32_t col) const;

    /// Pointer to the stored entry, or nullptr when the pattern lacks it.
    double* find_entry(std::uint32_t row, std::uint32_t col);

    /// max |A - A^T| over all entries (infinity when patterns differ).
    double max_asymmetry() const;

    /// Pattern and values equal the transpose within tol * max|A|.
    bool is_symmetric(double rel_tol = 1e-12) const;

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::uint32_t> row_offsets_;  // length n_rows + 1
    std::vector<std::uint32_t> col_indices_;
    std::vector<double> values_;
};

CsrMatrix csr_from_triplets(std::span<const Triplet> triplets, std::size_t rows,
                            std::size_t cols);

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x, int threads = 1);

/// Dense row-major matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : n_rows_(rows), n_cols_(cols), values_(rows * cols, 0.0) {}

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    double& at(std::size_t i, std::size_t j) { return values_[i * n_cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * n_cols_ + j]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const double* row(std::size_t i) const { return values_.data() + i * n_cols_; }
    double* row(std::size_t i) { return values_.data() + i * n_cols_; }

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<double> values_;
};

/// Thrown by factorize_spd when a pivot is not positive.
struct NotPositiveDefinite : Error {
    NotPositiveDefinite(std::size_t pivot_index, double pivot_value);
    std::size_t pivot_index;
    double pivot_value;
};

/// Reusable Cholesky-family factorization of an SPD CsrMatrix. Solving with
/// distinct right-hand sides is safe from multiple threads.
class SymmetricFactor {
public:
    SymmetricFactor();
    ~SymmetricFactor();
    SymmetricFactor(SymmetricFactor&&) noexcept;
    SymmetricFactor& operator=(SymmetricFactor&&) noexcept;

    std::size_t dim() const;
    std::vector<double> solve(std::span<const double> rhs) const;

    friend SymmetricFactor factorize_spd(const CsrMatrix& a);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SymmetricFactor factorize_spd(const CsrMatrix& a);

std::vector<double> solve_factored(const SymmetricFactor& factor, std::span<const double> rhs);

enum class Precond { None, Diagonal, BlockDiagonal };
enum class IterMethod { Cg, Gmres };

struct IterOptions {
    double tolerance = 1e-10;   // relative residual
    int max_iterations = 10000;
    Precond precond = Precond::Diagonal;
    IterMethod method = IterMethod::Cg;
    int gmres_restart = 50;
    int threads = 1;

    void validate() const;
};

struct IterResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Thrown when the iteration budget runs out; carries the best iterate seen.
struct NoConvergence : Error {
    NoConvergence(IterResult best_result, std::string what);
    IterResult best;
};

/// Solve A x = b to opts.tolerance relative residual. CG requires a
/// symmetric matrix; GMRES handles the general square case.
IterResult iterative_solve(const CsrMatrix& a, std::span<const double> b,
                           const IterOptions& opts = {},
                           std::span<const double> x0 = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace tsvstress::linalg
