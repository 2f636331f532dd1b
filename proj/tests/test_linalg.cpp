#include <doctest.h>

#include <cmath>
#include <random>

#include "tsvstress/linalg.hpp"

using namespace tsvstress;
using namespace tsvstress::linalg;

namespace {

CsrMatrix dense_to_csr(const std::vector<std::vector<double>>& rows) {
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            if (rows[r][c] != 0.0)
                t.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), rows[r][c]});
    return csr_from_triplets(t, rows.size(), rows.empty() ? 0 : rows[0].size());
}

CsrMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i)
        t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0});
    return csr_from_triplets(t, n, n);
}

/// Random SPD matrix M^T M + n I with a banded pattern.
CsrMatrix random_spd(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r < 3 ? 0 : r - 3; c < std::min(n, r + 4); ++c) m[r][c] = dist(rng);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t k = 0; k < n; ++k) a[r][c] += m[k][r] * m[k][c];
            if (r == c) a[r][c] += static_cast<double>(n);
        }
    return dense_to_csr(a);
}

std::vector<double> random_vector(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

TEST_CASE("csr_from_triplets sums duplicates") {
    std::vector<Triplet> t = {{0, 0, 1.0}, {0, 0, 2.0}};
    CsrMatrix a = csr_from_triplets(t, 1, 1);
    CHECK(a.nnz() == 1);
    CHECK(a.coeff(0, 0) == 3.0);
}

TEST_CASE("csr_from_triplets empty input gives a zero matrix") {
    CsrMatrix a = csr_from_triplets({}, 2, 2);
    CHECK(a.nnz() == 0);
    CHECK(a.row_offsets() == std::vector<std::uint32_t>{0, 0, 0});
    std::vector<double> y = spmv(a, std::vector<double>{1.0, 2.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("csr_from_triplets single entry") {
    std::vector<Triplet> t = {{1, 0, 5.0}};
    CsrMatrix a = csr_from_triplets(t, 2, 2);
    std::vector<double> y = spmv(a, std::vector<double>{1.0, 0.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 5.0);
}

TEST_CASE("csr_from_triplets rejects out-of-range indices") {
    std::vector<Triplet> t = {{2, 0, 1.0}};
    CHECK_THROWS_AS(csr_from_triplets(t, 2, 2), Error);
}

TEST_CASE("spmv on identity and a hand-checked product") {
    std::vector<double> x = {1.0, 2.0, 3.0};
    CHECK(spmv(identity(3), x) == x);

    CsrMatrix a = dense_to_csr({{2.0, 0.0}, {1.0, 3.0}});
    std::vector<double> y = spmv(a, std::vector<double>{1.0, 1.0});
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 4.0);
}

TEST_CASE("spmv rejects dimension mismatch") {
    CHECK_THROWS_AS(spmv(identity(3), std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("spmv is linear") {
    CsrMatrix a = random_spd(40, 7);
    auto x = random_vector(40, 8);
    auto y = random_vector(40, 9);
    double alpha = 0.37, beta = -2.25;
    std::vector<double> combo(40);
    for (std::size_t i = 0; i < 40; ++i) combo[i] = alpha * x[i] + beta * y[i];
    std::vector<double> lhs = spmv(a, combo);
    std::vector<double> ax = spmv(a, x), ay = spmv(a, y);
    for (std::size_t i = 0; i < 40; ++i) ax[i] = alpha * ax[i] + beta * ay[i];
    CHECK(rel_diff(lhs, ax) < 1e-13);
}

TEST_CASE("factorize_spd identity and 2x2 with hand-computed solution") {
    SymmetricFactor f = factorize_spd(identity(4));
    auto b = random_vector(4, 3);
    CHECK(rel_diff(solve_factored(f, b), b) < 1e-14);

    // [[4,1],[1,3]] x = (1,2): Cramer gives x = (1/11, 7/11)
    CsrMatrix a = dense_to_csr({{4.0, 1.0}, {1.0, 3.0}});
    SymmetricFactor f2 = factorize_spd(a);
    std::vector<double> x = solve_factored(f2, std::vector<double>{1.0, 2.0});
    CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-13));
    CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-13));
}

TEST_CASE("factorize_spd reports indefiniteness with a pivot index") {
    CsrMatrix a = dense_to_csr({{1.0, 2.0}, {2.0, 1.0}});  // eigenvalues 3, -1
    try {
        factorize_spd(a);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot_index < 2);
        CHECK(e.pivot_value <= 0.0);
    }
}

TEST_CASE("factorize_spd rejects asymmetry") {
    CsrMatrix a = dense_to_csr({{4.0, 1.0}, {2.0, 3.0}});
    CHECK_THROWS_AS(factorize_spd(a), Error);
}

TEST_CASE("solve_factored zero rhs and dimension checks") {
    SymmetricFactor f = factorize_spd(random_spd(10, 5));
    std::vector<double> x = solve_factored(f, std::vector<double>(10, 0.0));
    for (double v : x) CHECK(v == 0.0);
    CHECK_THROWS_AS(solve_factored(f, std::vector<double>(9, 0.0)), Error);
}

TEST_CASE("factor/solve round trip on random SPD instances") {
    for (std::uint32_t seed : {11u, 12u, 13u}) {
        CsrMatrix a = random_spd(60, seed);
        SymmetricFactor f = factorize_spd(a);
        auto x_true = random_vector(60, seed + 100);
        std::vector<double> b = spmv(a, x_true);
        std::vector<double> x = solve_factored(f, b);
        std::vector<double> back = spmv(a, x);
        CHECK(rel_diff(back, b) < 1e-10);
    }
}

TEST_CASE("iterative_solve identity converges immediately") {
    auto b = random_vector(5, 21);
    IterResult r = iterative_solve(identity(5), b);
    CHECK(r.iterations <= 1);
    CHECK(rel_diff(r.x, b) < 1e-12);
}

TEST_CASE("iterative_solve matches the direct solver") {
    CsrMatrix a = dense_to_csr({{4.0, 1.0}, {1.0, 3.0}});
    IterOptions opts;
    opts.tolerance = 1e-12;
    IterResult r = iterative_solve(a, std::vector<double>{1.0, 2.0}, opts);
    CHECK(std::abs(r.x[0] - 1.0 / 11.0) < 1e-9);
    CHECK(std::abs(r.x[1] - 7.0 / 11.0) < 1e-9);
}

TEST_CASE("iterative_solve meets the requested residual on a Laplacian") {
    // 1D Laplacian stencil, SPD
    std::vector<Triplet> t;
    const std::size_t n = 100;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 2.0});
        if (i + 1 < n) {
            t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1), -1.0});
            t.push_back({static_cast<std::uint32_t>(i + 1), static_cast<std::uint32_t>(i), -1.0});
        }
    }
    CsrMatrix a = csr_from_triplets(t, n, n);
    auto b = random_vector(n, 33);
    IterOptions opts;
    opts.tolerance = 1e-10;
    IterResult r = iterative_solve(a, b, opts);

    // residual recomputed independently of the solver
    std::vector<double> res = spmv(a, r.x);
    for (std::size_t i = 0; i < n; ++i) res[i] -= b[i];
    CHECK(norm2(res) / norm2(b) <= 1e-10);
}

TEST_CASE("iterative_solve preconditioner variants agree") {
    CsrMatrix a = random_spd(60, 17);
    auto b = random_vector(60, 18);
    IterOptions opts;
    opts.tolerance = 1e-12;
    std::vector<std::vector<double>> sols;
    for (Precond p : {Precond::None, Precond::Diagonal, Precond::BlockDiagonal}) {
        opts.precond = p;
        sols.push_back(iterative_solve(a, b, opts).x);
    }
    CHECK(rel_diff(sols[1], sols[0]) < 1e-9);
    CHECK(rel_diff(sols[2], sols[0]) < 1e-9);
}

TEST_CASE("iterative_solve and solve_factored agree within 10x tolerance") {
    CsrMatrix a = random_spd(90, 41);
    auto b = random_vector(90, 42);
    IterOptions opts;
    opts.tolerance = 1e-11;
    IterResult iter = iterative_solve(a, b, opts);
    std::vector<double> direct = solve_factored(factorize_spd(a), b);
    CHECK(rel_diff(iter.x, direct) < 1e-10);
}

TEST_CASE("iterative_solve reports non-convergence with the best iterate") {
    CsrMatrix a = random_spd(50, 51);
    auto b = random_vector(50, 52);
    IterOptions opts;
    opts.tolerance = 1e-14;
    opts.max_iterations = 2;
    try {
        iterative_solve(a, b, opts);
        FAIL("expected NoConvergence");
    } catch (const NoConvergence& e) {
        CHECK(e.best.x.size() == 50);
        CHECK(e.best.relative_residual > 0.0);
    }
}

TEST_CASE("iterative_solve zero rhs returns zero") {
    IterResult r = iterative_solve(random_spd(8, 60), std::vector<double>(8, 0.0));
    for (double v : r.x) CHECK(v == 0.0);
    CHECK(r.iterations == 0);
}

TEST_CASE("gmres handles a nonsymmetric system") {
    CsrMatrix a = dense_to_csr({{3.0, 1.0, 0.0}, {0.0, 2.0, 0.5}, {0.2, 0.0, 4.0}});
    std::vector<double> x_true = {1.0, -2.0, 0.5};
    std::vector<double> b = spmv(a, x_true);
    IterOptions opts;
    opts.method = IterMethod::Gmres;
    opts.tolerance = 1e-12;
    IterResult r = iterative_solve(a, b, opts);
    CHECK(rel_diff(r.x, x_true) < 1e-9);
}

TEST_CASE("gmres agrees with the direct solver on an SPD system") {
    CsrMatrix a = random_spd(40, 71);
    auto b = random_vector(40, 72);
    IterOptions opts;
    opts.method = IterMethod::Gmres;
    opts.tolerance = 1e-12;
    IterResult r = iterative_solve(a, b, opts);
    std::vector<double> direct = solve_factored(factorize_spd(a), b);
    CHECK(rel_diff(r.x, direct) < 1e-9);
}

TEST_CASE("spmv with threads matches single-threaded bitwise") {
    CsrMatrix a = random_spd(120, 91);
    auto x = random_vector(120, 92);
    std::vector<double> y1(120), y4(120);
    a.apply(x, y1, 1);
    a.apply(x, y4, 4);
    CHECK(y1 == y4);
}

TEST_CASE("iterative_solve rejects NaN input") {
    CsrMatrix a = dense_to_csr({{4.0, 1.0}, {1.0, 3.0}});
    std::vector<double> b = {1.0, std::nan("")};
    CHECK_THROWS_WITH_AS(iterative_solve(a, b), doctest::Contains("NaN"), Error);
}
