#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "twinnn/numcore.hpp"

using namespace twinnn;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    Rng rng(1);
    const Matrix m = random_matrix(rng, 3, 4);
    EXPECT_EQ(matmul(Matrix::identity(3), m), m);
}

TEST(Matmul, HandComputedProduct) {
    const Matrix p = matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{0}, {1}});
    EXPECT_EQ(p, (Matrix{{2}, {4}}));
}

TEST(Matmul, MatchesTripleLoop) {
    Rng rng(7);
    const Matrix a = random_matrix(rng, 7, 5);
    const Matrix b = random_matrix(rng, 5, 3);
    EXPECT_LE(max_abs_diff(matmul(a, b), naive_product(a, b)), 1e-12);
}

TEST(Matmul, RejectsMismatchedShapes) {
    EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), dimension_error);
}

TEST(Matmul, Associativity) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 1 + rng.below(6), n = 1 + rng.below(6), p = 1 + rng.below(6), q = 1 + rng.below(6);
        const Matrix a = random_matrix(rng, m, n), b = random_matrix(rng, n, p), c = random_matrix(rng, p, q);
        EXPECT_LE(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-9);
    }
}

TEST(Matvec, AgreesWithMatmul) {
    Rng rng(3);
    const Matrix a = random_matrix(rng, 4, 6);
    Vector x(6);
    for (auto& v : x) v = rng.normal();
    const Vector y = matvec(a, x);
    const Vector yt = matvec_transposed(a.transpose(), x);
    Matrix xm(6, 1, x);
    const Matrix ym = matmul(a, xm);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(y[i], ym(i, 0), 1e-14);
        EXPECT_NEAR(yt[i], ym(i, 0), 1e-14);
    }
}

TEST(Gram, EqualsTransposeTimesSelf) {
    Rng rng(5);
    const Matrix a = random_matrix(rng, 9, 4);
    EXPECT_LE(max_abs_diff(gram(a), naive_product(a.transpose(), a)), 1e-12);
}

TEST(SolveSpd, IdentitySystem) {
    const Vector x = solve_spd(Matrix::identity(4), Vector{1, 2, 3, 4}, 0.0);
    EXPECT_EQ(x, (Vector{1, 2, 3, 4}));
}

TEST(SolveSpd, DiagonalSystem) {
    const Vector x = solve_spd(Matrix{{2, 0}, {0, 4}}, Vector{2, 8}, 0.0);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveSpd, MultiplyBackResidual) {
    Rng rng(19);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(20);
        const Matrix a = random_matrix(rng, n + rng.below(5), n);
        Matrix m = gram(a);
        for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
        Vector rhs(n);
        for (auto& v : rhs) v = rng.uniform(-10.0, 10.0);
        const double ridge = t % 2 ? 0.0 : rng.uniform(0.0, 0.5);
        const Vector x = solve_spd(m, rhs, ridge);
        Matrix shifted = m;
        for (std::size_t i = 0; i < n; ++i) shifted(i, i) += ridge;
        Vector r = matvec(shifted, x);
        for (std::size_t i = 0; i < n; ++i) r[i] -= rhs[i];
        ASSERT_LE(norm_inf(r), 1e-8 * (1.0 + norm_inf(rhs))) << "instance " << t;
    }
}

TEST(SolveSpd, NotPositiveDefiniteSuggestsRidge) {
    try {
        solve_spd(Matrix{{1, 2}, {2, 1}}, Vector{1, 1}, 0.0);
        FAIL() << "expected numerical_error";
    } catch (const numerical_error& e) {
        EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
    }
}

TEST(SolveSpd, RejectsNonSquare) { EXPECT_THROW(solve_spd(Matrix(2, 3), Vector{1, 2}, 0.0), dimension_error); }

TEST(SolveSpd, SingularBecomesSolvableWithRidge) {
    const Matrix m{{1, 1}, {1, 1}};
    EXPECT_THROW(solve_spd(m, Vector{1, 1}, 0.0), numerical_error);
    const Vector x = solve_spd(m, Vector{1, 1}, default_ridge(m) + 1e-3);
    EXPECT_TRUE(std::isfinite(x[0]) && std::isfinite(x[1]));
}

TEST(DefaultRidge, ScalesWithTrace) {
    EXPECT_DOUBLE_EQ(default_ridge(Matrix{{2, 0}, {0, 4}}), 1e-6 * 3.0);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(Rng, DifferentSeedsDiffer) {
    Rng a(1), b(2);
    EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformMeanMonteCarlo) {
    Rng rng(2024);
    double s = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
    }
    EXPECT_NEAR(s / 1e5, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
    Rng rng(9);
    double s = 0.0, ss = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(3.0, 2.0);
        s += z;
        ss += z * z;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 3.0, 0.05);
    EXPECT_NEAR(std::sqrt(ss / n - mean * mean), 2.0, 0.05);
}

TEST(Rng, InvalidParameters) {
    Rng rng(0);
    EXPECT_THROW(rng.normal(0.0, 0.0), usage_error);
    EXPECT_THROW(rng.uniform(2.0, 1.0), usage_error);
    EXPECT_THROW(rng.below(0), usage_error);
}

TEST(Rng, ShuffleIsPermutation) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(s);
        std::vector<int> v(10);
        std::iota(v.begin(), v.end(), 0);
        rng.shuffle(v);
        std::vector<int> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < 10; ++i) ASSERT_EQ(sorted[i], i);
    }
}

TEST(Rng, BelowIsRoughlyUniform) {
    Rng rng(77);
    std::vector<int> counts(6, 0);
    for (int i = 0; i < 60000; ++i) counts[rng.below(6)]++;
    for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(DeriveSeed, DependsOnEveryKey) {
    EXPECT_EQ(derive_seed(5, 1, 2), derive_seed(5, 1, 2));
    EXPECT_NE(derive_seed(5, 1, 2), derive_seed(5, 2, 1));
    EXPECT_NE(derive_seed(5, 1), derive_seed(6, 1));
}
