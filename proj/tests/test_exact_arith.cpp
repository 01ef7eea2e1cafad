#include "support.hpp"

#include <gtest/gtest.h>

using namespace k3test;

TEST(Rational, ParsesCanonicalForms)
{
    EXPECT_EQ(parse_rational("3"), Rat(3));
    EXPECT_EQ(parse_rational("-7/14"), Rat(-1, 2));
    EXPECT_EQ(parse_rational("6/4").get_str(), "3/2");
    EXPECT_THROW(parse_rational("1/0"), parse_error);
    EXPECT_THROW(parse_rational("1/-2"), parse_error);
    EXPECT_THROW(parse_rational("0.5"), parse_error);
    EXPECT_THROW(parse_rational(""), parse_error);
    EXPECT_THROW(parse_integer("1/2"), parse_error);
}

TEST(Rational, HugeValuesStayExact)
{
    const Rat x = parse_rational("123456789012345678901234567890/7");
    EXPECT_EQ(Rat(x * 7).get_str(), "123456789012345678901234567890");
}

TEST(Snf, Diag23)
{
    const IntMatrix a{{2, 0}, {0, 3}};
    const SmithForm s = snf(a);
    EXPECT_EQ(s.D, (IntMatrix{{1, 0}, {0, 6}}));
    EXPECT_EQ(s.U * a * s.V, s.D);
}

TEST(Snf, IdentityAndZero)
{
    EXPECT_EQ(snf(IntMatrix::identity(3)).D, IntMatrix::identity(3));
    EXPECT_EQ(snf(IntMatrix(2, 2)).D, IntMatrix(2, 2));
}

TEST(Snf, RandomMatricesMatchDeterminantalDivisors)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 150; ++t) {
        std::uniform_int_distribution<int> dim(1, 4);
        const std::size_t r = dim(rng), c = dim(rng);
        const IntMatrix a = random_int_matrix(rng, r, c, -6, 6);
        const SmithForm s = snf(a);
        ASSERT_EQ(s.U * a * s.V, s.D);
        ASSERT_TRUE(abs_int(determinant(s.U)) == 1);
        ASSERT_TRUE(abs_int(determinant(s.V)) == 1);
        const IntVector d = s.invariant_factors();
        IntVector nonzero;
        for (const Int& x : d)
            if (x != 0) nonzero.push_back(x);
        for (std::size_t i = 1; i < nonzero.size(); ++i) ASSERT_EQ(nonzero[i] % nonzero[i - 1], 0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                if (i != j) { ASSERT_EQ(s.D(i, j), 0); }
        ASSERT_EQ(nonzero, invariant_factors_by_minors(a)) << a;
    }
}

TEST(Hnf, SpansAgreeByMembership)
{
    const IntMatrix a{{2, 1}, {0, 1}};
    const IntMatrix h = hnf(a);
    for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_TRUE(lattice_coordinates(h, to_rational(a.column(j))).has_value());
    for (std::size_t j = 0; j < h.cols(); ++j) EXPECT_TRUE(lattice_coordinates(a, to_rational(h.column(j))).has_value());
}

TEST(Hnf, IdentityAndColumn)
{
    EXPECT_EQ(hnf(IntMatrix::identity(3)), IntMatrix::identity(3));
    EXPECT_EQ(hnf(IntMatrix{{2}, {4}}), (IntMatrix{{2}, {4}}));
}

TEST(Hnf, RandomIsCanonicalForTheSpan)
{
    std::mt19937_64 rng(12);
    for (int t = 0; t < 100; ++t) {
        const IntMatrix a = random_int_matrix(rng, 3, 4, -5, 5);
        const IntMatrix h = hnf(a);
        // multiply by a random unimodular matrix: same span, same HNF
        IntMatrix w = IntMatrix::identity(4);
        std::uniform_int_distribution<int> d(-2, 2);
        for (int k = 0; k < 6; ++k) {
            const std::size_t i = k % 4, j = (k + 1 + k / 4) % 4;
            const int c = d(rng);
            for (std::size_t r = 0; r < 4; ++r) w(r, j) += c * w(r, i);
        }
        ASSERT_EQ(hnf(a * w), h);
        for (std::size_t j = 0; j < a.cols(); ++j)
            ASSERT_TRUE(lattice_coordinates(h, to_rational(a.column(j))).has_value());
    }
}

TEST(Solve, Examples)
{
    const SolveResult id = solve_and_kernel(RatMatrix::identity(2), rv({3, -4}));
    ASSERT_TRUE(id.solution);
    EXPECT_EQ(*id.solution, rv({3, -4}));
    EXPECT_TRUE(id.kernel.empty());

    const SolveResult row = solve_and_kernel(RatMatrix{{1, 1}}, rv({0}));
    ASSERT_TRUE(row.solution);
    EXPECT_EQ(*row.solution, rv({0, 0}));
    ASSERT_EQ(row.kernel.size(), 1u);
    // kernel spanned by [1, -1] up to sign
    EXPECT_EQ(row.kernel[0][0], -row.kernel[0][1]);
    EXPECT_NE(row.kernel[0][0], 0);

    EXPECT_FALSE(solve_and_kernel(RatMatrix{{1}, {1}}, rv({1, 2})).solution);
}

TEST(Solve, RandomSystems)
{
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        const RatMatrix a = to_rational(random_int_matrix(rng, 3, 5, -4, 4));
        const RatVector x = to_rational(random_vector(rng, 5, 3));
        const SolveResult s = solve_and_kernel(a, a * x);
        ASSERT_TRUE(s.solution);
        ASSERT_EQ(a * *s.solution, a * x);
        ASSERT_EQ(s.kernel.size(), 5 - rank(a));
        for (const RatVector& k : s.kernel) ASSERT_TRUE(is_zero(a * k));
    }
}

TEST(Determinant, AgreesWithLaplace)
{
    std::mt19937_64 rng(14);
    for (int t = 0; t < 60; ++t) {
        const RatMatrix a = to_rational(random_int_matrix(rng, 4, 4, -5, 5));
        ASSERT_EQ(determinant(a), det_laplace(a));
        if (determinant(a) != 0) { ASSERT_EQ(a * inverse(a), RatMatrix::identity(4)); }
    }
    EXPECT_THROW(inverse(RatMatrix{{1, 2}, {2, 4}}), math_error);
}

TEST(Saturate, Examples)
{
    EXPECT_EQ(saturate(std::vector<IntVector>{iv({2, 0})}, 2), (IntMatrix{{1}, {0}}));
    EXPECT_EQ(saturate(std::vector<IntVector>{iv({1, 0}), iv({0, 1})}, 2), IntMatrix::identity(2));
    // {[2,2],[0,4]} has full rank, so its saturation is Z^2; the span has index 8.
    const std::vector<IntVector> g{iv({2, 2}), iv({0, 4})};
    EXPECT_EQ(saturate(g, 2), IntMatrix::identity(2));
    EXPECT_EQ(invariant_factors_by_minors(IntMatrix::from_columns(g, 2)), iv({2, 4}));
}

TEST(Saturate, IdempotentWithFiniteIndex)
{
    std::mt19937_64 rng(15);
    for (int t = 0; t < 100; ++t) {
        const IntMatrix g = random_int_matrix(rng, 4, 2, -6, 6);
        if (rank(g) < 2) continue;
        const IntMatrix s = saturate(g);
        ASSERT_EQ(s.cols(), 2u);
        ASSERT_EQ(saturate(s), s);
        for (std::size_t j = 0; j < g.cols(); ++j) ASSERT_TRUE(lattice_coordinates(s, to_rational(g.column(j))));
        // index of span(g) in its saturation = product of invariant factors of g
        const RatMatrix coords = [&] {
            RatMatrix c(2, 2);
            for (std::size_t j = 0; j < 2; ++j) {
                const IntVector x = *lattice_coordinates(s, to_rational(g.column(j)));
                c(0, j) = x[0];
                c(1, j) = x[1];
            }
            return c;
        }();
        Int prod = 1;
        for (const Int& d : invariant_factors_by_minors(g)) prod *= d;
        ASSERT_EQ(abs(determinant(coords)), Rat(prod));
        // primitive: invariant factors all one
        for (const Int& d : snf(s).invariant_factors()) ASSERT_EQ(d, 1);
    }
}

TEST(IntegerKernel, IsPrimitiveAndComplete)
{
    std::mt19937_64 rng(16);
    for (int t = 0; t < 60; ++t) {
        const RatMatrix a = to_rational(random_int_matrix(rng, 2, 4, -4, 4));
        const IntMatrix k = integer_kernel(a);
        ASSERT_EQ(k.cols(), 4 - rank(a));
        ASSERT_TRUE((a * to_rational(k)).is_zero());
        for (const Int& d : snf(k).invariant_factors()) ASSERT_EQ(d, 1);
        for_each_in_box(4, 2, [&](const IntVector& x) {
            if (is_zero(a * to_rational(x))) { ASSERT_TRUE(lattice_coordinates(k, to_rational(x))); }
        });
    }
}

TEST(IntegralPreimage, BruteForce)
{
    const RatMatrix m{{Rat(1, 2), 0}, {0, 1}};
    const IntMatrix p = integral_preimage(m);
    for_each_in_box(2, 4, [&](const IntVector& x) {
        EXPECT_EQ(is_integral(m * to_rational(x)), lattice_coordinates(p, to_rational(x)).has_value());
    });
}
