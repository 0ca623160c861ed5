#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace rkhs_lab;
using namespace rkhs_test;

namespace {

constexpr double tight = 1e-12;

MultiIndex mi(std::initializer_list<int> l) { return MultiIndex(l); }

bool same_multiset(std::vector<std::vector<cplx>> a, std::vector<std::vector<cplx>> b, double tol)
{
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& p : a) {
        bool found = false;
        for (std::size_t j = 0; j < b.size() && !found; ++j) {
            if (used[j]) continue;
            double dist = 0;
            for (std::size_t i = 0; i < p.size(); ++i) dist = std::max(dist, std::abs(p[i] - b[j][i]));
            if (dist <= tol) used[j] = found = true;
        }
        if (!found) return false;
    }
    return true;
}

} // namespace

TEST(MatrixTuple, RejectsMismatchedSizes)
{
    EXPECT_THROW(MatrixTuple({CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)}), error);
    EXPECT_THROW(MatrixTuple({CMatrix::Zero(2, 3)}), error);
    EXPECT_THROW(MatrixTuple(std::vector<CMatrix>{}), error);
}

TEST(CommutatorDefect, SingleMatrixIsZero)
{
    std::mt19937_64 rng(1);
    EXPECT_EQ(commutator_defect(MatrixTuple({random_matrix(rng, 3, 3)})), 0.0);
}

TEST(CommutatorDefect, DiagonalPairIsZero)
{
    CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
    a.diagonal() << 1.0, cplx(0, 2);
    b.diagonal() << 3.0, -1.0;
    EXPECT_EQ(commutator_defect(MatrixTuple({a, b})), 0.0);
}

TEST(CommutatorDefect, ShiftPair)
{
    CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
    a(0, 1) = 1.0;
    b(1, 0) = 1.0;
    EXPECT_NEAR(commutator_defect(MatrixTuple({a, b})), std::sqrt(2.0), tight);
}

TEST(JointTriangularize, TriangularInputIsUntouched)
{
    std::mt19937_64 rng(2);
    CMatrix n = random_matrix(rng, 3, 3).triangularView<Eigen::Upper>();
    MatrixTuple t({n, n * n + 2.0 * n});
    auto tri = joint_triangularize(t);
    EXPECT_LT(max_abs(tri.q - CMatrix::Identity(3, 3)), tight);
    for (int i = 0; i < 2; ++i) EXPECT_LT(max_abs(tri.upper[i] - t[i]), tight);
}

TEST(JointTriangularize, ExamplePairUnchanged)
{
    auto t   = example_pair(cplx(0.3, 0.1), cplx(-0.2, 0.4));
    auto tri = joint_triangularize(t);
    EXPECT_LT(max_abs(tri.q - CMatrix::Identity(2, 2)), tight);
    EXPECT_LT(max_abs(tri.upper[0] - t[0]), tight);
}

TEST(JointTriangularize, DiagonalizablePairKeepsPairing)
{
    std::mt19937_64 rng(3);
    CMatrix q = random_unitary(rng, 3);
    std::vector<cplx> a{0.1, cplx(0.2, 0.3), -0.4}, b{cplx(0, 0.5), 0.25, cplx(-0.1, -0.1)};
    CMatrix da = CMatrix::Zero(3, 3), db = CMatrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) da(k, k) = a[std::size_t(k)], db(k, k) = b[std::size_t(k)];
    MatrixTuple t({q * da * q.adjoint(), q * db * q.adjoint()});

    auto tri = joint_triangularize(t);
    EXPECT_LT(max_abs(tri.q.adjoint() * tri.q - CMatrix::Identity(3, 3)), 1e-12);
    for (int i = 0; i < 2; ++i) {
        CMatrix u = tri.upper[i];
        EXPECT_LT(max_abs(u - CMatrix(u.diagonal().asDiagonal())), 1e-10);
        EXPECT_LT(max_abs(tri.q * u * tri.q.adjoint() - t[i]), 1e-12);
    }
    // oracle: independent eigendecomposition of the first matrix, paired through its eigenvectors
    Eigen::ComplexEigenSolver<CMatrix> es(t[0]);
    std::vector<std::vector<cplx>> expect;
    for (int k = 0; k < 3; ++k) {
        CVector v = es.eigenvectors().col(k);
        expect.push_back({es.eigenvalues()(k), v.dot(t[1] * v) / v.squaredNorm()});
    }
    EXPECT_TRUE(same_multiset(spectrum_of_triangular(tri.upper).points, expect, 1e-10));
}

TEST(JointTriangularize, NonCommutingThrows)
{
    CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
    a(0, 1) = 1.0;
    b(1, 0) = 1.0;
    try {
        joint_triangularize(MatrixTuple({a, b}));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::not_commuting);
        EXPECT_NEAR(e.residual(), std::sqrt(2.0), tight);
    }
}

TEST(JointTriangularize, RandomTuplesAreTriangularized)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        auto t   = random_commuting(rng, 1 + trial % 3, 1 + trial % 5, 0.9, trial % 2 == 1);
        auto tri = joint_triangularize(t);
        EXPECT_LT(max_abs(tri.q.adjoint() * tri.q - CMatrix::Identity(t.m(), t.m())), 1e-12);
        for (int i = 0; i < t.d(); ++i) {
            CMatrix u = tri.upper[i];
            EXPECT_LT(max_abs(CMatrix(u.triangularView<Eigen::StrictlyLower>())), 1e-8);
            EXPECT_LT(max_abs(tri.q * u * tri.q.adjoint() - t[i]), 1e-10);
        }
    }
}

TEST(JointSpectrum, DiagonalTuple)
{
    CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
    a.diagonal() << 0.1, 0.2;
    b.diagonal() << 0.3, 0.4;
    auto js = joint_spectrum(MatrixTuple({a, b}));
    EXPECT_TRUE(same_multiset(js.points, {{0.1, 0.3}, {0.2, 0.4}}, tight));
    EXPECT_TRUE(js.inside_polydisc());
}

TEST(JointSpectrum, ExamplePairSinglePointTwice)
{
    const cplx l(0.2, -0.1), g(0.5, 0.3);
    auto js = joint_spectrum(example_pair(l, g));
    ASSERT_EQ(js.points.size(), 2u);
    for (const auto& p : js.points) {
        EXPECT_NEAR(std::abs(p[0] - l), 0.0, tight);
        EXPECT_NEAR(std::abs(p[1] - g), 0.0, tight);
    }
}

TEST(JointSpectrum, InvariantUnderUnitarySimilarity)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto t  = random_commuting(rng, 2, 4, 0.8, trial % 2 == 0);
        auto q  = random_unitary(rng, 4);
        auto s1 = joint_spectrum(t);
        auto s2 = joint_spectrum(t.similar(q));
        // defective clusters are only resolvable to about eps^(1/m)
        EXPECT_TRUE(same_multiset(s1.points, s2.points, trial % 2 == 0 ? 1e-3 : 1e-9));
    }
}

TEST(PolySeries, ScalarEvaluationMatchesDirectSum)
{
    PolySeries p(2, 3);
    p.add(mi({0, 0}), 1.0).add(mi({1, 2}), cplx(0, 2)).add(mi({3, 0}), -1.0);
    const cplx x(0.3, 0.2), y(-0.5, 0.1);
    EXPECT_NEAR(std::abs(p({x, y}) - (1.0 + cplx(0, 2) * x * y * y - x * x * x)), 0.0, tight);
    EXPECT_THROW(p.add(mi({2, 2}), 1.0), error);
    EXPECT_THROW(p({x}), error);
}

TEST(PolySeries, Derivative)
{
    PolySeries p(2, 3);
    p.add(mi({1, 2}), 3.0).add(mi({0, 1}), 1.0);
    auto dx = p.derivative(0), dy = p.derivative(1);
    EXPECT_EQ(dx.coeffs.at(mi({0, 2})), cplx(3.0));
    EXPECT_EQ(dy.coeffs.at(mi({1, 1})), cplx(6.0));
    EXPECT_EQ(dy.coeffs.at(mi({0, 0})), cplx(1.0));
}

TEST(EvalPoly, ConstantOneIsIdentity)
{
    std::mt19937_64 rng(6);
    auto t = random_commuting(rng, 2, 3, 0.5, false);
    EXPECT_LT(max_abs(eval_poly(t, PolySeries::constant(2, 1.0)) - CMatrix::Identity(3, 3)), tight);
}

TEST(EvalPoly, DimensionMismatch)
{
    try {
        eval_poly(example_pair(0, 0), PolySeries::constant(3, 1.0));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::dimension_mismatch);
    }
}

TEST(EvalPoly, ExampleFirstCoordinate)
{
    CMatrix expect(2, 2);
    expect << 0, 2, 0, 0;
    EXPECT_LT(max_abs(eval_poly(example_pair(0, 0), PolySeries::coordinate(2, 0)) - expect), tight);
}

TEST(EvalPoly, ExampleGeneralPolynomial)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const cplx l = random_in_disc(rng, 0.7), g = random_in_disc(rng, 0.7);
        auto f = random_poly(rng, 2, 4);
        CMatrix fm = eval_poly(example_pair(l, g), f);
        const cplx fz = f({l, g});
        const cplx off = 2.0 * f.derivative(0)({l, g}) + f.derivative(1)({l, g});
        CMatrix expect(2, 2);
        expect << fz, off, 0, fz;
        EXPECT_LT(max_abs(fm - expect), 1e-10);
    }
}

TEST(EvalPoly, LinearAndMultiplicative)
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto t = random_commuting(rng, 2, 3, 0.7, trial % 2 == 0);
        auto f = random_poly(rng, 2, 4), g = random_poly(rng, 2, 4);
        const cplx s = random_cplx(rng);
        CMatrix ff = eval_poly(t, f), gg = eval_poly(t, g);
        EXPECT_LT(max_abs(eval_poly(t, f + s * g) - (ff + s * gg)), 1e-10);
        EXPECT_LT(max_abs(eval_poly(t, f * g) - ff * gg), 1e-10);
    }
}

TEST(EvalPoly, TriangularInputGivesTriangularOutput)
{
    std::mt19937_64 rng(9);
    CMatrix n = random_matrix(rng, 4, 4, 0.3).triangularView<Eigen::Upper>();
    MatrixTuple t({n, 0.5 * n * n - n});
    auto f = random_poly(rng, 2, 3);
    CMatrix fm = eval_poly(t, f);
    EXPECT_LT(max_abs(CMatrix(fm.triangularView<Eigen::StrictlyLower>())), tight);
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(fm(k, k) - f({t[0](k, k), t[1](k, k)})), 0.0, 1e-12);
}

TEST(EvalCauchy, ConstantOneIsIdentity)
{
    std::mt19937_64 rng(10);
    auto t = random_commuting(rng, 2, 3, 0.5, true);
    EXPECT_LT(max_abs(eval_cauchy(t, PolySeries::constant(2, 1.0), 32) - CMatrix::Identity(3, 3)), 1e-10);
}

TEST(EvalCauchy, AgreesWithEvalPoly)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        auto t = random_commuting(rng, 2, 3, 0.5, trial % 2 == 1);
        auto f = random_poly(rng, 2, 4);
        EXPECT_LT(max_abs(eval_cauchy(t, f, 64) - eval_poly(t, f)), 1e-8);
    }
}

TEST(EvalCauchy, ExampleProduct)
{
    const cplx l(0.2, 0.1), g(-0.3, 0.05);
    PolySeries f(2, 2);
    f.add(mi({1, 1}), 1.0);
    CMatrix expect(2, 2);
    expect << l * g, 2.0 * g + l, 0, l * g;
    EXPECT_LT(max_abs(eval_cauchy(example_pair(l, g), f, 64) - expect), 1e-8);
}

TEST(EvalCauchy, ConvergesGeometrically)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        auto t = random_commuting(rng, 2, 3, 0.5, trial % 2 == 1);
        auto f = random_poly(rng, 2, 3);
        CMatrix exact = eval_poly(t, f);
        double prev = max_abs(eval_cauchy(t, f, 4) - exact);
        for (int q = 8; q <= 32; q += 4) {
            const double err = max_abs(eval_cauchy(t, f, q) - exact);
            EXPECT_LE(err, std::max(0.25 * prev, 1e-12)) << "q = " << q;
            prev = err;
        }
    }
}

TEST(EvalCauchy, RejectsTooFewPointsAndBoundarySpectrum)
{
    auto t = example_pair(0.1, 0.1);
    EXPECT_THROW(eval_cauchy(t, PolySeries::constant(2, 1.0), 3), error);
    try {
        eval_cauchy(MatrixTuple::scalar({1.0}), PolySeries::constant(1, 1.0), 8);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::singular_resolvent);
    }
}

TEST(VanishesAt, Cases)
{
    auto t = example_pair(0, 0);
    EXPECT_TRUE(vanishes_at(PolySeries(2, 0), t, 1e-12));
    EXPECT_FALSE(vanishes_at(PolySeries::coordinate(2, 0), t, 1e-12));
    PolySeries sq(2, 2);
    sq.add(mi({2, 0}), 1.0);
    EXPECT_TRUE(vanishes_at(sq, t, 1e-12));
}
