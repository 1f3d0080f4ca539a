#include <mixlab/lie.hpp>

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

using namespace mixlab;

namespace {

const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));

// Coordinates of g X g^{-1} computed by explicit 2x2 conjugation.
Eigen::Matrix3d conjugation_oracle(const GroupElement& g) {
    Eigen::Matrix3d m;
    const LieVector basis[3] = {LieVector::H(), LieVector::E(), LieVector::F()};
    for (int j = 0; j < 3; ++j) {
        const LieVector y = LieVector::from_matrix(g.matrix() * basis[j].matrix() * g.matrix().inverse());
        m.col(j) << y.h, y.e, y.f;
    }
    return m;
}

bool is_rotation(const GroupElement& k, double tol) {
    return std::abs(k.a() - k.d()) <= tol && std::abs(k.b() + k.c()) <= tol &&
           std::abs(k.a() * k.a() + k.c() * k.c() - 1.0) <= tol;
}

} // namespace

TEST(GroupElement, RejectsNonUnimodularAndNonFinite) {
    EXPECT_THROW(GroupElement(1, 0, 0, 2), InvalidInput);
    EXPECT_THROW(GroupElement(NAN, 0, 0, 1), InvalidInput);
    EXPECT_THROW(GroupElement(INFINITY, 0, 0, 0), InvalidInput);
    EXPECT_NO_THROW(GroupElement(1, 0, 0, 1 + 1e-10));
}

TEST(GroupElement, ProductsStayUnimodular) {
    SampleRng rng(11, 0);
    GroupElement g;
    for (int i = 0; i < 200; ++i) {
        g = g * testutil::moderate_element(rng, 0.3);
        ASSERT_NEAR(g.det(), 1.0, 1e-9 * std::max(1.0, g.frobenius() * g.frobenius()));
    }
}

TEST(LieVector, NormsOfBasis) {
    EXPECT_DOUBLE_EQ(LieVector::H().norm(), std::numbers::sqrt2);
    EXPECT_DOUBLE_EQ(LieVector::E().norm(), 1.0);
    EXPECT_DOUBLE_EQ(LieVector::F().norm(), 1.0);
    const LieVector x{0.3, -1.2, 2.5};
    EXPECT_NEAR(x.norm() * x.norm(), (x.matrix() * x.matrix().transpose()).trace(), 1e-14);
    EXPECT_DOUBLE_EQ(x.matrix().trace(), 0.0);
}

TEST(CartanDecompose, Identity) {
    const auto t = cartan_decompose(GroupElement::identity());
    EXPECT_DOUBLE_EQ(t.sigma, 1.0);
    EXPECT_LE(testutil::entry_distance(t.recompose(), GroupElement::identity()), 1e-15);
}

TEST(CartanDecompose, DiagonalIsAlreadyInChamber) {
    const auto t = cartan_decompose(GroupElement::diag(3.0));
    EXPECT_NEAR(t.sigma, 3.0, 1e-15);
    EXPECT_LE(testutil::entry_distance(t.k1, GroupElement::identity()), 1e-15);
    EXPECT_LE(testutil::entry_distance(t.k2, GroupElement::identity()), 1e-15);
}

TEST(CartanDecompose, UnipotentMatchesCharacteristicPolynomial) {
    // g g^T = [[2,1],[1,1]]: lambda^2 - 3 lambda + 1 = 0
    const double tr = 3.0, det = 1.0;
    const double lambda_max = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    const auto t = cartan_decompose(GroupElement::upper(1.0));
    EXPECT_NEAR(t.sigma, std::sqrt(lambda_max), 1e-14);
    EXPECT_NEAR(t.sigma, kGolden, 1e-14);
}

TEST(CartanDecompose, RecomposesHeavyTailedSamples) {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        SampleRng rng(101, i);
        const GroupElement g = testutil::heavy_tailed_element(rng);
        const auto t = cartan_decompose(g);
        ASSERT_GE(t.sigma, 1.0);
        ASSERT_TRUE(is_rotation(t.k1, 1e-12));
        ASSERT_TRUE(is_rotation(t.k2, 1e-12));
        ASSERT_LE(testutil::entry_distance(t.recompose(), g), 1e-8 * std::max(1.0, g.frobenius())) << g;
        // sigma is the largest singular value
        const double sv = Eigen::JacobiSVD<Eigen::Matrix2d>(g.matrix()).singularValues()(0);
        ASSERT_NEAR(t.sigma, sv, 1e-10 * sv);
    }
}

TEST(AdMatrix, Identity) { EXPECT_TRUE(ad_matrix(GroupElement::identity()).isApprox(Eigen::Matrix3d::Identity(), 1e-15)); }

TEST(AdMatrix, DiagonalActsByRoots) {
    const double l = 1.7;
    Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
    expected.diagonal() << 1.0, l * l, 1.0 / (l * l);
    EXPECT_TRUE(ad_matrix(GroupElement::diag(l)).isApprox(expected, 1e-14));
    EXPECT_TRUE(conjugation_oracle(GroupElement::diag(l)).isApprox(expected, 1e-14));
}

TEST(AdMatrix, WeylElement) {
    // S H S^-1 = -H, S E S^-1 = -F, S F S^-1 = -E
    Eigen::Matrix3d expected;
    expected << -1, 0, 0, 0, 0, -1, 0, -1, 0;
    const GroupElement s(0, -1, 1, 0);
    EXPECT_TRUE(ad_matrix(s).isApprox(expected, 1e-15));
    EXPECT_TRUE(conjugation_oracle(s).isApprox(expected, 1e-15));
}

TEST(AdMatrix, MatchesConjugationAndHasUnitDeterminant) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        SampleRng rng(202, i);
        const GroupElement g = testutil::moderate_element(rng);
        const Eigen::Matrix3d m = ad_matrix(g);
        ASSERT_TRUE(m.isApprox(conjugation_oracle(g), 1e-10));
        ASSERT_NEAR(m.determinant(), 1.0, 1e-8);
    }
}

TEST(OpNorm, Examples) {
    EXPECT_NEAR(op_norm(GroupElement::identity()), 1.0, 1e-15);
    EXPECT_NEAR(op_norm(GroupElement::diag(2.0)), 4.0, 1e-14);
    EXPECT_NEAR(op_norm(GroupElement::upper(1.0)), 0.5 * (3.0 + std::sqrt(5.0)), 1e-14);
}

TEST(OpNorm, EqualsSigmaSquared) {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        SampleRng rng(303, i);
        const GroupElement g = testutil::heavy_tailed_element(rng);
        const double op = op_norm(g);
        const double s = cartan_decompose(g).sigma;
        ASSERT_GE(op, 1.0 - 1e-12);
        ASSERT_NEAR(op, s * s, 1e-8 * std::max(1.0, op)) << g;
    }
}

TEST(OpNorm, LogIsSqrtTwoTimesCartanDistance) {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        SampleRng rng(404, i);
        const GroupElement g = testutil::heavy_tailed_element(rng);
        ASSERT_NEAR(std::log(op_norm(g)), std::numbers::sqrt2 * cartan_distance(g, GroupElement::identity()), 1e-9);
    }
}

TEST(OpNorm, SubMultiplicative) {
    for (std::uint64_t i = 0; i < 5000; ++i) {
        SampleRng rng(505, i);
        const GroupElement g = testutil::moderate_element(rng, 4.0);
        const GroupElement h = testutil::moderate_element(rng, 4.0);
        const double lhs = op_norm(g * h), rhs = op_norm(g) * op_norm(h);
        ASSERT_LE(lhs, rhs * (1.0 + 1e-10));
    }
}

TEST(CartanDistance, Examples) {
    const GroupElement g = GroupElement::upper(0.4) * GroupElement::diag(1.3);
    EXPECT_NEAR(cartan_distance(g, g), 0.0, 1e-12);
    EXPECT_NEAR(cartan_distance(GroupElement::identity(), GroupElement::diag(std::numbers::e)), std::numbers::sqrt2, 1e-14);
    EXPECT_NEAR(cartan_distance(GroupElement::identity(), GroupElement::upper(1.0)), std::numbers::sqrt2 * std::log(kGolden), 1e-14);
    EXPECT_NEAR(cartan_distance(GroupElement::identity(), GroupElement::upper(1.0)), 0.6805, 5e-5);
}

TEST(CartanDistance, SymmetricLeftInvariantBiKInvariant) {
    for (std::uint64_t i = 0; i < 2000; ++i) {
        SampleRng rng(606, i);
        const GroupElement g = testutil::moderate_element(rng);
        const GroupElement h = testutil::moderate_element(rng);
        const GroupElement l = testutil::moderate_element(rng);
        const GroupElement k1 = GroupElement::rotation(rng.uniform(0, 7)), k2 = GroupElement::rotation(rng.uniform(0, 7));
        const double d = cartan_distance(g, h);
        ASSERT_NEAR(d, cartan_distance(h, g), 1e-9);
        ASSERT_NEAR(d, cartan_distance(l * g, l * h), 1e-8);
        const GroupElement I = GroupElement::identity();
        ASSERT_NEAR(cartan_distance(k1 * g * k2, I), cartan_distance(g, I), 1e-9);
        ASSERT_NEAR(cartan_distance(g, g * k1), 0.0, 1e-7);
    }
}

TEST(ExpSl2, Examples) {
    EXPECT_EQ(exp_sl2({0, 0, 0}), GroupElement::identity());
    const double t = 2.75;
    EXPECT_LE(testutil::entry_distance(exp_sl2(t * LieVector::E()), GroupElement::upper(t)), 1e-15);
    EXPECT_LE(testutil::entry_distance(exp_sl2(t * LieVector::F()), GroupElement::lower(t)), 1e-15);
    EXPECT_LE(testutil::entry_distance(exp_sl2(t * LieVector::H()), GroupElement::diag(std::exp(t))), 1e-12);
    // elliptic: exp(t (E - F)) = rotation by -t
    EXPECT_LE(testutil::entry_distance(exp_sl2({0, t, -t}), GroupElement::rotation(-t)), 1e-14);
}

TEST(ExpSl2, MatchesMatrixExponentialSeries) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        SampleRng rng(707, i);
        const LieVector x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double scale = i % 5 == 0 ? 1e-6 : 1.0;
        const LieVector xs = scale * x;
        Eigen::Matrix2d term = Eigen::Matrix2d::Identity(), sum = Eigen::Matrix2d::Identity();
        for (int n = 1; n < 40; ++n) {
            term = term * xs.matrix() / n;
            sum += term;
        }
        const GroupElement g = exp_sl2(xs);
        ASSERT_NEAR(g.det(), 1.0, 1e-10);
        ASSERT_TRUE(g.matrix().isApprox(sum, 1e-12));
    }
}

TEST(NilpotentEnvelope, ExponentThreeWithC3Ten) {
    const double c3 = 10.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        SampleRng rng(808, i);
        const double t = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const LieVector x = ad_apply(GroupElement::rotation(rng.uniform(0, 7)), t * LieVector::E());
        ASSERT_NEAR(x.norm(), t, 1e-9 * t);
        const double base = std::max(1.0, x.norm());
        const double op = op_norm(exp_sl2(x));
        ASSERT_LE(base / c3, op);
        ASSERT_LE(op, c3 * base * base * base);
        // |exp X|_F >= |X|_F, since exp X = I + X with I orthogonal to X
        ASSERT_GE(exp_sl2(x).frobenius(), x.norm() * (1.0 - 1e-12));
    }
}

TEST(SeparationStats, Examples) {
    const GroupElement g = GroupElement::upper(0.3);
    const std::vector<GroupElement> same{g, g};
    const auto s0 = separation_stats(same);
    EXPECT_NEAR(s0.q, 1.0, 1e-12);
    EXPECT_NEAR(s0.Q, 1.0, 1e-12);
    EXPECT_NEAR(s0.M_hat, 1.0, 1e-12);

    const double e = std::numbers::e;
    const std::vector<GroupElement> two{GroupElement::identity(), GroupElement::diag(e)};
    const auto s1 = separation_stats(two);
    EXPECT_NEAR(s1.q, e * e, 1e-12);
    EXPECT_NEAR(s1.Q, e * e, 1e-12);
    EXPECT_NEAR(s1.M_hat, std::exp(std::numbers::sqrt2), 1e-12);

    const std::vector<GroupElement> three{GroupElement::identity(), GroupElement::diag(e), GroupElement::diag(e * e)};
    const auto s2 = separation_stats(three);
    EXPECT_NEAR(s2.q, e * e, 1e-12);
    EXPECT_NEAR(s2.Q, std::pow(e, 4), 1e-11);
}

TEST(SeparationStats, NeedsTwoElements) {
    const std::vector<GroupElement> one{GroupElement::identity()};
    EXPECT_THROW(separation_stats(one), InvalidInput);
}

TEST(SeparationStats, OrderedBounds) {
    for (std::uint64_t i = 0; i < 1000; ++i) {
        SampleRng rng(909, i);
        std::vector<GroupElement> gs;
        for (int j = 0; j < 4; ++j) gs.push_back(testutil::moderate_element(rng));
        const auto s = separation_stats(gs);
        ASSERT_GE(s.q, 1.0 - 1e-12);
        ASSERT_GE(s.Q, s.q);
        ASSERT_GE(s.M_hat, 1.0 - 1e-12);
    }
}
