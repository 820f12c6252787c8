#include <gtest/gtest.h>

#include "cases.hpp"
#include "leland/levy_model.hpp"

using namespace leland;
using namespace testing_cases;

TEST(LevyModel, MartingaleExponentAtOne) {
    EXPECT_NEAR(psi(case_a(), 1.0), 0.005, 1e-12);
    EXPECT_NEAR(psi(case_b(), 1.0), 0.005, 1e-12);
    EXPECT_EQ(psi(case_a(), 0.0), 0.0);
    EXPECT_EQ(psi(case_b(), 0.0), 0.0);
}

TEST(LevyModel, PsiMatchesLiteralFormula) {
    const auto m = case_b();
    for (double s : {-0.5, 0.3, 2.0, 7.5}) {
        const double lit = 0.055 * s + 0.02 * s * s +
                           0.5 * (0.9 * 9.0 / (9.0 + s) + 0.1 * 1.0 / (1.0 + s) - 1.0);
        EXPECT_NEAR(psi(m, s), lit, 1e-14 * std::max(1.0, std::abs(lit)));
    }
}

TEST(LevyModel, DerivativeExamples) {
    EXPECT_NEAR(psi_prime(case_a(), 0.0), -0.015, 1e-15);
    EXPECT_NEAR(psi_prime(case_a(), 1.0), 0.025, 1e-15);
    EXPECT_NEAR(psi_prime(case_b(), 0.0), -0.045, 1e-15);
}

TEST(LevyModel, DerivativesAgreeWithFiniteDifferences) {
    const auto m = case_b();
    const double h = 1e-5;
    for (double s : {-0.7, -0.2, 0.4, 3.0}) {
        const double d1 = (psi(m, s + h) - psi(m, s - h)) / (2 * h);
        const double d2 = (psi(m, s + h) - 2 * psi(m, s) + psi(m, s - h)) / (h * h);
        EXPECT_NEAR(psi_prime(m, s), d1, 1e-8);
        EXPECT_NEAR(psi_second(m, s), d2, 1e-4);
    }
}

TEST(LevyModel, DividedDifferences) {
    const auto m = case_b();
    const double a = 2.3, b = -0.4, c = 5.1;
    EXPECT_NEAR(psi_dd(m, a, b), (psi(m, a) - psi(m, b)) / (a - b), 1e-13);
    EXPECT_NEAR(psi_dd(m, a, a), psi_prime(m, a), 1e-14);
    const double dd2 = (psi_dd(m, a, b) - psi_dd(m, b, c)) / (a - c);
    EXPECT_NEAR(psi_dd2(m, a, b, c), dd2, 1e-13);
    EXPECT_NEAR(psi_dd2(m, a, a, a), 0.5 * psi_second(m, a), 1e-14);
}

TEST(LevyModel, PoleEvaluationThrows) {
    EXPECT_THROW(psi(case_b(), -1.0), std::domain_error);
    EXPECT_THROW(psi_prime(case_b(), -9.0), std::domain_error);
}

TEST(LevyModel, RightInverseCaseA) {
    const auto m = case_a();
    EXPECT_NEAR(phi(m, 0.0), 0.75, 1e-14);
    EXPECT_NEAR(phi(m, 0.075), 2.34747, 1e-5);
    EXPECT_NEAR(phi(m, 4.075), 14.6540, 1e-4);
    for (double q : {0.01, 0.075, 0.275, 4.075, 365.0})
        EXPECT_NEAR(phi(m, q), bm_phi(-0.015, 0.2, q), 1e-12 * bm_phi(-0.015, 0.2, q));
}

TEST(LevyModel, RightInverseCaseB) {
    const auto m = case_b();
    for (double q : {0.0, 0.075, 4.075, 365.0}) {
        const double p = phi(m, q);
        EXPECT_GT(p, 0.0);
        EXPECT_NEAR(psi(m, p), q, 1e-12 * std::max(1.0, q));
        EXPECT_GT(psi_prime(m, p), 0.0);
    }
}

TEST(LevyModel, NegativeRootsCaseA) {
    const auto rs = all_roots(case_a(), 0.075);
    ASSERT_EQ(rs.neg_roots.size(), 1u);
    EXPECT_NEAR(rs.neg_roots[0], 1.59747, 1e-5);
    EXPECT_NEAR(-rs.neg_roots[0], bm_neg_root(-0.015, 0.2, 0.075), 1e-12);
    const auto rs2 = all_roots(case_a(), 4.075);
    EXPECT_NEAR(rs2.neg_roots[0], 13.9040, 1e-4);
}

TEST(LevyModel, NegativeRootsInterlacePolesCaseB) {
    const auto m = case_b();
    for (double q : {0.075, 0.275, 4.075, 365.275}) {
        const auto rs = all_roots(m, q);
        ASSERT_EQ(rs.neg_roots.size(), 3u);
        EXPECT_GT(rs.neg_roots[0], 0.0);
        EXPECT_LT(rs.neg_roots[0], 1.0);
        EXPECT_GT(rs.neg_roots[1], 1.0);
        EXPECT_LT(rs.neg_roots[1], 9.0);
        EXPECT_GT(rs.neg_roots[2], 9.0);
        for (double xi : rs.neg_roots) EXPECT_NEAR(psi(m, -xi), q, 1e-10 * std::max(1.0, q));
    }
}

TEST(LevyModel, DriftCalibration) {
    auto a = make_hejd(0.0, 0.2, 0.0);
    EXPECT_NEAR(calibrate_drift(a, 0.075, 0.07).mu, -0.015, 1e-15);
    auto b = make_hejd(0.0, 0.2, 0.5, {{0.9, 9.0}, {0.1, 1.0}});
    EXPECT_NEAR(calibrate_drift(b, 0.075, 0.07).mu, 0.055, 1e-15);
    EXPECT_NEAR(calibrate_drift(a, 0.09, 0.07).mu, 0.0, 1e-15);
}

TEST(LevyModel, CanonicalForm) {
    const auto m = make_hejd(0.0, 0.2, 1.0, {{0.25, 1.0}, {0.5, 4.0}, {0.25, 1.0}});
    ASSERT_EQ(m.phases.size(), 2u);
    EXPECT_EQ(m.phases[0].beta, 4.0);
    EXPECT_DOUBLE_EQ(m.phases[1].p, 0.5);
}

TEST(LevyModel, InvalidParametersRejected) {
    EXPECT_THROW(make_hejd(0.0, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(make_hejd(0.0, 0.2, 0.5, {{0.5, 9.0}, {0.4, 1.0}}), std::invalid_argument);
    EXPECT_THROW(make_hejd(0.0, 0.2, 0.5, {{1.0, -2.0}}), std::invalid_argument);
    EXPECT_THROW(make_hejd(0.0, 0.2, 0.5), std::invalid_argument);
    EXPECT_THROW(all_roots(case_a(), 0.0), std::domain_error);
}
