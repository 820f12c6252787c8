#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cases.hpp"
#include "leland/inversion.hpp"
#include "leland/valuation.hpp"

using namespace leland;
using namespace testing_cases;
using boost::math::quadrature::gauss_kronrod;

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// First-passage cdf of x + mu t + sigma B_t below zero.
double bm_passage_cdf(double x, double mu, double sigma, double t) {
    const double st = sigma * std::sqrt(t);
    return norm_cdf((-x - mu * t) / st) +
           std::exp(-2.0 * mu * x / (sigma * sigma)) * norm_cdf((-x + mu * t) / st);
}

}  // namespace

TEST(Inversion, KnownPairs) {
    EXPECT_NEAR(gaver_stehfest([](double s) { return 1.0 / s; }, 1.0), 1.0, 1e-8);
    EXPECT_NEAR(gaver_stehfest([](double s) { return 1.0 / (s + 1.0); }, 0.7), std::exp(-0.7),
                1e-6);
    EXPECT_NEAR(gaver_stehfest([](double s) { return 1.0 / (s * s); }, 2.0), 2.0, 1e-6);
}

TEST(Inversion, WeightsSumToZero) {
    for (int n : {8, 12, 14, 16}) {
        const auto w = stehfest_weights(n);
        long double s = 0;
        for (double v : w) s += v;
        EXPECT_NEAR(static_cast<double>(s), 0.0, 1e-6);
    }
    EXPECT_THROW(stehfest_weights(13), std::invalid_argument);
    EXPECT_THROW(stehfest_weights(20), std::invalid_argument);
}

TEST(Inversion, ClassicalPassageTimeBrownian) {
    FluctuationContext ctx(case_a());
    const auto m = baseline(kInf);
    const double V = 100.0, vb = 60.0, x = std::log(V / vb);
    for (double t : {0.5, 2.0, 5.0, 20.0})
        EXPECT_NEAR(bankruptcy_time_cdf(ctx, m, V, vb, t), bm_passage_cdf(x, -0.015, 0.2, t), 1e-5)
            << "t=" << t;
}

TEST(Inversion, PassageTimeCdfShape) {
    for (const auto& model : {case_a(), case_b()}) {
        FluctuationContext ctx(model);
        const auto m = baseline(4.0);
        const double vb = optimal_barrier(ctx, m);
        EXPECT_LT(bankruptcy_time_cdf(ctx, m, 100.0, vb, 1e-3), 1e-4);
        double prev = -1.0;
        for (double t = 0.25; t <= 40.0; t += 0.25) {
            const double c = bankruptcy_time_cdf(ctx, m, 100.0, vb, t);
            EXPECT_GE(c, prev - 1e-6) << "t=" << t;
            prev = c;
        }
        EXPECT_LE(prev, bankruptcy_probability(ctx, m, 100.0, vb) + 1e-4);
    }
}

TEST(Inversion, OrderStability) {
    FluctuationContext ctx(case_b());
    const auto m = baseline(4.0);
    for (double t : {1.0, 5.0, 10.0}) {
        const double c14 = bankruptcy_time_cdf(ctx, m, 100.0, 45.0, t, 14);
        const double c16 = bankruptcy_time_cdf(ctx, m, 100.0, 45.0, t, 16);
        const double c18 = bankruptcy_time_cdf(ctx, m, 100.0, 45.0, t, 18);
        EXPECT_NEAR(c14, c16, 1e-5);
        EXPECT_NEAR(c16, c18, 1e-5);
    }
}

TEST(Inversion, DensityIntegratesToCdf) {
    FluctuationContext ctx(case_b());
    const auto m = baseline(4.0);
    const double t = 6.0;
    const double integral = gauss_kronrod<double, 31>::integrate(
        [&](double s) { return bankruptcy_time_density(ctx, m, 100.0, 45.0, s); }, 1e-6, t, 4,
        1e-9);
    EXPECT_NEAR(integral, bankruptcy_time_cdf(ctx, m, 100.0, 45.0, t), 1e-4);
}

TEST(Inversion, PassageTimeCdfIncreasesWithLambda) {
    for (const auto& model : {case_a(), case_b()}) {
        FluctuationContext ctx(model);
        const double vb = 50.0;
        for (double t : {1.0, 5.0, 10.0}) {
            double prev = -1.0;
            for (double lam : {1.0, 4.0, 12.0, 52.0, 365.0}) {
                const double c = bankruptcy_time_cdf(ctx, baseline(lam), 100.0, vb, t);
                EXPECT_GT(c, prev);
                prev = c;
            }
        }
    }
}

TEST(Inversion, ContinuousObservationBrownianUndershootIsUnitAtom) {
    FluctuationContext ctx(case_a());
    const auto m = baseline(kInf);
    const double vb = optimal_barrier(ctx, m);
    EXPECT_NEAR(bankruptcy_value_atom(ctx, m, 100.0, vb), 1.0, 1e-9);
    for (double f : {0.3, 0.7, 0.95}) {
        const auto p = bankruptcy_value(ctx, m, 100.0, vb, f * vb);
        EXPECT_EQ(p.density, 0.0);
        EXPECT_EQ(p.cdf, 0.0);
    }
    EXPECT_NEAR(bankruptcy_value_cdf(ctx, m, 100.0, vb, vb), 1.0, 1e-9);
}

TEST(Inversion, PoissonObservationHasNoAtom) {
    for (const auto& model : {case_a(), case_b()}) {
        FluctuationContext ctx(model);
        const auto m = baseline(4.0);
        EXPECT_EQ(bankruptcy_value_atom(ctx, m, 100.0, 50.0), 0.0);
        const double total = bankruptcy_probability(ctx, m, 100.0, 50.0);
        EXPECT_LE(total, 1.0 + 1e-8);
        EXPECT_NEAR(bankruptcy_value_cdf(ctx, m, 100.0, 50.0, 50.0), std::min(total, 1.0), 1e-12);
    }
}

TEST(Inversion, JumpsGiveAtomAndContinuousPart) {
    FluctuationContext ctx(case_b());
    const auto m = baseline(kInf);
    const double vb = 50.0;
    const double atom = bankruptcy_value_atom(ctx, m, 100.0, vb);
    EXPECT_GT(atom, 0.0);
    EXPECT_LT(atom, 1.0);
    const double total = bankruptcy_probability(ctx, m, 100.0, vb);
    double prev = 0.0;
    for (double f : {0.2, 0.5, 0.9, 0.99, 0.999}) {
        const double c = bankruptcy_value_cdf(ctx, m, 100.0, vb, f * vb);
        EXPECT_GE(c, prev);
        prev = c;
    }
    const double last_cell = bankruptcy_value_density(ctx, m, 100.0, vb, 0.9995 * vb) * 0.001 * vb;
    EXPECT_NEAR(prev + last_cell + atom, total, 1e-5);
    EXPECT_NEAR(bankruptcy_value_cdf(ctx, m, 100.0, vb, vb), total, 1e-12);
}

TEST(Inversion, ValueDensityIntegratesToCdf) {
    for (double lam : {4.0, kInf}) {
        FluctuationContext ctx(case_b());
        const auto m = baseline(lam);
        const double vb = 50.0;
        const double a = 0.5 * vb, b = 0.9 * vb;
        const double integral = gauss_kronrod<double, 31>::integrate(
            [&](double v) { return bankruptcy_value_density(ctx, m, 100.0, vb, v); }, a, b, 4,
            1e-9);
        EXPECT_NEAR(integral,
                    bankruptcy_value_cdf(ctx, m, 100.0, vb, b) -
                        bankruptcy_value_cdf(ctx, m, 100.0, vb, a),
                    1e-4);
    }
}

TEST(Inversion, InvalidInputs) {
    FluctuationContext ctx(case_a());
    EXPECT_THROW(bankruptcy_time_cdf(ctx, baseline(kInf), 40.0, 50.0, 1.0), std::domain_error);
    EXPECT_THROW(bankruptcy_value(ctx, baseline(4.0), 100.0, 50.0, 60.0), std::domain_error);
    EXPECT_THROW(gaver_stehfest([](double s) { return 1.0 / s; }, 0.0), std::domain_error);
}
