#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cases.hpp"
#include "leland/scale_fn.hpp"

using namespace leland;
using namespace testing_cases;
using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;

namespace {

// int_0^inf e^{-theta x} W(x) dx should equal 1/(psi(theta) - q) for theta > Phi(q).
double laplace_of(const ScaleFunction& w, double theta) {
    exp_sinh<double> integrator;
    return integrator.integrate([&](double x) {
        double v = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            v += w.coeff(k) * std::exp((w.exponent(k) - theta) * x);
        return v;
    });
}

}  // namespace

TEST(ScaleFunction, CaseATwoTermMixture) {
    const auto m = case_a();
    const auto w = w_scale(m, 0.075);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w.exponent(0), 2.34747, 1e-5);
    EXPECT_NEAR(w.exponent(1), -1.59747, 1e-5);
    EXPECT_NEAR(w.coeff(0), 1.0 / psi_prime(m, w.exponent(0)), 1e-15);
    EXPECT_NEAR(w.coeff(1), 1.0 / psi_prime(m, w.exponent(1)), 1e-15);
    EXPECT_GT(w.coeff(0), 0.0);
    EXPECT_EQ(w(-0.3), 0.0);
    // Brownian motion with drift: W(x) = (e^{Phi x} - e^{-xi x}) / sqrt(mu^2 + 2 sigma^2 q).
    const double root = std::sqrt(0.015 * 0.015 + 2 * 0.04 * 0.075);
    for (double x : {0.1, 1.0, 3.0})
        EXPECT_NEAR(w(x), (std::exp(w.exponent(0) * x) - std::exp(w.exponent(1) * x)) / root,
                    1e-12 * w(x));
    EXPECT_NEAR(w(0.0), 0.0, 1e-13);
}

TEST(ScaleFunction, LaplaceIdentity) {
    for (const auto& m : {case_a(), case_b()}) {
        const double q = 0.075;
        const auto w = w_scale(m, q);
        for (double theta : {w.phi_q() + 0.5, 5.0, 12.0}) {
            const double expect = 1.0 / (psi(m, theta) - q);
            EXPECT_NEAR(laplace_of(w, theta), expect, 1e-8 * expect);
        }
    }
    EXPECT_EQ(w_scale(case_b(), 0.075).size(), 4u);
}

TEST(ScaleFunction, IntegratedScaleFunction) {
    const auto w = w_scale(case_a(), 0.075);
    EXPECT_EQ(w_bar(w.w, 0.0), 0.0);
    EXPECT_EQ(w_bar(w.w, -3.0), 0.0);
    double closed = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
        closed += w.coeff(k) * std::expm1(w.exponent(k)) / w.exponent(k);
    const double quad = gauss_kronrod<double, 61>::integrate([&](double u) { return w(u); }, 0.0,
                                                             1.0, 10, 1e-14);
    EXPECT_NEAR(w_bar(w.w, 1.0), closed, 1e-14);
    EXPECT_NEAR(w_bar(w.w, 1.0), quad, 1e-10);
    EXPECT_NEAR(w.bar(1.0), quad, 1e-10);
    const auto wb = w_scale(case_b(), 0.3);
    EXPECT_NEAR(wb.bar_reduced(0.8), wb.bar(0.8) - wb.coeff(0) * std::exp(wb.phi_q() * 0.8) / wb.phi_q(),
                1e-11);
}

TEST(ScaleFunction, SecondScaleFunctionBoundary) {
    const auto m = case_b();
    EXPECT_NEAR(z_theta(m, 0.075, 1.3, 0.0), 1.0, 1e-13);
    EXPECT_DOUBLE_EQ(z_theta(m, 0.075, 2.0, -0.5), std::exp(-1.0));
    EXPECT_NEAR(z_phi_lambda(m, 0.075, 4.0, 0.0), 1.0, 1e-13);
    EXPECT_DOUBLE_EQ(z_phi_lambda(m, 0.075, 4.0, -0.3), std::exp(-0.3 * phi(m, 4.075)));
}

TEST(ScaleFunction, SecondScaleFunctionQuadrature) {
    const auto m = case_a();
    const auto w = w_scale(m, 0.075);
    const double theta = phi(m, 4.075);
    const double integral = gauss_kronrod<double, 61>::integrate(
        [&](double z) { return std::exp(-theta * z) * w(z); }, 0.0, 1.0, 10, 1e-15);
    const double literal = std::exp(theta) * (1.0 - 4.0 * integral);
    EXPECT_NEAR(z_theta(m, w, theta, 1.0), literal, 1e-9 * std::abs(literal));

    const auto wb = w_scale(case_b(), 0.075);
    for (double th : {0.0, 0.5, 1.0, 3.0}) {
        const double in = gauss_kronrod<double, 61>::integrate(
            [&](double z) { return std::exp(-th * z) * wb(z); }, 0.0, 0.7, 10, 1e-15);
        const double lit = std::exp(th * 0.7) * (1.0 + (0.075 - psi(case_b(), th)) * in);
        EXPECT_NEAR(z_theta(case_b(), wb, th, 0.7), lit, 1e-9 * std::abs(lit));
    }
}

TEST(ScaleFunction, TwoCodePathsForPhiLambda) {
    const auto m = case_a();
    const double z1 = z_phi_lambda(m, 0.075, 4.0, 0.2);
    const double z2 = z_theta(m, 0.075, phi(m, 4.075), 0.2);
    EXPECT_NEAR(z1, z2, 1e-12 * std::abs(z1));
}

TEST(ScaleFunction, StableExpm1Ratio) {
    EXPECT_DOUBLE_EQ(expm1_over(0.0, 2.0), 2.0);
    EXPECT_NEAR(expm1_over(1e-12, 2.0), 2.0, 1e-11);
    EXPECT_NEAR(expm1_over(0.5, 2.0), std::expm1(1.0) / 0.5, 1e-15);
}
