#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "leland/fluctuation.hpp"
#include "leland/market.hpp"
#include "leland/root_find.hpp"

namespace leland {

/// Stehfest weights for an even order N, computed in long double.
inline std::vector<double> stehfest_weights(int order) {
    if (order <= 0 || order % 2 != 0 || order > 18)
        throw std::invalid_argument("stehfest_weights: order must be even and in [2, 18]");
    const int half = order / 2;
    auto fact = [](int n) {
        long double f = 1.0L;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    std::vector<double> w(order);
    for (int k = 1; k <= order; ++k) {
        long double sum = 0.0L;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            sum += std::pow(static_cast<long double>(j), half) * fact(2 * j) /
                   (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        w[k - 1] = static_cast<double>(((k + half) % 2 == 0 ? 1.0L : -1.0L) * sum);
    }
    return w;
}

/// Gaver-Stehfest inverse of a Laplace transform F at t > 0:
///   f(t) ~ ln2/t * sum_k V_k F(k ln2 / t).
template <class F>
double gaver_stehfest(F&& transform, double t, int order = 14) {
    if (!(t > 0.0)) throw std::domain_error("gaver_stehfest: t must be > 0");
    const auto w = stehfest_weights(order);
    const double h = std::numbers::ln2 / t;
    long double acc = 0.0L;
    for (int k = 1; k <= order; ++k) acc += static_cast<long double>(w[k - 1]) * transform(k * h);
    return static_cast<double>(h * acc);
}

/// Discount rate standing in for zero when a transform must be evaluated with
/// the killing removed; results are Richardson-extrapolated from q and 2q.
inline constexpr double kSmallDiscount = 1e-8;

namespace detail {

inline void check_levels(const MarketParams& mkt, double V, double V_B) {
    if (!(V > 0.0)) throw std::domain_error("inversion: V must be > 0");
    if (!(V_B > 0.0)) throw std::domain_error("inversion: V_B must be > 0");
    if (mkt.classical() && V <= V_B)
        throw std::domain_error("inversion: continuous observation needs V > V_B");
}

// E_x[e^{-q T + theta X_T}; T < inf] under the market's observation scheme.
inline double passage_transform(const FluctuationContext& ctx, const MarketParams& mkt,
                                double q, double x, double theta) {
    return mkt.classical() ? h_fn(ctx, q, x, theta) : j_fn(ctx, q, mkt.lambda_obs, x, theta);
}

// Zero-discount limit by Richardson extrapolation from q and 2q.
template <class F>
double at_zero_discount(F&& f) {
    const double q = kSmallDiscount;
    return 2.0 * f(q) - f(2.0 * q);
}

inline double passage_transform_q0(const FluctuationContext& ctx, const MarketParams& mkt,
                                   double x, double theta) {
    return at_zero_discount([&](double q) { return passage_transform(ctx, mkt, q, x, theta); });
}

// Creeping part of H^(q)(x; theta), the theta -> inf limit.
inline double creeping(const FluctuationContext& ctx, double q, double x) {
    const auto& w = ctx.scale(q);
    double v = 0.0;
    for (std::size_t k = 1; k < w.size(); ++k)
        v += w.coeff(k) * (w.exponent(k) - w.phi_q()) * std::exp(w.exponent(k) * x);
    const double sigma = ctx.model().sigma;
    return 0.5 * sigma * sigma * v;
}

// Transform of the undershoot law without its atom at zero.
inline double undershoot_transform(const FluctuationContext& ctx, const MarketParams& mkt,
                                   double q, double x, double theta) {
    if (!mkt.classical()) return j_fn(ctx, q, mkt.lambda_obs, x, theta);
    const auto& m = ctx.model();
    const auto& w = ctx.scale(q);
    const double ph = w.phi_q();
    double v = 0.0;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        double jump = 0.0;
        for (const auto& p : m.phases)
            jump += p.p * p.beta / ((p.beta + theta) * (p.beta + s) * (p.beta + ph));
        v += w.coeff(k) * (s - ph) * m.gamma_jump * jump * std::exp(s * x);
    }
    return v;
}

inline double checked_probability(double raw, const char* what) {
    if (raw < -1e-4 || raw > 1.0 + 1e-4)
        throw NumericalError(std::string(what) + ": inverted value " + std::to_string(raw) +
                             " outside [0,1]");
    return std::clamp(raw, 0.0, 1.0);
}

}  // namespace detail

/// Density of the bankruptcy time at t (raw Stehfest output, may ring
/// slightly below zero).
inline double bankruptcy_time_density(const FluctuationContext& ctx, const MarketParams& mkt,
                                      double V, double V_B, double t, int order = 14) {
    detail::check_levels(mkt, V, V_B);
    const double x = std::log(V / V_B);
    return gaver_stehfest(
        [&](double q) { return detail::passage_transform(ctx, mkt, q, x, 0.0); }, t, order);
}

inline double bankruptcy_time_cdf(const FluctuationContext& ctx, const MarketParams& mkt,
                                  double V, double V_B, double t, int order = 14) {
    detail::check_levels(mkt, V, V_B);
    const double x = std::log(V / V_B);
    const double raw = gaver_stehfest(
        [&](double q) { return detail::passage_transform(ctx, mkt, q, x, 0.0) / q; }, t, order);
    return detail::checked_probability(raw, "bankruptcy_time_cdf");
}

/// P(T < inf).
inline double bankruptcy_probability(const FluctuationContext& ctx, const MarketParams& mkt,
                                     double V, double V_B) {
    detail::check_levels(mkt, V, V_B);
    return detail::passage_transform_q0(ctx, mkt, std::log(V / V_B), 0.0);
}

/// Probability that the asset value at bankruptcy equals V_B exactly (and
/// T < inf). Zero under Poisson observation; under continuous observation it
/// is the creeping probability, the theta -> inf limit of H(x; theta).
inline double bankruptcy_value_atom(const FluctuationContext& ctx, const MarketParams& mkt,
                                    double V, double V_B) {
    detail::check_levels(mkt, V, V_B);
    if (!mkt.classical()) return 0.0;
    const double x = std::log(V / V_B);
    return detail::at_zero_discount([&](double q) { return detail::creeping(ctx, q, x); });
}

/// Density, cdf and atom of the asset value at bankruptcy on (0, V_B].
struct BankruptcyValuePoint {
    double v = 0.0;
    double density = 0.0;  ///< continuous part, per unit of v
    double cdf = 0.0;      ///< P(V_T <= v, T < inf)
    double atom = 0.0;     ///< P(V_T = V_B, T < inf)
};

/// Distribution of V at the bankruptcy epoch, obtained by inverting the
/// undershoot transform theta -> E[e^{theta X_T}; T < inf] (X_T <= 0 measured
/// from log V_B) in the undershoot u = log(V_B / v).
inline BankruptcyValuePoint bankruptcy_value(const FluctuationContext& ctx,
                                             const MarketParams& mkt, double V, double V_B,
                                             double v, int order = 14) {
    detail::check_levels(mkt, V, V_B);
    if (!(v > 0.0 && v <= V_B)) throw std::domain_error("bankruptcy_value: need 0 < v <= V_B");
    const double x = std::log(V / V_B);
    BankruptcyValuePoint out;
    out.v = v;
    out.atom = bankruptcy_value_atom(ctx, mkt, V, V_B);
    const double total = detail::passage_transform_q0(ctx, mkt, x, 0.0);
    const double continuous_total = detail::at_zero_discount(
        [&](double q) { return detail::undershoot_transform(ctx, mkt, q, x, 0.0); });
    if (v == V_B) {
        out.cdf = detail::checked_probability(total, "bankruptcy_value_cdf");
        out.density = 0.0;
        return out;
    }
    const double u = std::log(V_B / v);
    const auto cont = [&](double theta) {
        return detail::at_zero_discount(
            [&](double q) { return detail::undershoot_transform(ctx, mkt, q, x, theta); });
    };
    const double f_u = gaver_stehfest(cont, u, order);
    const double below_u = gaver_stehfest([&](double th) { return cont(th) / th; }, u, order);
    out.density = f_u / v;
    out.cdf = detail::checked_probability(continuous_total - below_u, "bankruptcy_value_cdf");
    return out;
}

inline double bankruptcy_value_density(const FluctuationContext& ctx, const MarketParams& mkt,
                                       double V, double V_B, double v, int order = 14) {
    return bankruptcy_value(ctx, mkt, V, V_B, v, order).density;
}

inline double bankruptcy_value_cdf(const FluctuationContext& ctx, const MarketParams& mkt,
                                   double V, double V_B, double v, int order = 14) {
    return bankruptcy_value(ctx, mkt, V, V_B, v, order).cdf;
}

}  // namespace leland
