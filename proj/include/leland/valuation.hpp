#pragma once

#include <cmath>
#include <stdexcept>

#include "leland/fluctuation.hpp"
#include "leland/market.hpp"
#include "leland/root_find.hpp"

namespace leland {

/// Debt, firm and equity values for one asset level and one barrier.
struct CapitalStructure {
    double v_asset = 0.0;
    double v_barrier = 0.0;
    double debt = 0.0;
    double firm = 0.0;
    double equity = 0.0;
};

namespace detail {

inline void check_asset(double V) {
    if (!(V > 0.0)) throw std::domain_error("valuation: asset value V must be > 0");
}

inline void check_barrier(double V_B) {
    if (!(V_B >= 0.0)) throw std::domain_error("valuation: barrier V_B must be >= 0");
}

// Firm value with no bankruptcy at all.
inline double firm_no_default(const FluctuationContext& ctx, const MarketParams& mkt, double V) {
    const double P = mkt.face_value_P;
    return V + P * mkt.kappa * mkt.rho *
                   free_occupation(ctx, mkt.r, std::log(V), mkt.log_tax_cutoff());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Continuous observation (lambda = inf)

inline double classical_debt(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                             double V_B) {
    detail::check_asset(V);
    detail::check_barrier(V_B);
    const double q = mkt.r + mkt.m_debt;
    if (V_B == 0.0) return mkt.debt_flow() / q;
    if (V < V_B) return (1.0 - mkt.alpha) * V;
    const double x = std::log(V / V_B);
    return mkt.debt_flow() / q * (1.0 - h_fn(ctx, q, x, 0.0)) +
           (1.0 - mkt.alpha) * V_B * h_fn(ctx, q, x, 1.0);
}

inline double classical_firm(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                             double V_B) {
    detail::check_asset(V);
    detail::check_barrier(V_B);
    if (V_B == 0.0) return detail::firm_no_default(ctx, mkt, V);
    if (V < V_B) return (1.0 - mkt.alpha) * V;
    const double x = std::log(V / V_B);
    const double b = mkt.log_tax_cutoff() - std::log(V_B);
    return V + mkt.face_value_P * mkt.kappa * mkt.rho * classical_lambda(ctx, mkt.r, x, b) -
           mkt.alpha * V_B * h_fn(ctx, mkt.r, x, 1.0);
}

inline double classical_equity(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                               double V_B) {
    if (V_B > 0.0 && V < V_B) {
        detail::check_asset(V);
        return 0.0;
    }
    return classical_firm(ctx, mkt, V, V_B) - classical_debt(ctx, mkt, V, V_B);
}

/// Left side of the continuous-observation barrier equation (the large-lambda
/// limit of the scaled barrier equity):
///   V_B [a (psi(1)-r)/(1-Phi(r)) + (1-a)(psi(1)-r-m)/(1-Phi(r+m))]
///   + P kappa rho / Phi(r) * min((V_B/V_T)^Phi(r), 1) - (P rho + p)/Phi(r+m).
inline double classical_barrier_equation(const FluctuationContext& ctx, const MarketParams& mkt,
                                         double V_B) {
    const auto& m = ctx.model();
    const double r = mkt.r, rm = mkt.r + mkt.m_debt, a = mkt.alpha;
    const double ph = ctx.phi(r), phm = ctx.phi(rm);
    const double psi1 = psi(m, 1.0);
    const double slope = a * (psi1 - r) / (1.0 - ph) + (1.0 - a) * (psi1 - rm) / (1.0 - phm);
    const double vt = mkt.tax_cutoff();
    const double ratio = vt > 0.0 ? std::min(std::pow(V_B / vt, ph), 1.0) : 1.0;
    return V_B * slope + mkt.face_value_P * mkt.kappa * mkt.rho / ph * ratio -
           mkt.debt_flow() / phm;
}

/// Optimal barrier under continuous observation: the root of
/// classical_barrier_equation.
inline double classical_barrier(const FluctuationContext& ctx, const MarketParams& mkt) {
    if (mkt.face_value_P == 0.0) return 0.0;
    const auto f = [&](double vb) { return classical_barrier_equation(ctx, mkt, vb); };
    double lo = 1e-6 * mkt.face_value_P;
    while (f(lo) > 0.0) {
        lo *= 1e-3;
        if (lo < 1e-300) return 0.0;
    }
    double hi = mkt.face_value_P;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericalError("classical_barrier: bracket expansion failed");
    }
    return bisect(f, lo, hi, 1e-14);
}

// ---------------------------------------------------------------------------
// Poisson observation

/// Total debt value D(V; V_B).
inline double debt_value(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                         double V_B) {
    if (mkt.classical()) return classical_debt(ctx, mkt, V, V_B);
    detail::check_asset(V);
    detail::check_barrier(V_B);
    const double q = mkt.r + mkt.m_debt;
    if (V_B == 0.0) return mkt.debt_flow() / q;
    if (V < V_B) return (1.0 - mkt.alpha) * V;
    const double x = std::log(V / V_B);
    const double lam = mkt.lambda_obs;
    return mkt.debt_flow() / q * (1.0 - j_fn(ctx, q, lam, x, 0.0)) +
           (1.0 - mkt.alpha) * V_B * j_fn(ctx, q, lam, x, 1.0);
}

/// Firm value V(V; V_B) = V + tax benefits - expected bankruptcy loss.
inline double firm_value(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                         double V_B) {
    if (mkt.classical()) return classical_firm(ctx, mkt, V, V_B);
    detail::check_asset(V);
    detail::check_barrier(V_B);
    if (V_B == 0.0) return detail::firm_no_default(ctx, mkt, V);
    if (V < V_B) return (1.0 - mkt.alpha) * V;
    const double lam = mkt.lambda_obs;
    const double tax = lambda_fn(ctx, mkt.r, lam, std::log(V), std::log(V_B),
                                 mkt.log_tax_cutoff());
    return V + mkt.face_value_P * mkt.kappa * mkt.rho * tax -
           mkt.alpha * V_B * j_fn(ctx, mkt.r, lam, std::log(V / V_B), 1.0);
}

inline double equity_value(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                           double V_B) {
    if (V_B > 0.0 && V < V_B) {
        detail::check_asset(V);
        return 0.0;
    }
    return firm_value(ctx, mkt, V, V_B) - debt_value(ctx, mkt, V, V_B);
}

inline CapitalStructure capital_structure(const FluctuationContext& ctx,
                                          const MarketParams& mkt, double V, double V_B) {
    CapitalStructure cs;
    cs.v_asset = V;
    cs.v_barrier = V_B;
    cs.debt = debt_value(ctx, mkt, V, V_B);
    cs.firm = firm_value(ctx, mkt, V, V_B);
    cs.equity = (V_B > 0.0 && V < V_B) ? 0.0 : cs.firm - cs.debt;
    return cs;
}

/// Limit of E(V_B; V_B) as V_B -> 0. With V_T = 0 a nonnegative value means
/// the optimal barrier is zero.
inline double equity_at_barrier_limit_zero(const FluctuationContext& ctx,
                                           const MarketParams& mkt) {
    const double r = mkt.r, rm = mkt.r + mkt.m_debt, lam = mkt.lambda_obs;
    double v = -mkt.debt_flow() / (lam + rm) * ctx.phi(rm + lam) / ctx.phi(rm);
    if (mkt.tax_cutoff() == 0.0)
        v += mkt.face_value_P * mkt.kappa * mkt.rho / (lam + r) * ctx.phi(r + lam) / ctx.phi(r);
    return v;
}

/// E(V_B; V_B) =   V_B [1 - a J^(r)(0;1) - (1-a) J^(r+m)(0;1)]
///               + P kappa rho Lambda(log V_B, log V_B)
///               - (P rho + p)/(lambda + r + m) Phi(r+m+lambda)/Phi(r+m).
inline double equity_at_barrier(const FluctuationContext& ctx, const MarketParams& mkt,
                                double V_B) {
    if (!(V_B > 0.0)) throw std::domain_error("equity_at_barrier: V_B must be > 0");
    if (mkt.classical()) return classical_equity(ctx, mkt, V_B, V_B);
    const double r = mkt.r, rm = mkt.r + mkt.m_debt, lam = mkt.lambda_obs, a = mkt.alpha;
    const double slope = 1.0 - a * j_fn(ctx, r, lam, 0.0, 1.0) -
                         (1.0 - a) * j_fn(ctx, rm, lam, 0.0, 1.0);
    const double tax = lambda_at_barrier(ctx, r, lam, std::log(V_B), mkt.log_tax_cutoff());
    return V_B * slope + mkt.face_value_P * mkt.kappa * mkt.rho * tax -
           mkt.debt_flow() / (lam + rm) * ctx.phi(rm + lam) / ctx.phi(rm);
}

/// Optimal endogenous barrier. Zero exactly when V_T = 0 and the V_B -> 0
/// limit of E(V_B; V_B) is nonnegative; otherwise the unique root of
/// E(V_B; V_B) = 0.
inline double optimal_barrier(const FluctuationContext& ctx, const MarketParams& mkt) {
    if (mkt.classical()) return classical_barrier(ctx, mkt);
    if (mkt.face_value_P == 0.0) return 0.0;
    if (mkt.tax_cutoff() == 0.0 && equity_at_barrier_limit_zero(ctx, mkt) >= 0.0) return 0.0;

    const auto f = [&](double vb) { return equity_at_barrier(ctx, mkt, vb); };
    double lo = 1e-6 * mkt.face_value_P;
    while (f(lo) > 0.0) {
        lo *= 1e-3;
        if (lo < 1e-300) throw NumericalError("optimal_barrier: lower bracket not found");
    }
    double hi = mkt.face_value_P;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericalError("optimal_barrier: bracket expansion failed");
    }
    return bisect(f, lo, hi, 1e-14);
}

}  // namespace leland
