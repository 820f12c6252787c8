#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "leland/inversion.hpp"
#include "leland/valuation.hpp"

namespace leland {

/// Maturity-t building blocks of a unit bond, all at horizon t:
///   default_cdf = P(T <= t),
///   disc_default = E[e^{-r T}; T <= t],
///   disc_recovery = E[e^{-r T + X_T}; T <= t]   (X_T measured from log V_B).
struct MaturityTerms {
    double t = 0.0;
    double default_cdf = 0.0;
    double disc_default = 0.0;
    double disc_recovery = 0.0;

    /// E[1 - e^{-r (t ^ T)}].
    double annuity_factor(double r) const {
        return -std::expm1(-r * t) * (1.0 - default_cdf) + (default_cdf - disc_default);
    }
};

inline MaturityTerms maturity_terms(const FluctuationContext& ctx, const MarketParams& mkt,
                                    double V, double V_B, double t, int order = 14) {
    if (!(t > 0.0)) throw std::domain_error("maturity_terms: t must be > 0");
    if (!(V > 0.0 && V_B > 0.0)) throw std::domain_error("maturity_terms: need V, V_B > 0");
    MaturityTerms mt;
    mt.t = t;
    if (mkt.classical() && V <= V_B) {
        mt.default_cdf = 1.0;
        mt.disc_default = 1.0;
        mt.disc_recovery = V / V_B;
        return mt;
    }
    const double x = std::log(V / V_B);
    const double r = mkt.r;
    mt.default_cdf = bankruptcy_time_cdf(ctx, mkt, V, V_B, t, order);
    mt.disc_default = gaver_stehfest(
        [&](double q) { return detail::passage_transform(ctx, mkt, q + r, x, 0.0) / q; }, t,
        order);
    mt.disc_recovery = gaver_stehfest(
        [&](double q) { return detail::passage_transform(ctx, mkt, q + r, x, 1.0) / q; }, t,
        order);
    return mt;
}

/// Value of the maturity-t bond with unit face value and coupon rate rho:
///   rho/r E[1 - e^{-r(t^T)}] + e^{-rt} P(T > t)
///   + (1-alpha) V_B/P E[e^{-rT + X_T}; T <= t].
inline double unit_debt(const MaturityTerms& mt, const MarketParams& mkt, double V_B,
                        double rho) {
    const double r = mkt.r;
    return rho / r * mt.annuity_factor(r) + std::exp(-r * mt.t) * (1.0 - mt.default_cdf) +
           (1.0 - mkt.alpha) * V_B / mkt.face_value_P * mt.disc_recovery;
}

inline double unit_debt(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                        double V_B, double t, double rho, int order = 14) {
    return unit_debt(maturity_terms(ctx, mkt, V, V_B, t, order), mkt, V_B, rho);
}

/// CS(t) = (r/P) E[(P - (1-alpha) V_T) e^{-rT}; T <= t] / E[1 - e^{-r(t^T)}].
/// Equal to rho*(t) - r where rho*(t) prices the unit bond at par.
inline double credit_spread(const MaturityTerms& mt, const MarketParams& mkt, double V_B) {
    const double r = mkt.r, P = mkt.face_value_P;
    const double denom = mt.annuity_factor(r);
    if (!(denom >= 1e-14)) {
        std::ostringstream os;
        os << "credit_spread: denominator " << denom << " below 1e-14 at t=" << mt.t
           << "; use t >= " << 1e-12 / r;
        throw NumericalError(os.str());
    }
    return r / P * (P * mt.disc_default - (1.0 - mkt.alpha) * V_B * mt.disc_recovery) / denom;
}

inline double credit_spread(const FluctuationContext& ctx, const MarketParams& mkt, double V,
                            double V_B, double t, int order = 14) {
    return credit_spread(maturity_terms(ctx, mkt, V, V_B, t, order), mkt, V_B);
}

/// Coupon rate making the maturity-t unit bond worth exactly 1. The unit bond
/// is affine in rho, so this is closed form.
inline double par_coupon(const MaturityTerms& mt, const MarketParams& mkt, double V_B) {
    const double b = unit_debt(mt, mkt, V_B, 0.0);
    const double a = unit_debt(mt, mkt, V_B, 1.0) - b;
    return (1.0 - b) / a;
}

/// Face value, coupon rate and optimal barrier consistent with a target
/// leverage L = P/V(firm) and with debt priced at par.
struct Calibration {
    double leverage = 0.0;
    double face_value_P = 0.0;
    double rho = 0.0;
    double v_barrier = 0.0;
    double debt = 0.0;
    double firm = 0.0;
};

class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

namespace detail {

struct LeveragePoint {
    double P, vb, debt, firm;
};

inline LeveragePoint evaluate_at(const FluctuationContext& ctx, const MarketParams& base,
                                 double V, double P, double rho) {
    const MarketParams mkt = base.with_debt(P, rho);
    const double vb = optimal_barrier(ctx, mkt);
    return {P, vb, debt_value(ctx, mkt, V, vb), firm_value(ctx, mkt, V, vb)};
}

// Face value P with P / firm(P) = L at fixed rho.
inline LeveragePoint face_for_leverage(const FluctuationContext& ctx, const MarketParams& base,
                                       double V, double L, double rho) {
    const auto g = [&](const LeveragePoint& p) { return p.P / p.firm - L; };
    double lo = 0.0, glo = -L;
    double hi = L * V;
    LeveragePoint phi_pt = evaluate_at(ctx, base, V, hi, rho);
    double ghi = g(phi_pt);
    int guard = 0;
    while (ghi <= 0.0) {
        lo = hi;
        glo = ghi;
        hi *= 2.0;
        phi_pt = evaluate_at(ctx, base, V, hi, rho);
        ghi = g(phi_pt);
        if (++guard > 60) throw CalibrationError("calibrate_leverage: no face value reaches L");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= 1e-14 * mid) break;
        const LeveragePoint pm = evaluate_at(ctx, base, V, mid, rho);
        const double gm = g(pm);
        if (gm < glo || gm > ghi) {
            std::ostringstream os;
            os << "calibrate_leverage: P/firm not monotone on [" << lo << ", " << hi
               << "] at rho=" << rho;
            throw CalibrationError(os.str());
        }
        if (gm <= 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
            phi_pt = pm;
        }
    }
    return evaluate_at(ctx, base, V, 0.5 * (lo + hi), rho);
}

}  // namespace detail

/// Nested bisection: inner solve of L = P/firm for P at fixed rho, outer
/// solve of debt = P for rho. The tax cutoff follows the template's rule.
inline Calibration calibrate_leverage(const FluctuationContext& ctx,
                                      const MarketParams& mkt_template, double V, double L) {
    if (!(L > 0.0 && L < 1.0)) throw std::invalid_argument("calibrate_leverage: L must be in (0,1)");
    if (!(V > 0.0)) throw std::invalid_argument("calibrate_leverage: V must be > 0");

    const auto h = [&](double rho) {
        const auto pt = detail::face_for_leverage(ctx, mkt_template, V, L, rho);
        return pt.debt / pt.P - 1.0;
    };
    double lo = mkt_template.r;
    double hlo = h(lo);
    if (hlo > 0.0) {
        double probe = lo;
        while (hlo > 0.0) {
            probe *= 0.5;
            if (probe < 1e-8) throw CalibrationError("calibrate_leverage: rho bracket not found");
            hlo = h(probe);
        }
        lo = probe;
    }
    double step = 0.05;
    double hi = lo + step;
    while (h(hi) < 0.0) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if (hi > 100.0) throw CalibrationError("calibrate_leverage: rho bracket not found");
    }
    const double rho = bisect(h, lo, hi, 1e-13);
    const auto pt = detail::face_for_leverage(ctx, mkt_template, V, L, rho);
    return {L, pt.P, rho, pt.vb, pt.debt, pt.firm};
}

/// Term structure of credit spreads rho*(t) - r at a calibrated capital
/// structure.
struct SpreadCurve {
    Calibration calibrated;
    std::vector<double> maturities;
    std::vector<double> spreads;
};

inline SpreadCurve spread_curve(const FluctuationContext& ctx, const MarketParams& mkt_template,
                                const Calibration& cal, double V,
                                const std::vector<double>& maturities, int order = 14) {
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (!(maturities[i] > 0.0)) throw std::invalid_argument("spread_curve: maturities must be > 0");
        if (i > 0 && !(maturities[i] > maturities[i - 1]))
            throw std::invalid_argument("spread_curve: maturities must be strictly increasing");
    }
    const MarketParams mkt = mkt_template.with_debt(cal.face_value_P, cal.rho);
    SpreadCurve out;
    out.calibrated = cal;
    out.maturities = maturities;
    for (double t : maturities) {
        const auto mt = maturity_terms(ctx, mkt, V, cal.v_barrier, t, order);
        out.spreads.push_back(par_coupon(mt, mkt, cal.v_barrier) - mkt.r);
    }
    return out;
}

inline SpreadCurve spread_curve(const FluctuationContext& ctx, const MarketParams& mkt_template,
                                double V, double L, const std::vector<double>& maturities,
                                int order = 14) {
    return spread_curve(ctx, mkt_template, calibrate_leverage(ctx, mkt_template, V, L), V,
                        maturities, order);
}

}  // namespace leland
