#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace leland {

/// How the tax cutoff V_T is determined.
enum class TaxRule {
    fixed,               ///< V_T = v_tax
    coupon_over_payout   ///< V_T = P rho / delta, re-derived whenever P or rho change
};

/// Economic constants of the capital-structure problem. lambda_obs = +inf
/// selects continuous observation (the classical model).
struct MarketParams {
    double r = 0.075;
    double delta = 0.07;
    double kappa = 0.35;
    double alpha = 0.5;
    double rho = 0.08162;
    double m_debt = 0.2;
    double face_value_P = 50.0;
    double lambda_obs = 4.0;
    TaxRule tax_rule = TaxRule::coupon_over_payout;
    double v_tax = 0.0;  ///< used when tax_rule == fixed

    /// Debt issuance rate p = m P.
    double p() const { return m_debt * face_value_P; }

    double tax_cutoff() const {
        return tax_rule == TaxRule::fixed ? v_tax : face_value_P * rho / delta;
    }

    /// log V_T, -inf when V_T = 0.
    double log_tax_cutoff() const {
        const double vt = tax_cutoff();
        return vt > 0.0 ? std::log(vt) : -std::numeric_limits<double>::infinity();
    }

    bool classical() const { return std::isinf(lambda_obs); }

    /// Coupon plus principal flow P rho + p.
    double debt_flow() const { return face_value_P * rho + p(); }

    MarketParams with_debt(double P, double coupon) const {
        MarketParams out = *this;
        out.face_value_P = P;
        out.rho = coupon;
        return out;
    }

    MarketParams with_lambda(double lambda) const {
        MarketParams out = *this;
        out.lambda_obs = lambda;
        return out;
    }

    /// Throws std::invalid_argument naming the first violated constraint.
    /// A zero face value is accepted (the no-debt end of the leverage range).
    void validate() const {
        const auto fail = [](const std::string& what) {
            throw std::invalid_argument("market." + what);
        };
        if (!(r > 0.0)) fail("r: must be > 0");
        if (!(delta >= 0.0 && delta < r)) fail("delta: must satisfy 0 <= delta < r");
        if (!(kappa > 0.0)) fail("kappa: must be > 0");
        if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha: must lie in (0, 1)");
        if (!(rho > 0.0)) fail("rho: must be > 0");
        if (!(m_debt > 0.0)) fail("m: must be > 0");
        if (!(face_value_P >= 0.0) || !std::isfinite(face_value_P)) fail("P: must be >= 0");
        if (!(lambda_obs > 0.0)) fail("lambda: must be > 0");
        if (tax_rule == TaxRule::fixed && !(v_tax >= 0.0)) fail("tax_cutoff: must be >= 0");
        if (tax_rule == TaxRule::coupon_over_payout && delta == 0.0)
            fail("tax_cutoff: rule P*rho/delta needs delta > 0");
    }
};

}  // namespace leland
