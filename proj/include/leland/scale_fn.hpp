#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "leland/levy_model.hpp"

namespace leland {

/// A finite sum of weighted exponentials  sum_k coeff_k * exp(exponent_k * x).
struct ExpMixture {
    struct Term {
        double coeff;
        double exponent;
    };
    enum class Support {
        positive_half_line,  ///< scale-function convention: 0 for x < 0
        full_line
    };

    std::vector<Term> terms;
    Support support = Support::full_line;

    double operator()(double x) const {
        if (support == Support::positive_half_line && x < 0.0) return 0.0;
        double v = 0.0;
        for (const auto& t : terms) v += t.coeff * std::exp(t.exponent * x);
        return v;
    }

    /// Term-wise derivative.
    double derivative(double x) const {
        if (support == Support::positive_half_line && x < 0.0) return 0.0;
        double v = 0.0;
        for (const auto& t : terms) v += t.coeff * t.exponent * std::exp(t.exponent * x);
        return v;
    }

    /// Sum of all terms except the one with index `skip` (used to drop a term
    /// whose contribution is known to cancel).
    double eval_without(std::size_t skip, double x) const {
        if (support == Support::positive_half_line && x < 0.0) return 0.0;
        double v = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (k != skip) v += terms[k].coeff * std::exp(terms[k].exponent * x);
        return v;
    }
};

/// x * (e^{a x} - 1) / (a x), stable for a -> 0.
inline double expm1_over(double a, double x) {
    const double ax = a * x;
    if (std::abs(ax) < 1e-8) return x * (1.0 + 0.5 * ax);
    return std::expm1(ax) / a;
}

/// Scale function W^(q) of a hyperexponential jump diffusion together with the
/// root data it is built from. Term 0 always carries the exponent Phi(q); the
/// remaining terms carry the negative roots -xi_{i,q}.
struct ScaleFunction {
    double q = 0.0;
    RootSet roots;
    ExpMixture w;

    double phi_q() const { return roots.phi_q; }
    std::size_t size() const { return w.terms.size(); }
    double exponent(std::size_t k) const { return w.terms[k].exponent; }
    double coeff(std::size_t k) const { return w.terms[k].coeff; }

    double operator()(double x) const { return w(x); }

    /// W-bar(x) = int_0^x W(u) du, closed form term by term.
    double bar(double x) const {
        if (x <= 0.0) return 0.0;
        double v = 0.0;
        for (const auto& t : w.terms) v += t.coeff * expm1_over(t.exponent, x);
        return v;
    }

    /// W-bar(x) with the exp(Phi(q) x) part of the Phi term removed, i.e.
    /// bar(x) - c_0 e^{Phi x} / Phi. Only meaningful for x > 0.
    double bar_reduced(double x) const {
        double v = -w.terms[0].coeff / w.terms[0].exponent;
        for (std::size_t k = 1; k < w.terms.size(); ++k) {
            const auto& t = w.terms[k];
            v += t.coeff * std::expm1(t.exponent * x) / t.exponent;
        }
        return v;
    }
};

/// Builds W^(q) as the partial-fraction expansion of 1/(psi(theta) - q): one
/// term exp(s_k x)/psi'(s_k) per simple root s_k.
inline ScaleFunction w_scale(const HejdParams& m, double q) {
    if (!(q > 0.0)) throw std::domain_error("w_scale: q must be > 0");
    ScaleFunction sf;
    sf.q = q;
    sf.roots = all_roots(m, q);
    sf.w.support = ExpMixture::Support::positive_half_line;

    const auto add = [&](double s) {
        const double d = psi_prime(m, s);
        if (!(std::abs(d) > 1e-300))
            throw std::domain_error("w_scale: non-simple root of psi(s) = q");
        sf.w.terms.push_back({1.0 / d, s});
    };
    add(sf.roots.phi_q);
    for (double xi : sf.roots.neg_roots) add(-xi);
    return sf;
}

/// W-bar^(q)(x) = int_0^x W^(q)(u) du for a W mixture.
inline double w_bar(const ExpMixture& mix, double x) {
    if (x <= 0.0) return 0.0;
    double v = 0.0;
    for (const auto& t : mix.terms) v += t.coeff * expm1_over(t.exponent, x);
    return v;
}

/// Second scale function
///   Z^(q)(x; theta) = e^{theta x} (1 + (q - psi(theta)) int_0^x e^{-theta z} W^(q)(z) dz).
/// For x >= 0 the e^{theta x} parts cancel exactly against the partial
/// fractions of W, leaving sum_k c_k psi[theta, s_k] e^{s_k x}; this form has no
/// singularity when theta coincides with a root.
inline double z_theta(const HejdParams& m, const ScaleFunction& w, double theta, double x) {
    if (x <= 0.0) return std::exp(theta * x);
    double v = 0.0;
    for (const auto& t : w.w.terms)
        v += t.coeff * psi_dd(m, theta, t.exponent) * std::exp(t.exponent * x);
    return v;
}

inline double z_theta(const HejdParams& m, double q, double theta, double x) {
    return z_theta(m, w_scale(m, q), theta, x);
}

/// Z^(q)(x; Phi(q + lambda)) using q - psi(Phi(q + lambda)) = -lambda exactly.
inline double z_phi_lambda(const ScaleFunction& w, double lambda_obs, double phi_q_lambda,
                           double x) {
    if (x <= 0.0) return std::exp(phi_q_lambda * x);
    double v = 0.0;
    for (const auto& t : w.w.terms)
        v += t.coeff * lambda_obs / (phi_q_lambda - t.exponent) * std::exp(t.exponent * x);
    return v;
}

inline double z_phi_lambda(const HejdParams& m, double q, double lambda_obs, double x) {
    return z_phi_lambda(w_scale(m, q), lambda_obs, phi(m, q + lambda_obs), x);
}

}  // namespace leland
