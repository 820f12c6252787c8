#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "leland/root_find.hpp"

namespace leland {

/// One exponential jump phase: with probability `p` a downward jump has an
/// exponential size with rate `beta`.
struct JumpPhase {
    double p;
    double beta;
};

/// Spectrally negative hyperexponential jump diffusion
///   X_t = mu t + sigma B_t - sum_{i <= N_t} U_i,
/// N a Poisson process with intensity gamma_jump and U_i hyperexponential.
///
/// Construct through make_hejd() to get the validated canonical form
/// (phases merged on equal rates and sorted by rate, descending).
struct HejdParams {
    double mu = 0.0;
    double sigma = 0.2;
    double gamma_jump = 0.0;
    std::vector<JumpPhase> phases;

    bool has_jumps() const { return gamma_jump > 0.0 && !phases.empty(); }
};

/// Validates and canonicalises a model. Bounded-variation models (sigma == 0)
/// are rejected.
inline HejdParams make_hejd(double mu, double sigma, double gamma_jump,
                            std::vector<JumpPhase> phases = {}) {
    if (!std::isfinite(mu)) throw std::invalid_argument("model.mu: must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument(
            "model.sigma: must be > 0 (bounded-variation drivers are not supported)");
    if (!(gamma_jump >= 0.0) || !std::isfinite(gamma_jump))
        throw std::invalid_argument("model.gamma: must be >= 0");

    HejdParams m{mu, sigma, gamma_jump, {}};
    if (gamma_jump == 0.0) return m;
    if (phases.empty())
        throw std::invalid_argument("model.phases: gamma > 0 requires at least one phase");

    double total = 0.0;
    for (const auto& ph : phases) {
        if (!(ph.beta > 0.0) || !std::isfinite(ph.beta))
            throw std::invalid_argument("model.phases: beta must be > 0");
        if (!(ph.p > 0.0)) throw std::invalid_argument("model.phases: p must be > 0");
        total += ph.p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("model.phases: weights must sum to 1 (got " +
                                    std::to_string(total) + ")");

    std::sort(phases.begin(), phases.end(),
              [](const JumpPhase& a, const JumpPhase& b) { return a.beta > b.beta; });
    for (const auto& ph : phases) {
        if (!m.phases.empty() && m.phases.back().beta == ph.beta) {
            std::clog << "leland: merging jump phases with equal rate beta=" << ph.beta
                      << '\n';
            m.phases.back().p += ph.p;
        } else {
            m.phases.push_back(ph);
        }
    }
    return m;
}

namespace detail {

inline void check_pole(const HejdParams& m, double s) {
    for (const auto& ph : m.phases)
        if (s == -ph.beta)
            throw std::domain_error("psi: evaluation at pole s = " + std::to_string(s));
}

// psi without the pole check, used inside bracketed searches.
inline double psi_raw(const HejdParams& m, double s) {
    double v = m.mu * s + 0.5 * m.sigma * m.sigma * s * s;
    if (m.gamma_jump > 0.0) {
        double j = 0.0;
        for (const auto& ph : m.phases) j += ph.p * (-s / (ph.beta + s));
        v += m.gamma_jump * j;
    }
    return v;
}

}  // namespace detail

/// Laplace exponent psi(s) = log E[exp(s X_1)].
inline double psi(const HejdParams& m, double s) {
    detail::check_pole(m, s);
    return detail::psi_raw(m, s);
}

inline double psi_prime(const HejdParams& m, double s) {
    detail::check_pole(m, s);
    double v = m.mu + m.sigma * m.sigma * s;
    for (const auto& ph : m.phases) {
        const double d = ph.beta + s;
        v -= m.gamma_jump * ph.p * ph.beta / (d * d);
    }
    return v;
}

inline double psi_second(const HejdParams& m, double s) {
    detail::check_pole(m, s);
    double v = m.sigma * m.sigma;
    for (const auto& ph : m.phases) {
        const double d = ph.beta + s;
        v += 2.0 * m.gamma_jump * ph.p * ph.beta / (d * d * d);
    }
    return v;
}

/// Divided difference (psi(a) - psi(b)) / (a - b), evaluated in closed form so
/// that it is exact (no cancellation) and equals psi'(a) when a == b.
inline double psi_dd(const HejdParams& m, double a, double b) {
    double v = m.mu + 0.5 * m.sigma * m.sigma * (a + b);
    for (const auto& ph : m.phases)
        v -= m.gamma_jump * ph.p * ph.beta / ((ph.beta + a) * (ph.beta + b));
    return v;
}

/// Second divided difference psi[a, b, c].
inline double psi_dd2(const HejdParams& m, double a, double b, double c) {
    double v = 0.5 * m.sigma * m.sigma;
    for (const auto& ph : m.phases)
        v += m.gamma_jump * ph.p * ph.beta /
             ((ph.beta + a) * (ph.beta + b) * (ph.beta + c));
    return v;
}

/// Right inverse Phi(q) = sup{s >= 0 : psi(s) = q}.
inline double phi(const HejdParams& m, double q) {
    if (!(q >= 0.0)) throw std::domain_error("phi: q must be >= 0");
    // psi is convex on [0, inf); locate its minimiser first.
    double s_min = 0.0;
    if (psi_prime(m, 0.0) < 0.0) {
        double hi = 1.0;
        while (psi_prime(m, hi) < 0.0) hi *= 2.0;
        s_min = bisect([&](double s) { return psi_prime(m, s); }, 0.0, hi, 1e-15);
    }
    if (q == 0.0 && s_min == 0.0) return 0.0;
    double hi = std::max(1.0, 2.0 * s_min);
    while (detail::psi_raw(m, hi) <= q) hi *= 2.0;
    const double lo = (q == 0.0) ? s_min : 0.0;
    double root = bisect([&](double s) { return detail::psi_raw(m, s) - q; },
                         std::max(lo, 0.0), hi, 1e-16);
    for (int i = 0; i < 2; ++i) {
        const double step = (detail::psi_raw(m, root) - q) / psi_prime(m, root);
        const double cand = root - step;
        if (std::abs(detail::psi_raw(m, cand) - q) < std::abs(detail::psi_raw(m, root) - q))
            root = cand;
        else
            break;
    }
    return root;
}

/// The positive root Phi(q) together with all negative roots -xi of psi(s) = q.
struct RootSet {
    double q = 0.0;
    double phi_q = 0.0;
    std::vector<double> neg_roots;  ///< xi_i > 0, ascending, psi(-xi_i) = q
};

/// All real roots of psi(s) = q for q > 0. There is exactly one negative root
/// between consecutive poles -beta_i, one in (-beta_min, 0) and one below
/// -beta_max (or a single one below 0 without jumps).
inline RootSet all_roots(const HejdParams& m, double q) {
    if (!(q > 0.0)) throw std::domain_error("all_roots: q must be > 0");
    RootSet rs;
    rs.q = q;
    rs.phi_q = phi(m, q);

    const auto f = [&](double s) { return detail::psi_raw(m, s) - q; };
    std::vector<double> poles;
    if (m.gamma_jump > 0.0)
        for (const auto& ph : m.phases) poles.push_back(ph.beta);
    std::sort(poles.begin(), poles.end());

    const auto polish = [&](double s, double lo, double hi) {
        for (int i = 0; i < 2; ++i) {
            const double cand = s - f(s) / psi_prime(m, s);
            if (cand > lo && cand < hi && std::abs(f(cand)) < std::abs(f(s)))
                s = cand;
            else
                break;
        }
        return s;
    };

    // Intervals (-poles[0], 0), (-poles[k+1], -poles[k]), (-inf, -poles.back()).
    double upper = 0.0;
    for (double b : poles) {
        const double hi = std::nextafter(upper, -std::numeric_limits<double>::infinity());
        const double lo = std::nextafter(-b, 0.0);
        const double s = bisect(f, lo, hi, 1e-16);
        rs.neg_roots.push_back(-polish(s, -b, upper));
        upper = -b;
    }
    {
        const double hi = std::nextafter(upper, -std::numeric_limits<double>::infinity());
        double width = std::max(1.0, std::abs(upper));
        double lo = upper - width;
        while (f(lo) < 0.0) {
            width *= 2.0;
            lo = upper - width;
            if (!std::isfinite(lo)) throw NumericalError("all_roots: no root below last pole");
        }
        const double s = bisect(f, lo, hi, 1e-16);
        rs.neg_roots.push_back(-polish(s, -std::numeric_limits<double>::infinity(), upper));
    }

    if (rs.neg_roots.size() != poles.size() + 1)
        throw NumericalError("all_roots: root count mismatch");
    for (std::size_t i = 1; i < rs.neg_roots.size(); ++i)
        if (!(rs.neg_roots[i] > rs.neg_roots[i - 1]))
            throw NumericalError("all_roots: roots not strictly separated (multiple root?)");
    return rs;
}

/// Returns a copy of `m` whose drift satisfies the martingale condition
/// psi(1) = r - delta.
inline HejdParams calibrate_drift(const HejdParams& m, double r, double delta) {
    if (!(r > delta && delta >= 0.0))
        throw std::invalid_argument("calibrate_drift: need r > delta >= 0");
    HejdParams out = m;
    out.mu = 0.0;
    out.mu = (r - delta) - psi(out, 1.0);
    return out;
}

}  // namespace leland
