#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "leland/levy_model.hpp"
#include "leland/scale_fn.hpp"

namespace leland {

/// Holds the driver model and caches scale functions per discount rate.
/// The cache is append-only and guarded by a shared mutex, so one context can
/// be shared by concurrent readers.
class FluctuationContext {
public:
    explicit FluctuationContext(HejdParams model) : model_(std::move(model)) {}
    FluctuationContext(const FluctuationContext& other) : model_(other.model_) {}
    FluctuationContext& operator=(const FluctuationContext& other) {
        if (this != &other) {
            std::unique_lock lock(mutex_);
            model_ = other.model_;
            cache_.clear();
        }
        return *this;
    }

    const HejdParams& model() const { return model_; }

    const ScaleFunction& scale(double q) const {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(q);
            if (it != cache_.end()) return *it->second;
        }
        auto built = std::make_shared<const ScaleFunction>(w_scale(model_, q));
        std::unique_lock lock(mutex_);
        auto [it, inserted] = cache_.emplace(q, std::move(built));
        return *it->second;
    }

    double phi(double q) const { return q > 0.0 ? scale(q).phi_q() : leland::phi(model_, q); }

    std::size_t cache_size() const {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

private:
    HejdParams model_;
    mutable std::shared_mutex mutex_;
    mutable std::map<double, std::shared_ptr<const ScaleFunction>> cache_;
};

/// H^(q)(y; theta) = E_y[exp(-q tau_0^- + theta X(tau_0^-)); tau_0^- < inf], the
/// classical downward-passage transform,
///   sum_{k>=1} c_k (s_k - Phi) psi[theta, s_k, Phi] e^{s_k y}.
/// The Phi(q) terms cancel symbolically and the second divided difference keeps
/// the sum free of cancellation for large theta.
inline double h_fn(const FluctuationContext& ctx, double q, double y, double theta) {
    if (y < 0.0) return std::exp(theta * y);
    const auto& m = ctx.model();
    const auto& w = ctx.scale(q);
    const double ph = w.phi_q();
    double v = 0.0;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        v += w.coeff(k) * (s - ph) * psi_dd2(m, theta, s, ph) * std::exp(s * y);
    }
    return v;
}

/// J^(q)(y; theta) = E_y[exp(-q T + theta X(T)); T < inf] where T is the first
/// Poisson observation epoch (rate lambda) at which X is below zero.
///
/// For y >= 0 the expression reduces to a sum over the negative roots only,
///   lambda psi[theta,Phi] / psi[Phi_l,theta]
///     * sum_k c_k (s_k - Phi) e^{s_k y} / ((theta - s_k)(Phi_l - s_k)),
/// with Phi = Phi(q), Phi_l = Phi(q + lambda). Both removable singularities
/// (theta = Phi, psi(theta) = q + lambda) are absorbed by the divided
/// differences.
inline double j_fn(const FluctuationContext& ctx, double q, double lambda_obs, double y,
                   double theta) {
    const auto& m = ctx.model();
    const auto& w = ctx.scale(q);
    const double ph = w.phi_q();
    const double phl = ctx.phi(q + lambda_obs);
    const double b = 1.0 / psi_dd(m, phl, theta);
    if (y < 0.0) {
        const double e_l = std::exp(phl * y);
        const double f = -e_l * expm1_over(theta - phl, y);
        return lambda_obs * b * (f + e_l * psi_dd2(m, phl, theta, ph) / psi_dd(m, phl, ph));
    }
    const double a = psi_dd(m, theta, ph);
    double v = 0.0;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        v += w.coeff(k) * (s - ph) * std::exp(s * y) / ((theta - s) * (phl - s));
    }
    return lambda_obs * a * b * v;
}

/// I^(q,lambda)(x, y) = W^(q+l)(x+y) - l int_0^x W^(q)(x-z) W^(q+l)(z+y) dz
///                      - Z^(q)(x; Phi(q+l)) W^(q+l)(y).
/// The convolution is done in closed form; the e^{s'_j (x+y)} parts cancel
/// against W^(q+l)(x+y).
inline double i_fn(const FluctuationContext& ctx, double q, double lambda_obs, double x,
                   double y) {
    const auto& w = ctx.scale(q);
    if (y <= 0.0) return w(x + y);
    const auto& wl = ctx.scale(q + lambda_obs);
    const double phl = wl.phi_q();
    if (x < 0.0) {
        const double e_l = std::exp(phl * x);
        if (x + y < 0.0) return -e_l * wl(y);
        double v = 0.0;
        for (std::size_t j = 1; j < wl.size(); ++j) {
            const double sj = wl.exponent(j);
            v += wl.coeff(j) * std::exp(sj * y) * (std::exp(sj * x) - e_l);
        }
        return v;
    }
    double v = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double s = w.exponent(k);
        double inner = 0.0;
        for (std::size_t j = 1; j < wl.size(); ++j) {
            const double sj = wl.exponent(j);
            inner += wl.coeff(j) * std::exp(sj * y) * (1.0 / (sj - s) - 1.0 / (phl - s));
        }
        v += w.coeff(k) * std::exp(s * x) * inner;
    }
    return lambda_obs * v;
}

/// int_{-inf}^{zT} H^(r+lambda)(y; Phi(r)) dy, with the exp(Phi(r+lambda) zT)
/// growth removed symbolically.
inline double h_integral(const FluctuationContext& ctx, double r, double lambda_obs,
                         double zT) {
    const double ph = ctx.phi(r);
    if (zT <= 0.0) return std::exp(ph * zT) / ph;
    const auto& wl = ctx.scale(r + lambda_obs);
    const double phl = wl.phi_q();
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 1; j < wl.size(); ++j) {
        const double sj = wl.exponent(j);
        s1 += wl.coeff(j) * std::exp(sj * zT) / (sj - ph);
        s2 += wl.coeff(j) * std::expm1(sj * zT) / sj;
    }
    return lambda_obs / ph * (s1 - phl / (phl - ph) * s2 + wl.coeff(0) / (phl - ph));
}

/// Density of the q-resolvent of X killed at the first Poisson observation
/// below zero:
///   R(x, y) = Z^(q)(x; Phi(q+l)) (Phi(q+l) - Phi(q))/l H^(q+l)(-y; Phi(q))
///             - I^(q,l)(x, -y).
inline double resolvent_density(const FluctuationContext& ctx, double q, double lambda_obs,
                                double x, double y) {
    const auto& w = ctx.scale(q);
    const double ph = w.phi_q();
    const double phl = ctx.phi(q + lambda_obs);
    return z_phi_lambda(w, lambda_obs, phl, x) * (phl - ph) / lambda_obs *
               h_fn(ctx, q + lambda_obs, -y, ph) -
           i_fn(ctx, q, lambda_obs, x, -y);
}

/// Tax-benefit functional
///   Lambda(y, z) = E_y[ int_0^{T_z} e^{-r t} 1{X_t >= log V_T} dt ],
/// T_z the first Poisson observation below z. Pass log_vt = -inf for V_T = 0.
///
/// Every exp(Phi(r) x) and exp(Phi(r+lambda) .) term cancels; the
/// implementation only carries the bounded remainder.
inline double lambda_fn(const FluctuationContext& ctx, double r, double lambda_obs, double y,
                        double z, double log_vt) {
    const double x = y - z;
    if (log_vt == -std::numeric_limits<double>::infinity())
        return (1.0 - j_fn(ctx, r, lambda_obs, x, 0.0)) / r;

    const double a = z - log_vt;
    const auto& w = ctx.scale(r);
    const double ph = w.phi_q();
    const double phl = ctx.phi(r + lambda_obs);

    if (a > 0.0) {
        const auto& wl = ctx.scale(r + lambda_obs);
        const double head = (phl - ph) / lambda_obs * h_integral(ctx, r, lambda_obs, a) +
                            wl.bar_reduced(a);
        if (x < 0.0) {
            const double tail = (x + a > 0.0)
                                    ? wl.bar_reduced(x + a)
                                    : -wl.coeff(0) * std::exp(phl * (x + a)) / phl;
            return std::exp(phl * x) * head - tail;
        }
        double v = 1.0 / r;
        for (std::size_t k = 1; k < w.size(); ++k) {
            const double s = w.exponent(k);
            double g = 0.0;
            for (std::size_t j = 1; j < wl.size(); ++j) {
                const double sj = wl.exponent(j);
                g += wl.coeff(j) * std::exp(sj * a) / (sj * (sj - s));
            }
            const double e_k = head / (phl - s) - g - 1.0 / (s * (r + lambda_obs));
            v += lambda_obs * w.coeff(k) * std::exp(s * x) * e_k;
        }
        return v;
    }

    const double ea = std::exp(ph * a);
    if (x < 0.0) return std::exp(phl * x) * (phl - ph) * ea / (lambda_obs * ph);
    if (x + a <= 0.0) {
        double v = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double s = w.exponent(k);
            v += w.coeff(k) * std::exp(s * x) / (phl - s);
        }
        return v * (phl - ph) * ea / ph;
    }
    double v = 1.0 / r;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        v += w.coeff(k) * std::exp(s * x) *
             ((phl - ph) * ea / ((phl - s) * ph) - std::exp(s * a) / s);
    }
    return v;
}

/// Lambda(z, z) = (Phi(r+l) - Phi(r))/l * int_{-inf}^{z_T} H^(r+l)(y; Phi(r)) dy.
inline double lambda_at_barrier(const FluctuationContext& ctx, double r, double lambda_obs,
                                double z, double log_vt) {
    if (log_vt == -std::numeric_limits<double>::infinity())
        return ctx.phi(r + lambda_obs) / (ctx.phi(r) * (lambda_obs + r));
    const double ph = ctx.phi(r);
    const double phl = ctx.phi(r + lambda_obs);
    return (phl - ph) / lambda_obs * h_integral(ctx, r, lambda_obs, z - log_vt);
}

/// Resolvent density of X killed at tau_0^-, started at x >= 0:
///   e^{-Phi(q) y} W^(q)(x) - W^(q)(x - y) for y >= 0, and 0 for y < 0 (the
/// killed process never sits below zero).
inline double classical_resolvent(const FluctuationContext& ctx, double q, double x,
                                  double y) {
    if (x < 0.0) throw std::domain_error("classical_resolvent: x must be >= 0");
    if (y < 0.0) return 0.0;
    const auto& w = ctx.scale(q);
    return std::exp(-w.phi_q() * y) * w(x) - w(x - y);
}

/// Continuous-observation tax functional
///   E_x[ int_0^{tau_0^-} e^{-r t} 1{X_t >= b} dt ],
/// the integral of classical_resolvent over y >= b. b = -inf means V_T = 0.
inline double classical_lambda(const FluctuationContext& ctx, double r, double x, double b) {
    if (x < 0.0) return 0.0;
    const auto& w = ctx.scale(r);
    const double ph = w.phi_q();
    const double bp = std::max(b, 0.0);
    const double eb = std::exp(-ph * bp);
    if (x <= bp) return w(x) * eb / ph;
    double v = 1.0 / r;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        v += w.coeff(k) * std::exp(s * x) * (eb / ph - std::exp(-s * bp) / s);
    }
    return v;
}

/// r-resolvent occupation of [b, inf) for the unkilled process started at x:
///   int_b^inf (e^{Phi(r)(x-y)}/psi'(Phi(r)) - W^(r)(x-y)) dy.
inline double free_occupation(const FluctuationContext& ctx, double r, double x, double b) {
    const auto& w = ctx.scale(r);
    const double u = x - b;
    const double c0 = w.coeff(0), ph = w.phi_q();
    if (u <= 0.0) return c0 * std::exp(ph * u) / ph;
    double v = c0 / ph;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const double s = w.exponent(k);
        v -= w.coeff(k) * std::expm1(s * u) / s;
    }
    return v;
}

}  // namespace leland
