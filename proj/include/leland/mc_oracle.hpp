#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "leland/levy_model.hpp"
#include "leland/market.hpp"

namespace leland {

enum class SimMode { skeleton, fine_grid };

struct SimConfig {
    std::uint64_t seed = 20240601;
    std::size_t n_paths = 100000;
    SimMode mode = SimMode::skeleton;
    double dt = 1e-3;        ///< fine_grid step in years
    double horizon = 200.0;  ///< cap for simulate_default
    bool antithetic = false;
    unsigned threads = 0;  ///< 0 = hardware concurrency

    void validate() const {
        if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
        if (mode == SimMode::fine_grid && !(dt > 0.0))
            throw std::invalid_argument("SimConfig: dt must be > 0");
        if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be > 0");
        if (antithetic && n_paths % 2 != 0)
            throw std::invalid_argument("SimConfig: antithetic runs need an even n_paths");
    }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;

    double z_score(double reference) const {
        return std_error > 0.0 ? (mean - reference) / std_error
                               : (mean == reference ? 0.0 : std::numeric_limits<double>::infinity());
    }
    bool covers(double reference, double k = 3.0) const {
        return std::abs(z_score(reference)) <= k;
    }
};

namespace mc {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Random source for one path. With `flip` set the Gaussian draws are
/// negated, giving the antithetic partner of the unflipped path.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t index, bool flip)
        : eng_(stream_key(seed, index)), sign_(flip ? -1.0 : 1.0) {}

    double normal() { return sign_ * norm_(eng_); }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(eng_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<long>(mean)(eng_);
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> norm_{0.0, 1.0};
    double sign_;
};

/// Exact increment of X over a span of length dt.
inline double increment(const HejdParams& m, PathRng& rng, double dt) {
    double dx = m.mu * dt + m.sigma * std::sqrt(dt) * rng.normal();
    if (m.gamma_jump > 0.0) {
        const long n = rng.poisson(m.gamma_jump * dt);
        for (long j = 0; j < n; ++j) {
            double u = rng.uniform();
            std::size_t i = 0;
            while (i + 1 < m.phases.size() && u >= m.phases[i].p) {
                u -= m.phases[i].p;
                ++i;
            }
            dx -= rng.exponential(m.phases[i].beta);
        }
    }
    return dx;
}

/// Runs `n_units` independent units in fixed-size chunks; the per-unit score
/// vectors are accumulated chunk by chunk and combined in chunk order, so the
/// result does not depend on the thread count.
template <std::size_t K, class UnitFn>
std::array<Estimate, K> run_units(std::size_t n_units, unsigned threads, UnitFn&& unit) {
    constexpr std::size_t chunk = 4096;
    const std::size_t n_chunks = (n_units + chunk - 1) / chunk;
    std::vector<std::array<double, 2 * K>> partial(n_chunks);
    for (auto& p : partial) p.fill(0.0);

    unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, std::max<std::size_t>(n_chunks, 1)));
    const auto work = [&](unsigned tid) {
        for (std::size_t c = tid; c < n_chunks; c += nt) {
            auto& acc = partial[c];
            const std::size_t end = std::min(n_units, (c + 1) * chunk);
            for (std::size_t u = c * chunk; u < end; ++u) {
                const std::array<double, K> s = unit(u);
                for (std::size_t k = 0; k < K; ++k) {
                    acc[k] += s[k];
                    acc[K + k] += s[k] * s[k];
                }
            }
        }
    };
    if (nt <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    std::array<double, 2 * K> tot{};
    for (const auto& p : partial)
        for (std::size_t k = 0; k < 2 * K; ++k) tot[k] += p[k];

    std::array<Estimate, K> out;
    const double n = static_cast<double>(n_units);
    for (std::size_t k = 0; k < K; ++k) {
        const double mean = tot[k] / n;
        const double var = n > 1 ? std::max(0.0, (tot[K + k] - n * mean * mean) / (n - 1)) : 0.0;
        out[k] = {mean, std::sqrt(var / n), n_units};
    }
    return out;
}

/// Path scores averaged over an antithetic pair when requested.
template <std::size_t K, class PathFn>
std::array<Estimate, K> run_paths(const SimConfig& cfg, PathFn&& path) {
    cfg.validate();
    if (!cfg.antithetic)
        return run_units<K>(cfg.n_paths, cfg.threads, [&](std::size_t i) {
            PathRng rng(cfg.seed, i, false);
            return path(rng);
        });
    return run_units<K>(cfg.n_paths / 2, cfg.threads, [&](std::size_t i) {
        PathRng a(cfg.seed, i, false), b(cfg.seed, i, true);
        auto sa = path(a);
        const auto sb = path(b);
        for (std::size_t k = 0; k < K; ++k) sa[k] = 0.5 * (sa[k] + sb[k]);
        return sa;
    });
}

struct KilledPath {
    bool defaulted = false;  ///< observed below zero before the clock rang
    double time = 0.0;       ///< default epoch, or the clock time
    double x = 0.0;          ///< X at default, or X at the clock time
    double occupation = 0.0; ///< fine-grid time spent at or above `level`
};

/// Poisson-observed path started at x0 and killed at an independent
/// Exp(kill_rate) clock. With dt > 0 the stretch between epochs is walked in
/// steps of dt and the left-point occupation of [level, inf) is accumulated.
inline KilledPath killed_path(const HejdParams& m, double lambda_obs, double kill_rate, double x0,
                              PathRng& rng, double dt = 0.0, double level = 0.0) {
    KilledPath out;
    const double clock = rng.exponential(kill_rate);
    double t = 0.0, x = x0;
    for (;;) {
        const double gap = rng.exponential(lambda_obs);
        const double next = std::min(t + gap, clock);
        if (dt > 0.0) {
            while (t < next) {
                const double h = std::min(dt, next - t);
                if (x >= level) out.occupation += h;
                x += increment(m, rng, h);
                t += h;
            }
        } else {
            x += increment(m, rng, next - t);
        }
        t = next;
        if (t >= clock) {
            out.time = clock;
            out.x = x;
            return out;
        }
        if (x < 0.0) {
            out.defaulted = true;
            out.time = t;
            out.x = x;
            return out;
        }
    }
}

}  // namespace mc

/// Monte Carlo estimate of J^(q)(x; theta) = E_x[e^{-q T + theta X_T}; T < inf].
inline Estimate estimate_j(const SimConfig& cfg, const HejdParams& m, double lambda_obs, double q,
                           double x, double theta) {
    if (!(q > 0.0)) throw std::invalid_argument("estimate_j: q must be > 0");
    return mc::run_paths<1>(cfg, [&](mc::PathRng& rng) {
               const auto p = mc::killed_path(m, lambda_obs, q, x, rng);
               return std::array<double, 1>{p.defaulted ? std::exp(theta * p.x) : 0.0};
           })[0];
}

struct FunctionalEstimates {
    Estimate j_r_0, j_r_1, j_rm_0, j_rm_1;  ///< J^(r), J^(r+m) at theta = 0, 1
    Estimate lambda;                          ///< tax occupation functional
    Estimate debt, firm, equity;
};

/// Debt, firm and equity values and their ingredients at (V, V_B) under
/// Poisson observation. The discount e^{-r t} is realised as an Exp(r)
/// killing clock, so every estimator is unbiased in skeleton mode; fine_grid
/// mode replaces the tax functional by a dt Riemann sum.
inline FunctionalEstimates estimate_functionals(const SimConfig& cfg, const HejdParams& model,
                                                const MarketParams& mkt, double V, double V_B) {
    mkt.validate();
    if (mkt.classical()) throw std::invalid_argument("estimate_functionals: needs finite lambda");
    if (!(V > 0.0 && V_B > 0.0 && V >= V_B))
        throw std::invalid_argument("estimate_functionals: need V >= V_B > 0");
    const double r = mkt.r, mm = mkt.m_debt, lam = mkt.lambda_obs;
    const double x0 = std::log(V / V_B);
    const double level = mkt.tax_cutoff() > 0.0 ? std::log(mkt.tax_cutoff() / V_B)
                                                : -std::numeric_limits<double>::infinity();
    const double P = mkt.face_value_P, a = mkt.alpha;
    const double flow = mkt.debt_flow() / (r + mm);
    const double dt = cfg.mode == SimMode::fine_grid ? cfg.dt : 0.0;

    const auto est = mc::run_paths<8>(cfg, [&](mc::PathRng& rng) {
        const auto p = mc::killed_path(model, lam, r, x0, rng, dt, level);
        std::array<double, 8> s{};
        if (p.defaulted) {
            const double ex = std::exp(p.x), em = std::exp(-mm * p.time);
            s[0] = 1.0;
            s[1] = ex;
            s[2] = em;
            s[3] = em * ex;
        }
        // Occupation of [level, inf) before default, discounted at rate r.
        s[4] = dt > 0.0 ? p.occupation : ((!p.defaulted && p.x >= level) ? 1.0 / r : 0.0);
        s[5] = flow * (1.0 - s[2]) + (1.0 - a) * V_B * s[3];
        s[6] = V + P * mkt.kappa * mkt.rho * s[4] - a * V_B * s[1];
        s[7] = s[6] - s[5];
        return s;
    });
    return {est[0], est[1], est[2], est[3], est[4], est[5], est[6], est[7]};
}

/// E[e^{-(r - delta) t} V_t] / V, which is 1 under the martingale calibration.
inline Estimate estimate_martingale(const SimConfig& cfg, const HejdParams& m, double r,
                                    double delta, double t) {
    return mc::run_paths<1>(cfg, [&](mc::PathRng& rng) {
               return std::array<double, 1>{std::exp(mc::increment(m, rng, t) - (r - delta) * t)};
           })[0];
}

struct DefaultSample {
    bool defaulted = false;  ///< false: still alive at the horizon (censored)
    double time = 0.0;       ///< bankruptcy time, or the horizon when censored
    double value = 0.0;      ///< asset value at bankruptcy
};

/// Bankruptcy time and asset value at bankruptcy for each path. V < V_B
/// triggers bankruptcy at time zero.
inline std::vector<DefaultSample> simulate_default(const SimConfig& cfg, const HejdParams& m,
                                                   const MarketParams& mkt, double V, double V_B) {
    cfg.validate();
    if (mkt.classical()) throw std::invalid_argument("simulate_default: needs finite lambda");
    std::vector<DefaultSample> out(cfg.n_paths);
    if (V < V_B) {
        for (auto& s : out) s = {true, 0.0, V};
        return out;
    }
    const double x0 = std::log(V / V_B);
    const auto one = [&](std::size_t i) {
        mc::PathRng rng(cfg.seed, cfg.antithetic ? i / 2 : i, cfg.antithetic && (i % 2 == 1));
        double t = 0.0, x = x0;
        for (;;) {
            const double gap = rng.exponential(mkt.lambda_obs);
            if (t + gap > cfg.horizon) return DefaultSample{false, cfg.horizon, 0.0};
            x += mc::increment(m, rng, gap);
            t += gap;
            if (x < 0.0) return DefaultSample{true, t, V_B * std::exp(x)};
        }
    };
    unsigned nt = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned tid = 0; tid < nt; ++tid)
        pool.emplace_back([&, tid] {
            for (std::size_t i = tid; i < out.size(); i += nt) out[i] = one(i);
        });
    for (auto& th : pool) th.join();
    return out;
}

/// Fraction of paths censored at the horizon.
inline double censored_fraction(const std::vector<DefaultSample>& s) {
    if (s.empty()) return 0.0;
    return static_cast<double>(std::count_if(s.begin(), s.end(),
                                             [](const auto& d) { return !d.defaulted; })) /
           static_cast<double>(s.size());
}

/// Empirical P(T <= t) with binomial standard error.
inline Estimate empirical_time_cdf(const std::vector<DefaultSample>& s, double t) {
    const double n = static_cast<double>(s.size());
    const double k = static_cast<double>(std::count_if(
        s.begin(), s.end(), [&](const auto& d) { return d.defaulted && d.time <= t; }));
    const double p = k / n;
    return {p, std::sqrt(p * (1.0 - p) / n), s.size()};
}

/// Empirical P(V_T <= v, T < horizon) with binomial standard error.
inline Estimate empirical_value_cdf(const std::vector<DefaultSample>& s, double v) {
    const double n = static_cast<double>(s.size());
    const double k = static_cast<double>(std::count_if(
        s.begin(), s.end(), [&](const auto& d) { return d.defaulted && d.value <= v; }));
    const double p = k / n;
    return {p, std::sqrt(p * (1.0 - p) / n), s.size()};
}

}  // namespace leland
