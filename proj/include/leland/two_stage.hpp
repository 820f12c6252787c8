#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "leland/root_find.hpp"
#include "leland/valuation.hpp"

namespace leland {

struct ProfilePoint {
    double face_value_P = 0.0;
    double v_barrier = 0.0;
    double firm = 0.0;
    double debt = 0.0;
};

struct TwoStageResult {
    double face_value_P = 0.0;
    double firm = 0.0;
    double v_barrier = 0.0;
    std::vector<ProfilePoint> profile;
};

/// Firm value at face value P with the barrier re-optimized for P. The tax
/// cutoff follows the template's rule (V_T = P rho / delta by default).
inline ProfilePoint evaluate_face_value(const FluctuationContext& ctx,
                                        const MarketParams& mkt_template, double V, double P) {
    if (P == 0.0) return {0.0, 0.0, V, 0.0};
    const MarketParams mkt = mkt_template.with_debt(P, mkt_template.rho);
    const double vb = optimal_barrier(ctx, mkt);
    return {P, vb, firm_value(ctx, mkt, V, vb), debt_value(ctx, mkt, V, vb)};
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

/// Maximizes firm value over the face value P: grid argmax, then golden
/// section inside the neighbouring cells.
inline TwoStageResult optimize_face_value(const FluctuationContext& ctx,
                                          const MarketParams& mkt_template, double V,
                                          std::vector<double> p_grid = {}) {
    if (!(V > 0.0)) throw std::invalid_argument("optimize_face_value: V must be > 0");
    if (p_grid.empty()) p_grid = uniform_grid(0.0, V, 201);
    std::sort(p_grid.begin(), p_grid.end());
    if (p_grid.front() < 0.0 || p_grid.back() > V)
        throw std::invalid_argument("optimize_face_value: grid must lie in [0, V]");

    TwoStageResult out;
    for (double P : p_grid) out.profile.push_back(evaluate_face_value(ctx, mkt_template, V, P));
    const auto best = std::max_element(out.profile.begin(), out.profile.end(),
                                       [](const auto& a, const auto& b) { return a.firm < b.firm; });
    const std::size_t i = static_cast<std::size_t>(best - out.profile.begin());
    const double lo = p_grid[i == 0 ? 0 : i - 1];
    const double hi = p_grid[std::min(i + 1, p_grid.size() - 1)];

    ProfilePoint star = *best;
    if (hi > lo) {
        const double P = golden_max(
            [&](double p) { return evaluate_face_value(ctx, mkt_template, V, p).firm; }, lo, hi,
            1e-4 * V);
        const ProfilePoint refined = evaluate_face_value(ctx, mkt_template, V, P);
        if (refined.firm > star.firm) star = refined;
    }
    out.face_value_P = star.face_value_P;
    out.firm = star.firm;
    out.v_barrier = star.v_barrier;
    return out;
}

}  // namespace leland
