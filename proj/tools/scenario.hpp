#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "leland/levy_model.hpp"
#include "leland/market.hpp"

namespace leland::cli {

using json = nlohmann::json;

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunParams {
    double asset_value = 100.0;
    double leverage = 0.5;
    double vb_offset = 0.0;
    int grid = 201;
    std::uint64_t seed = 20240601;
    std::size_t n_paths = 100000;
    int stehfest_order = 14;
    double t_max = 50.0;
    std::vector<double> lambdas = {1, 2, 4, 6, 12, 52, 365, std::numeric_limits<double>::infinity()};
    std::vector<double> maturities = {0.25, 0.5, 1, 2, 3, 5, 7, 10, 15, 20, 30};
};

struct Scenario {
    std::string model_case = "A";
    double mu = -0.015;
    double sigma = 0.2;
    double gamma = 0.0;
    std::vector<JumpPhase> phases;
    bool calibrate_drift = false;
    MarketParams market;
    RunParams run;

    HejdParams model() const {
        auto m = make_hejd(mu, sigma, gamma, phases);
        return calibrate_drift ? leland::calibrate_drift(m, market.r, market.delta) : m;
    }
};

inline void apply_case(Scenario& s, const std::string& c) {
    if (c == "A") {
        s.mu = -0.015;
        s.sigma = 0.2;
        s.gamma = 0.0;
        s.phases.clear();
    } else if (c == "B") {
        s.mu = 0.055;
        s.sigma = 0.2;
        s.gamma = 0.5;
        s.phases = {{0.9, 9.0}, {0.1, 1.0}};
    } else if (c == "custom") {
        s.mu = 0.0;
        s.gamma = 0.0;
        s.phases.clear();
    } else {
        throw ScenarioError("model.case: expected A, B or custom, got '" + c + "'");
    }
    s.model_case = c;
}

inline double parse_rate(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
    throw ScenarioError(key + ": expected a number or \"inf\"");
}

inline json rate_to_json(double v) {
    return std::isinf(v) ? json("inf") : json(v);
}

namespace detail {

template <class T>
void read(const json& block, const char* name, const std::string& prefix, T& out) {
    if (!block.contains(name)) return;
    try {
        out = block.at(name).get<T>();
    } catch (const json::exception&) {
        throw ScenarioError(prefix + "." + name + ": wrong type");
    }
}

inline void check_keys(const json& block, const std::string& prefix,
                       std::initializer_list<const char*> allowed) {
    if (!block.is_object()) throw ScenarioError(prefix + ": expected an object");
    for (const auto& [k, _] : block.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ScenarioError(prefix + "." + k + ": unknown key");
    }
}

}  // namespace detail

inline Scenario scenario_from_json(const json& doc) {
    Scenario s;
    detail::check_keys(doc, "scenario", {"model", "market", "run"});
    if (doc.contains("model")) {
        const auto& m = doc["model"];
        detail::check_keys(m, "model", {"case", "mu", "sigma", "gamma", "phases", "calibrate"});
        std::string c = "A";
        detail::read(m, "case", "model", c);
        apply_case(s, c);
        if (c != "custom") {
            for (const char* k : {"mu", "sigma", "gamma", "phases", "calibrate"})
                if (m.contains(k))
                    throw ScenarioError(std::string("model.") + k +
                                        ": only allowed with case \"custom\"");
        } else {
            detail::read(m, "calibrate", "model", s.calibrate_drift);
            if (s.calibrate_drift && m.contains("mu"))
                throw ScenarioError("model.mu: must be omitted when calibrate is true");
            if (!s.calibrate_drift && !m.contains("mu"))
                throw ScenarioError("model.mu: required unless calibrate is true");
            detail::read(m, "mu", "model", s.mu);
            detail::read(m, "sigma", "model", s.sigma);
            detail::read(m, "gamma", "model", s.gamma);
            if (m.contains("phases")) {
                if (!m["phases"].is_array()) throw ScenarioError("model.phases: expected an array");
                for (const auto& ph : m["phases"]) {
                    if (!ph.is_object() || !ph.contains("p") || !ph.contains("beta") ||
                        !ph["p"].is_number() || !ph["beta"].is_number())
                        throw ScenarioError("model.phases: each phase needs numeric p and beta");
                    s.phases.push_back({ph["p"].get<double>(), ph["beta"].get<double>()});
                }
            }
        }
    }
    if (doc.contains("market")) {
        const auto& m = doc["market"];
        detail::check_keys(m, "market", {"r", "delta", "kappa", "alpha", "rho", "m", "P", "lambda",
                                         "tax_cutoff"});
        auto& k = s.market;
        detail::read(m, "r", "market", k.r);
        detail::read(m, "delta", "market", k.delta);
        detail::read(m, "kappa", "market", k.kappa);
        detail::read(m, "alpha", "market", k.alpha);
        detail::read(m, "rho", "market", k.rho);
        detail::read(m, "m", "market", k.m_debt);
        detail::read(m, "P", "market", k.face_value_P);
        if (m.contains("lambda")) k.lambda_obs = parse_rate(m["lambda"], "market.lambda");
        if (m.contains("tax_cutoff")) {
            const auto& v = m["tax_cutoff"];
            if (v.is_string() && v == "P*rho/delta") {
                k.tax_rule = TaxRule::coupon_over_payout;
            } else if (v.is_number()) {
                k.tax_rule = TaxRule::fixed;
                k.v_tax = v.get<double>();
            } else {
                throw ScenarioError("market.tax_cutoff: expected \"P*rho/delta\" or a number");
            }
        }
    }
    if (doc.contains("run")) {
        const auto& r = doc["run"];
        detail::check_keys(r, "run", {"V", "leverage", "vb_offset", "grid", "seed", "n_paths",
                                      "stehfest_order", "t_max", "lambdas", "maturities"});
        auto& k = s.run;
        detail::read(r, "V", "run", k.asset_value);
        detail::read(r, "leverage", "run", k.leverage);
        detail::read(r, "vb_offset", "run", k.vb_offset);
        detail::read(r, "grid", "run", k.grid);
        detail::read(r, "seed", "run", k.seed);
        detail::read(r, "n_paths", "run", k.n_paths);
        detail::read(r, "stehfest_order", "run", k.stehfest_order);
        detail::read(r, "t_max", "run", k.t_max);
        detail::read(r, "maturities", "run", k.maturities);
        if (r.contains("lambdas")) {
            k.lambdas.clear();
            for (const auto& v : r["lambdas"]) k.lambdas.push_back(parse_rate(v, "run.lambdas"));
        }
    }
    return s;
}

inline void validate(const Scenario& s) {
    try {
        s.market.validate();
        (void)s.model();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    const auto& r = s.run;
    if (!(r.asset_value > 0.0)) throw ScenarioError("run.V: must be > 0");
    if (!(r.leverage > 0.0 && r.leverage < 1.0)) throw ScenarioError("run.leverage: must be in (0,1)");
    if (!(r.vb_offset > -1.0)) throw ScenarioError("run.vb_offset: must be > -1");
    if (r.grid < 2) throw ScenarioError("run.grid: must be >= 2");
    if (r.n_paths < 2) throw ScenarioError("run.n_paths: must be >= 2");
    if (r.stehfest_order < 2 || r.stehfest_order > 18 || r.stehfest_order % 2)
        throw ScenarioError("run.stehfest_order: must be even and in [2, 18]");
    if (!(r.t_max > 0.0)) throw ScenarioError("run.t_max: must be > 0");
    for (double l : r.lambdas)
        if (!(l > 0.0)) throw ScenarioError("run.lambdas: entries must be > 0");
    for (std::size_t i = 0; i < r.maturities.size(); ++i)
        if (!(r.maturities[i] > 0.0) || (i > 0 && !(r.maturities[i] > r.maturities[i - 1])))
            throw ScenarioError("run.maturities: must be positive and strictly increasing");
}

inline json scenario_to_json(const Scenario& s) {
    json model = {{"case", s.model_case}};
    if (s.model_case == "custom") {
        model["calibrate"] = s.calibrate_drift;
        if (!s.calibrate_drift) model["mu"] = s.mu;
        model["sigma"] = s.sigma;
        model["gamma"] = s.gamma;
        json phases = json::array();
        for (const auto& p : s.phases) phases.push_back({{"p", p.p}, {"beta", p.beta}});
        model["phases"] = phases;
    }
    const auto& k = s.market;
    json market = {{"r", k.r},         {"delta", k.delta}, {"kappa", k.kappa},
                   {"alpha", k.alpha}, {"rho", k.rho},     {"m", k.m_debt},
                   {"P", k.face_value_P}, {"lambda", rate_to_json(k.lambda_obs)}};
    market["tax_cutoff"] =
        k.tax_rule == TaxRule::fixed ? json(k.v_tax) : json("P*rho/delta");
    const auto& r = s.run;
    json lambdas = json::array();
    for (double l : r.lambdas) lambdas.push_back(rate_to_json(l));
    json run = {{"V", r.asset_value},
                {"leverage", r.leverage},
                {"vb_offset", r.vb_offset},
                {"grid", r.grid},
                {"seed", r.seed},
                {"n_paths", r.n_paths},
                {"stehfest_order", r.stehfest_order},
                {"t_max", r.t_max},
                {"lambdas", lambdas},
                {"maturities", r.maturities}};
    return {{"model", model}, {"market", market}, {"run", run}};
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("scenario: ") + e.what());
    }
    return scenario_from_json(doc);
}

}  // namespace leland::cli
