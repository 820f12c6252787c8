#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "leland/mc_oracle.hpp"
#include "leland/spreads.hpp"
#include "leland/two_stage.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace leland;
using leland::cli::json;

namespace {

struct Flags {
    std::string scenario_path;
    std::string model_case;
    std::string lambda;
    std::optional<double> leverage;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
    std::optional<double> vb_offset;
    std::optional<std::size_t> paths;
};

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        row_strings(header);
    }
    void row(const std::vector<double>& values) {
        std::vector<std::string> s;
        for (double v : values) s.push_back(fmt(v));
        row_strings(s);
    }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    fs::path path_;
    std::ofstream out_;
};

struct Run {
    std::string command;
    cli::Scenario sc;
    fs::path out_dir;
    std::vector<std::string> outputs;
    json summary = json::object();

    FluctuationContext context() const { return FluctuationContext(sc.model()); }
    const MarketParams& market() const { return sc.market; }

    Csv csv(const std::string& name, const std::vector<std::string>& header) {
        outputs.push_back(name);
        return Csv(out_dir / name, header);
    }
};

cli::Scenario resolve(const Flags& f) {
    cli::Scenario sc = f.scenario_path.empty() ? cli::Scenario{} : cli::load_scenario(f.scenario_path);
    if (!f.model_case.empty() && f.model_case != sc.model_case) {
        if (f.model_case == "custom")
            throw cli::ScenarioError("--case custom: model parameters must come from --scenario");
        cli::apply_case(sc, f.model_case);
        sc.calibrate_drift = false;
    }
    if (!f.lambda.empty()) {
        try {
            sc.market.lambda_obs = cli::parse_rate(
                f.lambda == "inf" ? json("inf") : json(std::stod(f.lambda)), "--lambda");
        } catch (const std::invalid_argument&) {
            throw cli::ScenarioError("--lambda: expected a number or inf");
        }
    }
    // Leverage is accepted either as a fraction or in percent (50 -> 0.5).
    if (f.leverage) sc.run.leverage = *f.leverage > 1.0 ? *f.leverage / 100.0 : *f.leverage;
    if (f.seed) sc.run.seed = *f.seed;
    if (f.grid) sc.run.grid = *f.grid;
    if (f.vb_offset) sc.run.vb_offset = *f.vb_offset;
    if (f.paths) sc.run.n_paths = *f.paths;
    cli::validate(sc);
    return sc;
}

double chosen_barrier(const Run& run, const FluctuationContext& ctx) {
    return optimal_barrier(ctx, run.market()) * (1.0 + run.sc.run.vb_offset);
}

void cmd_table1(Run& run) {
    const auto ctx = run.context();
    const double V = run.sc.run.asset_value, L = run.sc.run.leverage;
    auto rows = run.csv("table1.csv", {"lambda", "P_hat", "rho_hat", "V_B_hat"});
    std::vector<Calibration> cals;
    for (double lam : run.sc.run.lambdas) {
        const auto c = calibrate_leverage(ctx, run.market().with_lambda(lam), V, L);
        rows.row({lam, c.face_value_P, c.rho, c.v_barrier});
        cals.push_back(c);
    }
    std::vector<std::string> header = {"quantity"};
    for (double lam : run.sc.run.lambdas) header.push_back("lambda=" + fmt(lam));
    auto layout = run.csv("table1_layout.csv", header);
    const auto line = [&](const char* name, auto get) {
        std::vector<std::string> cells = {name};
        for (const auto& c : cals) cells.push_back(fmt(get(c)));
        layout.row_strings(cells);
    };
    line("P_hat", [](const Calibration& c) { return c.face_value_P; });
    line("rho_hat", [](const Calibration& c) { return c.rho; });
    line("V_B_hat", [](const Calibration& c) { return c.v_barrier; });
    for (std::size_t i = 0; i < cals.size(); ++i)
        std::printf("lambda=%-6s P=%.4f rho=%.5f V_B=%.4f\n", fmt(run.sc.run.lambdas[i]).c_str(),
                    cals[i].face_value_P, cals[i].rho, cals[i].v_barrier);
}

// Defining residual of V_B*: E(V_B*; V_B*) under Poisson observation, the
// smooth-fit equation under continuous observation (where E(V_B; V_B) = 0
// for every V_B).
double barrier_residual(const FluctuationContext& ctx, const MarketParams& mkt, double vb) {
    if (!(vb > 0.0)) return 0.0;
    return mkt.classical() ? classical_barrier_equation(ctx, mkt, vb)
                           : equity_at_barrier(ctx, mkt, vb);
}

void cmd_barrier(Run& run) {
    const auto ctx = run.context();
    const auto& mkt = run.market();
    const double vb = optimal_barrier(ctx, mkt);
    const double residual = barrier_residual(ctx, mkt, vb);
    run.summary["lambda"] = cli::rate_to_json(mkt.lambda_obs);
    run.summary["V_B_star"] = vb;
    run.summary["barrier_residual"] = residual;
    std::printf("V_B* = %.10g  (residual %.3g)\n", vb, residual);

    auto sweep = run.csv("barrier_sweep.csv", {"lambda", "V_B_star", "residual"});
    for (double lam : run.sc.run.lambdas) {
        const auto m = mkt.with_lambda(lam);
        const double b = optimal_barrier(ctx, m);
        sweep.row({lam, b, barrier_residual(ctx, m, b)});
    }
}

void cmd_value(Run& run) {
    const auto ctx = run.context();
    const auto& mkt = run.market();
    const double vb = chosen_barrier(run, ctx);
    if (!(vb > 0.0)) throw std::runtime_error("value: the barrier is zero, nothing to plot");
    const double hi = std::max(run.sc.run.asset_value, 3.0 * vb);
    auto out = run.csv("value.csv", {"V", "debt", "firm", "equity"});
    double min_equity = std::numeric_limits<double>::infinity();
    for (double V : uniform_grid(vb, hi, run.sc.run.grid)) {
        const auto cs = capital_structure(ctx, mkt, V, vb);
        out.row({V, cs.debt, cs.firm, cs.equity});
        min_equity = std::min(min_equity, cs.equity);
    }
    run.summary["V_B"] = vb;
    run.summary["min_equity"] = min_equity;
    run.summary["limited_liability_violated"] = min_equity < 0.0;
    std::printf("V_B = %.10g  min equity on grid = %.10g%s\n", vb, min_equity,
                min_equity < 0.0 ? "  (limited liability violated)" : "");
}

void cmd_dist(Run& run) {
    const auto ctx = run.context();
    const auto& mkt = run.market();
    const auto& rp = run.sc.run;
    const double vb = chosen_barrier(run, ctx);
    const double V = rp.asset_value;
    if (!(vb > 0.0)) throw std::runtime_error("dist: the barrier is zero, bankruptcy never occurs");
    if (mkt.classical() && !(V > vb))
        throw std::runtime_error("dist: continuous observation needs V > V_B");

    auto tcsv = run.csv("dist_time.csv", {"t", "density", "cdf"});
    for (int i = 1; i <= rp.grid; ++i) {
        const double t = rp.t_max * i / rp.grid;
        tcsv.row({t, std::max(0.0, bankruptcy_time_density(ctx, mkt, V, vb, t, rp.stehfest_order)),
                  bankruptcy_time_cdf(ctx, mkt, V, vb, t, rp.stehfest_order)});
    }
    auto vcsv = run.csv("dist_value.csv", {"v", "density", "cdf", "atom_mass_at_barrier"});
    for (int i = 1; i <= rp.grid; ++i) {
        const double v = vb * i / rp.grid;
        const auto p = bankruptcy_value(ctx, mkt, V, vb, v, rp.stehfest_order);
        vcsv.row({v, std::max(0.0, p.density), p.cdf, p.atom});
    }
    run.summary["V"] = V;
    run.summary["V_B"] = vb;
    run.summary["bankruptcy_probability"] = bankruptcy_probability(ctx, mkt, V, vb);
    run.summary["atom_at_barrier"] = bankruptcy_value_atom(ctx, mkt, V, vb);
}

void cmd_two_stage(Run& run) {
    const auto ctx = run.context();
    const double V = run.sc.run.asset_value;
    const auto res =
        optimize_face_value(ctx, run.market(), V, uniform_grid(0.0, V, run.sc.run.grid));
    auto out = run.csv("two_stage.csv", {"P_over_V", "firm", "debt", "V_B_star"});
    for (const auto& p : res.profile) out.row({p.face_value_P / V, p.firm, p.debt, p.v_barrier});
    run.summary["P_star"] = res.face_value_P;
    run.summary["P_star_over_V"] = res.face_value_P / V;
    run.summary["firm_at_P_star"] = res.firm;
    run.summary["V_B_at_P_star"] = res.v_barrier;
    std::printf("P*/V = %.10g  firm = %.10g  V_B* = %.10g\n", res.face_value_P / V, res.firm,
                res.v_barrier);
}

void cmd_spreads(Run& run, bool single_lambda) {
    const auto ctx = run.context();
    const auto& rp = run.sc.run;
    std::vector<double> lambdas = single_lambda ? std::vector<double>{run.market().lambda_obs}
                                                : rp.lambdas;
    auto curves = run.csv("spreads.csv", {"lambda", "t", "spread_bps"});
    auto cal_csv = run.csv("spreads_calibration.csv", {"lambda", "P_hat", "rho_hat", "V_B_hat"});
    for (double lam : lambdas) {
        const auto tmpl = run.market().with_lambda(lam);
        const auto c = spread_curve(ctx, tmpl, rp.asset_value, rp.leverage, rp.maturities,
                                    rp.stehfest_order);
        cal_csv.row({lam, c.calibrated.face_value_P, c.calibrated.rho, c.calibrated.v_barrier});
        for (std::size_t i = 0; i < c.maturities.size(); ++i)
            curves.row({lam, c.maturities[i], 1e4 * c.spreads[i]});
    }
}

json estimate_json(const Estimate& e, std::optional<double> analytic = std::nullopt) {
    json j = {{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}};
    if (analytic) {
        j["analytic"] = *analytic;
        j["z"] = e.z_score(*analytic);
    }
    return j;
}

void cmd_simulate(Run& run) {
    const auto& mkt = run.market();
    if (mkt.classical()) throw std::runtime_error("simulate: needs a finite --lambda");
    const auto ctx = run.context();
    const auto& rp = run.sc.run;
    const double V = rp.asset_value;
    const double vb = chosen_barrier(run, ctx);
    if (!(vb > 0.0 && V >= vb)) throw std::runtime_error("simulate: needs V >= V_B > 0");
    SimConfig cfg;
    cfg.seed = rp.seed;
    cfg.n_paths = rp.n_paths;
    cfg.threads = 0;
    const auto est = estimate_functionals(cfg, ctx.model(), mkt, V, vb);
    const double x = std::log(V / vb);
    const double r = mkt.r, lam = mkt.lambda_obs;
    const auto cs = capital_structure(ctx, mkt, V, vb);
    run.summary["V"] = V;
    run.summary["V_B"] = vb;
    run.summary["n_paths"] = rp.n_paths;
    run.summary["seed"] = rp.seed;
    run.summary["estimates"] = {
        {"J_r_theta0", estimate_json(est.j_r_0, j_fn(ctx, r, lam, x, 0.0))},
        {"J_r_theta1", estimate_json(est.j_r_1, j_fn(ctx, r, lam, x, 1.0))},
        {"J_r_plus_m_theta0", estimate_json(est.j_rm_0, j_fn(ctx, r + mkt.m_debt, lam, x, 0.0))},
        {"J_r_plus_m_theta1", estimate_json(est.j_rm_1, j_fn(ctx, r + mkt.m_debt, lam, x, 1.0))},
        {"Lambda", estimate_json(est.lambda, lambda_fn(ctx, r, lam, std::log(V), std::log(vb),
                                                           mkt.log_tax_cutoff()))},
        {"debt", estimate_json(est.debt, cs.debt)},
        {"firm", estimate_json(est.firm, cs.firm)},
        {"equity", estimate_json(est.equity, cs.equity)}};

    SimConfig dcfg = cfg;
    dcfg.n_paths = std::min<std::size_t>(rp.n_paths, 100000);
    dcfg.horizon = rp.t_max;
    const auto samples = simulate_default(dcfg, ctx.model(), mkt, V, vb);
    run.summary["censored_fraction"] = censored_fraction(samples);
    auto out = run.csv("simulate_time_cdf.csv", {"t", "mc_cdf", "mc_std_error", "analytic_cdf"});
    for (int i = 1; i <= std::min(rp.grid, 50); ++i) {
        const double t = rp.t_max * i / std::min(rp.grid, 50);
        const auto e = empirical_time_cdf(samples, t);
        out.row({t, e.mean, e.std_error, bankruptcy_time_cdf(ctx, mkt, V, vb, t, rp.stehfest_order)});
    }
    run.outputs.push_back("simulate_summary.json");
    {
        std::ofstream js(run.out_dir / "simulate_summary.json");
        js << run.summary.dump(2) << '\n';
    }
    for (const auto& [k, v] : run.summary["estimates"].items())
        std::printf("%-18s mc=%.8g +- %.2g  analytic=%.8g  z=%+.2f\n", k.c_str(),
                    v["mean"].get<double>(), v["std_error"].get<double>(),
                    v["analytic"].get<double>(), v["z"].get<double>());
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capital structure under Poisson observation with a hyperexponential jump diffusion"};
    app.require_subcommand(1);
    Flags f;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", f.scenario_path, "JSON scenario file")->check(CLI::ExistingFile);
        sub->add_option("--case", f.model_case, "Model case")->check(CLI::IsMember({"A", "B", "custom"}));
        sub->add_option("--lambda", f.lambda, "Observation rate (number or inf)");
        sub->add_option("--leverage", f.leverage, "Target leverage, fraction or percent");
        sub->add_option("--out-dir", f.out_dir, "Output directory");
        sub->add_option("--seed", f.seed, "Monte Carlo seed");
        sub->add_option("--grid", f.grid, "Grid size");
        sub->add_option("--vb-offset", f.vb_offset, "Relative barrier shift from V_B*");
        sub->add_option("--paths", f.paths, "Monte Carlo paths");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"value", "Debt, firm and equity values over a V grid"},
        {"barrier", "Optimal barrier and its sweep over lambda"},
        {"dist", "Bankruptcy time and asset value distributions"},
        {"two-stage", "Optimal face value with the barrier re-optimized"},
        {"spreads", "Calibrated credit spread term structures"},
        {"simulate", "Monte Carlo oracle run against the analytic values"},
        {"table1", "Calibrated (P, rho, V_B) for every lambda"}};
    for (const auto& [name, desc] : commands) add_common(app.add_subcommand(name, desc));
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Run run;
        run.command = command;
        run.sc = resolve(f);
        run.out_dir = f.out_dir;
        fs::create_directories(run.out_dir);

        if (command == "table1") cmd_table1(run);
        else if (command == "barrier") cmd_barrier(run);
        else if (command == "value") cmd_value(run);
        else if (command == "dist") cmd_dist(run);
        else if (command == "two-stage") cmd_two_stage(run);
        else if (command == "spreads") cmd_spreads(run, !f.lambda.empty());
        else if (command == "simulate") cmd_simulate(run);

        write_json(run.out_dir / "resolved_scenario.json", cli::scenario_to_json(run.sc));
        json manifest = {{"command", command},
                         {"arguments", std::vector<std::string>(argv + 1, argv + argc)},
                         {"scenario", "resolved_scenario.json"},
                         {"outputs", run.outputs},
                         {"summary", run.summary}};
        write_json(run.out_dir / "run_manifest.json", manifest);
        return 0;
    } catch (const cli::ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return 1;
    }
}
