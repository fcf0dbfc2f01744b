#include "epib/agent_sim.hpp"
#include "epib/config.hpp"
#include "epib/csv.hpp"
#include "epib/estimation.hpp"
#include "epib/inducement.hpp"
#include "epib/meanfield.hpp"
#include "epib/steady_state.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using json = nlohmann::json;
using namespace epib;

namespace {

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

Level log_level() {
    const char* v = std::getenv("EPIB_LOG");
    if (!v) return Level::Info;
    const std::string s(v);
    if (s == "quiet" || s == "0") return Level::Quiet;
    if (s == "debug" || s == "2") return Level::Debug;
    return Level::Info;
}

void log(Level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level())) std::cerr << "[epib] " << msg << '\n';
}

struct Common {
    std::string config;
    std::string out = ".";
    std::string format = "csv";
    std::vector<std::string> set;
    std::optional<std::uint64_t> seed;
};

std::ofstream open_out(const Common& c, const std::string& name) {
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / name;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    log(Level::Info, "writing " + path.string());
    return f;
}

void write_json(const Common& c, const std::string& name, const json& j) {
    auto f = open_out(c, name);
    f << j.dump(2) << '\n';
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config, c.set);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json steady_json(const SteadyState& s) {
    return {{"case", to_string(s.label)},
            {"i_star", num(s.i_star)},
            {"x1_star", num(s.x1_star)},
            {"discriminant", num(s.discriminant)},
            {"residual", s.residual},
            {"P", s.stability.P},
            {"Q", s.stability.Q},
            {"eigenvalues_real", {s.stability.eig1.real(), s.stability.eig2.real()}},
            {"eigenvalues_imag", {s.stability.eig1.imag(), s.stability.eig2.imag()}},
            {"stable", s.stability.stable}};
}

json params_json(const ModelParams& p) {
    json beta = json::array(), c = json::array();
    for (const auto& b : p.behaviors) {
        beta.push_back(b.infection_rate);
        c.push_back(b.intrinsic_payoff);
    }
    return {{"beta", beta}, {"c", c}, {"c_n", p.c_n}, {"gamma", p.gamma}, {"k_bar", p.k_bar},
            {"d_bar", p.d_bar}, {"alpha", p.alpha}, {"sigma", p.sigma}, {"lambda", p.lambda},
            {"m", p.m}, {"omega", p.omega}, {"u_max", p.payoff_scale()}, {"k0", p.k0()}};
}

std::vector<double> initial_shares(const ExperimentConfig& cfg) {
    if (!cfg.x0.empty()) return cfg.x0;
    return std::vector<double>(cfg.params.size(), 1.0 / static_cast<double>(cfg.params.size()));
}

int cmd_simulate_meanfield(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    IntegrateOptions opt;
    opt.dt = cfg.dt;
    opt.horizon = cfg.horizon;
    opt.stride = cfg.stride;
    opt.stop_at_steady = cfg.stop_at_steady;
    const Trajectory tr = integrate(SystemState{cfg.i0, initial_shares(cfg)}, cfg.params, cfg.mode, opt);
    log(Level::Debug, "max simplex drift " + std::to_string(tr.max_drift));
    if (c.format == "csv") {
        auto f = open_out(c, "trajectory.csv");
        write_trajectory_csv(f, tr);
    } else {
        json rows = json::array();
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            rows.push_back({{"t", tr.times[k]}, {"i", tr.states[k].i}, {"x", tr.states[k].x}});
        write_json(c, "trajectory.json", {{"params", params_json(cfg.params)}, {"mode", to_string(cfg.mode)},
                                          {"max_drift", tr.max_drift}, {"converged", tr.converged},
                                          {"samples", rows}});
    }
    if (cfg.starts > 0) {
        const NumericResult r = numeric_steady_state(cfg.params, cfg.mode, cfg.starts);
        json clusters = json::array();
        for (const auto& cl : r.clusters) {
            json eig = json::array();
            for (const auto& z : cl.eigenvalues) eig.push_back({z.real(), z.imag()});
            clusters.push_back({{"i", cl.state.i}, {"x", cl.state.x}, {"residual", cl.residual},
                                {"members", cl.members}, {"eigenvalues", eig}, {"stable", cl.stable}});
        }
        write_json(c, "steady_numeric.json", {{"clusters", clusters}, {"failures", r.failures}});
    }
    std::cout << "final i=" << tr.states.back().i << " steps=" << tr.steps << '\n';
    return 0;
}

int cmd_simulate_agents(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    EnsembleConfig e;
    e.n = cfg.n;
    e.contact_degree = cfg.contact_degree;
    e.info_degree = cfg.info_degree;
    e.horizon = cfg.agent_horizon;
    e.runs = cfg.runs;
    e.base_seed = cfg.seed;
    e.infected0 = cfg.i0;
    e.shares0 = initial_shares(cfg);
    e.sample_every = cfg.sample_every;
    e.threads = cfg.threads;
    e.topology = cfg.topology == "random_regular" ? Topology::RandomRegular : Topology::RingLattice;
    const EnsembleResult r = run_ensemble(cfg.params, cfg.mode, e);
    if (c.format == "csv") {
        auto f = open_out(c, "agents.csv");
        write_ensemble_csv(f, r);
    } else {
        json terms = json::array();
        for (const auto& t : r.terminals) terms.push_back({{"seed", t.seed}, {"i", t.i}, {"x", t.x}});
        write_json(c, "agents.json", {{"times", r.times}, {"i_mean", r.i_mean}, {"i_std", r.i_std},
                                      {"x_mean", r.x_mean}, {"x_std", r.x_std}, {"terminals", terms}});
    }
    if (!cfg.edge_list.empty()) {
        auto f = open_out(c, cfg.edge_list);
        write_edge_list(f, build_networks(e).contact);
    }
    std::cout << "terminal i_mean=" << r.i_mean.back() << '\n';
    return 0;
}

int cmd_steady(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    const SteadyState s = classify(cfg.params, cfg.mode);
    json report = {{"params", params_json(cfg.params)}, {"mode", to_string(cfg.mode)}, {"steady_state", steady_json(s)}};
    if (s.label == CaseLabel::NoSteadyState) report["note"] = "no steady state: k_bar = gamma/beta1";
    const RadicalTest rt = radical_regime_test(cfg.params);
    report["radical_regime"] = {{"possible", rt.possible}, {"spread_margin", rt.spread_margin},
                                {"loss_ratio", rt.loss_ratio}, {"loss_bound", rt.loss_bound}};
    if (c.format == "json") {
        write_json(c, "steady.json", report);
    } else {
        auto f = open_out(c, "steady.csv");
        SweepRow row;
        row.value = cfg.params.beta(0);
        row.state = s;
        write_sweep_csv(f, {row});
    }
    std::cout << to_string(s.label) << " i*=" << s.i_star << " x1*=" << s.x1_star << '\n';
    return 0;
}

int cmd_sweep(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    std::vector<double> grid = cfg.sweep_grid;
    if (grid.empty()) {
        for (int k = 0; k <= cfg.sweep_steps; ++k)
            grid.push_back(cfg.sweep_min + (cfg.sweep_max - cfg.sweep_min) * k / cfg.sweep_steps);
    }
    const auto rows = sweep(cfg.params, cfg.sweep_axis == "alpha" ? SweepAxis::Alpha : SweepAxis::Beta1, grid, cfg.mode);
    if (c.format == "csv") {
        auto f = open_out(c, "sweep.csv");
        write_sweep_csv(f, rows);
    } else {
        json out = json::array();
        for (const auto& r : rows)
            out.push_back({{"param_value", r.value}, {"state", r.state ? steady_json(*r.state) : json(nullptr)},
                           {"error", r.error}});
        write_json(c, "sweep.json", {{"axis", cfg.sweep_axis}, {"rows", out}});
    }
    std::cout << rows.size() << " sweep points\n";
    return 0;
}

int cmd_compare(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    const RationalityReport r = compare_rationality(cfg.params, cfg.alpha_low, cfg.alpha_high);
    json report = {{"alpha_low", r.alpha_low}, {"alpha_high", r.alpha_high}, {"low", steady_json(r.low)},
                   {"high", steady_json(r.high)}, {"both_case3", r.both_case3},
                   {"prediction_holds", r.prediction_holds}, {"summary", r.summary}};
    if (r.regime) report["regime"] = *r.regime == Regime::Overweighting ? "overweighting" : "underweighting";
    if (!r.subcase.empty()) report["subcase"] = r.subcase;
    if (c.format == "json") {
        write_json(c, "compare.json", report);
    } else {
        auto f = open_out(c, "compare.csv");
        SweepRow lo{r.alpha_low, r.low, ""}, hi{r.alpha_high, r.high, ""};
        write_sweep_csv(f, {lo, hi});
    }
    std::cout << r.summary << '\n';
    return 0;
}

int cmd_optimize(const Common& c) {
    const ExperimentConfig cfg = load(c);
    cfg.require_model();
    const GuidanceCost cost = cfg.cost == "none" ? GuidanceCost::none() : GuidanceCost::squared_norm();
    const OptimizeResult r = optimize(cfg.target, cfg.params, cost, cfg.optimizer);
    json stages = json::array();
    for (const auto& s : cfg.optimizer.stages) stages.push_back({s.penalty_weight, s.learning_rate, s.momentum, s.iters});
    json report = {{"inputs", {{"params", params_json(cfg.params)}, {"target_i", cfg.target.i_max},
                               {"target_x", cfg.target.x_min}, {"mu", cfg.optimizer.penalty_weight},
                               {"barrier_t", cfg.optimizer.barrier_scale}, {"momentum", cfg.optimizer.momentum},
                               {"learning_rate", cfg.optimizer.learning_rate},
                               {"max_iters", cfg.optimizer.max_iters}, {"stages", stages}, {"cost", cfg.cost}}},
                   {"feasible", r.feasible},
                   {"variant", to_string(r.variant)},
                   {"delta", {{"d_alpha", r.delta.d_alpha}, {"d_cn", r.delta.d_cn}, {"d_c1", r.delta.d_c1},
                              {"d_c2", r.delta.d_c2}}},
                   {"achieved", steady_json(r.achieved)},
                   {"case_before", to_string(r.case_before)},
                   {"case_after", to_string(r.case_after)},
                   {"loss", r.loss},
                   {"case_trace", r.case_trace}};
    if (!r.feasible) report["note"] = "target infeasible: closest point on the steady curve returned";
    write_json(c, "optimize.json", report);
    auto f = open_out(c, "loss.csv");
    write_loss_csv(f, r.loss_history);
    std::cout << (r.feasible ? "feasible" : "infeasible") << " target; achieved i=" << r.achieved.i_star
              << " x1=" << r.achieved.x1_star << '\n';
    return 0;
}

std::vector<SubjectRecord> read_subject_files(const ExperimentConfig& cfg) {
    if (cfg.responses.empty()) throw ConfigError("line " + std::to_string(cfg.end_line) + " (end of file): missing required key 'responses'", cfg.end_line);
    std::ifstream resp(cfg.responses);
    if (!resp) throw ConfigError("cannot open responses file '" + cfg.responses + "'", 0);
    std::ifstream ch;
    if (!cfg.choices.empty()) {
        ch.open(cfg.choices);
        if (!ch) throw ConfigError("cannot open choices file '" + cfg.choices + "'", 0);
    }
    return read_subjects(resp, cfg.choices.empty() ? nullptr : &ch);
}

int cmd_estimate(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const auto subjects = read_subject_files(cfg);
    const double sigma = cfg.params.sigma;
    if (c.format == "csv") {
        auto f = open_out(c, "estimates.csv");
        write_estimates_csv(f, subjects, sigma);
    } else {
        json rows = json::array();
        for (const auto& s : subjects) {
            const AlphaFit fit = estimate_alpha(s.responses, sigma);
            rows.push_back({{"subject_id", s.id}, {"alpha_hat", fit.alpha_hat}, {"in_range", fit.in_range},
                            {"r2", fit.r2}, {"free_slope", fit.free_slope}, {"free_intercept", fit.free_intercept},
                            {"appetite", s.choices.empty() ? json(nullptr) : json(risk_appetite(s.choices))}});
        }
        write_json(c, "estimates.json", {{"sigma", sigma}, {"subjects", rows}});
    }
    std::cout << subjects.size() << " subjects\n";
    return 0;
}

int cmd_correlate(const Common& c) {
    const ExperimentConfig cfg = load(c);
    std::vector<double> xs, ys;
    json groups = json::array();
    if (!cfg.series.empty()) {
        std::ifstream in(cfg.series);
        if (!in) throw ConfigError("cannot open series file '" + cfg.series + "'", 0);
        const CsvTable t = read_csv(in);
        const std::size_t cx = t.column("x"), cy = t.column("y");
        for (std::size_t k = 0; k < t.rows.size(); ++k) {
            xs.push_back(parse_double(t.rows[k][cx], t.lines[k], "x"));
            ys.push_back(parse_double(t.rows[k][cy], t.lines[k], "y"));
        }
    } else {
        const auto subjects = read_subject_files(cfg);
        std::vector<SubjectSummary> sums;
        for (const auto& s : subjects) {
            if (s.choices.empty()) throw std::runtime_error("subject " + s.id + " has no scenario choices");
            sums.push_back({s.id, estimate_alpha(s.responses, cfg.params.sigma).alpha_hat, risk_appetite(s.choices)});
        }
        for (const auto& g : group_by_appetite(sums, cfg.bins)) {
            groups.push_back({{"lower", g.lower}, {"upper", g.upper}, {"count", g.count},
                              {"mean_appetite", g.mean_appetite}, {"mean_alpha", g.mean_alpha}});
            if (g.count == 0) continue;
            xs.push_back(g.mean_appetite);
            ys.push_back(g.mean_alpha);
        }
    }
    const Correlation r = correlate(xs, ys);
    if (c.format == "csv") {
        auto f = open_out(c, "correlation.csv");
        f.precision(12);
        f << "method,coefficient,p_value,n\n";
        f << "pearson," << r.pearson << ',' << r.pearson_p << ',' << r.n << '\n';
        f << "spearman," << r.spearman << ',' << r.spearman_p << ',' << r.n << '\n';
    } else {
        write_json(c, "correlation.json", {{"pearson", {{"r", r.pearson}, {"p_value", r.pearson_p}}},
                                           {"spearman", {{"rho", r.spearman}, {"p_value", r.spearman_p}}},
                                           {"n", r.n}, {"groups", groups}});
    }
    std::cout << "pearson r=" << r.pearson << " spearman rho=" << r.spearman << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prospect-theory epidemic-behavior co-evolution toolkit"};
    app.require_subcommand(1);
    Common common;
    using Fn = int (*)(const Common&);
    const std::vector<std::tuple<std::string, std::string, Fn>> commands = {
        {"simulate-meanfield", "integrate the mean-field ODE", cmd_simulate_meanfield},
        {"simulate-agents", "run the agent-based ensemble", cmd_simulate_agents},
        {"steady-state", "classify the two-behavior steady state", cmd_steady},
        {"sweep", "steady states over a beta1 or alpha grid", cmd_sweep},
        {"compare-rationality", "compare steady states at two rationality levels", cmd_compare},
        {"optimize", "behavior-inducement optimizer", cmd_optimize},
        {"estimate-alpha", "estimate rationality coefficients from responses", cmd_estimate},
        {"correlate", "Pearson/Spearman correlation of appetite and rationality", cmd_correlate},
    };
    Fn chosen = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", common.config, "YAML configuration file")->required();
        sub->add_option("--seed", common.seed, "64-bit seed (overrides config)");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--set", common.set, "override a config key: key=value");
        sub->callback([&chosen, f = fn] { chosen = f; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return chosen(common);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const CsvError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
