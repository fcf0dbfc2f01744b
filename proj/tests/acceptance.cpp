// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "epib/agent_sim.hpp"
#include "epib/estimation.hpp"
#include "epib/inducement.hpp"
#include "epib/meanfield.hpp"
#include "epib/steady_state.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace epib;

namespace {

int failures = 0;
std::vector<int> selected; // empty: all

bool wanted(int id) { return selected.empty() || std::find(selected.begin(), selected.end(), id) != selected.end(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

void run(int id, const char* title, const std::function<Outcome()>& body) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> linspace(double a, double b, int steps) {
    std::vector<double> g;
    for (int k = 0; k <= steps; ++k) g.push_back(a + (b - a) * k / steps);
    return g;
}

ModelParams three_regime(double beta1, double alpha) { return two_behavior(beta1, 0.0, -1.0, -20.0, 0.03, 10.0, alpha); }

ModelParams guided(double beta1) { return two_behavior(beta1, 0.5, -1.0, -10.0, 0.03, 10.0, 0.8); }

ModelParams three_behavior(const std::vector<double>& c, const std::vector<double>& beta) {
    ModelParams p;
    for (std::size_t j = 0; j < c.size(); ++j) p.behaviors.push_back({beta[j], c[j]});
    p.gamma = 0.03;
    p.c_n = -20.0;
    p.alpha = 0.6;
    p.m = 0.1;
    return p;
}

// Agent fixture shared by the ensemble criteria.
EnsembleConfig agent_fixture(Topology topo) {
    EnsembleConfig e;
    e.n = 500;
    e.contact_degree = 10;
    e.info_degree = 20;
    e.runs = 50;
    e.horizon = 3000;
    e.sample_every = 3000;
    e.base_seed = 2024;
    e.topology = topo;
    return e;
}

// Criterion 9 collects every steady state produced by the other checks.
struct CertifiedPoint {
    double i, x1;
    ModelParams p;
    Mode mode;
    std::string origin;
};
std::vector<CertifiedPoint> certified;

void keep(const SteadyState& s, const ModelParams& p, Mode mode, const std::string& origin) {
    if (s.label != CaseLabel::NoSteadyState) certified.push_back({s.i_star, s.x1_star, p, mode, origin});
}

Outcome criterion1() {
    const std::vector<double> grid = linspace(0.001, 0.02, 40);
    int ode_checked = 0;
    double worst = 0.0;
    std::string where;
    for (Mode mode : {Mode::EUT, Mode::PT}) {
        const ModelParams base = three_regime(0.02, mode == Mode::PT ? 0.6 : 1.0);
        const auto rows = sweep(base, SweepAxis::Beta1, grid, mode);
        int stage = 0;
        bool seen[3] = {false, false, false};
        for (const auto& r : rows) {
            if (!r.state) return {false, fmt("%s sweep error at beta1=%.5f: %s", to_string(mode), r.value, r.error.c_str())};
            const CaseLabel l = r.state->label;
            if (l == CaseLabel::NoSteadyState) return {false, fmt("unexpected NoSteadyState at %.5f", r.value)};
            const int s = static_cast<int>(l);
            if (s < stage) return {false, fmt("%s case order breaks at beta1=%.5f", to_string(mode), r.value)};
            stage = s;
            seen[s] = true;
            if ((r.value < 0.003) != (l == CaseLabel::Case1))
                return {false, fmt("Case1 boundary misplaced at beta1=%.5f", r.value)};

            ModelParams p = base;
            p.behaviors[0].infection_rate = r.value;
            keep(*r.state, p, mode, fmt("sweep %s %.5f", to_string(mode), r.value));
            IntegrateOptions opt;
            opt.dt = 0.5;
            opt.horizon = 4.0e5;
            opt.stop_at_steady = true;
            opt.steady_tol = 1e-13;
            opt.stride = 1 << 30;
            const Trajectory tr = integrate({0.05, {0.5, 0.5}}, p, mode, opt);
            const SystemState& end = tr.states.back();
            const double err = std::max(std::abs(end.i - r.state->i_star), std::abs(end.x[0] - r.state->x1_star));
            if (err > worst) {
                worst = err;
                where = fmt("%s beta1=%.5f", to_string(mode), r.value);
            }
            ++ode_checked;
        }
        if (!(seen[0] && seen[1] && seen[2])) return {false, fmt("%s sweep misses a case", to_string(mode))};
        if (classify(three_regime(0.003, base.alpha), mode).label != CaseLabel::NoSteadyState)
            return {false, "beta1 = 0.003 is not flagged as the Case1/Case2 boundary"};
    }
    return {worst < 1e-6, fmt("Case1->Case2->Case3 in EUT and PT(0.6), boundary at 0.003; %d ODE checks, max |diff| %.2e (%s), tol 1e-6",
                             ode_checked, worst, where.c_str())};
}

Outcome agent_sweep(Topology topo, int* hits_out) {
    const std::vector<double> grid = linspace(0.002, 0.02, 9);
    int hits = 0;
    std::string misses;
    for (double b : grid) {
        ModelParams p = three_regime(b, 0.6);
        p.m = 0.1;
        const SteadyState s = classify_pt(p);
        const EnsembleResult r = run_ensemble(p, Mode::PT, agent_fixture(topo));
        const double di = std::abs(r.i_mean.back() - s.i_star), dx = std::abs(r.x_mean.back()[0] - s.x1_star);
        if (di <= 0.05 && dx <= 0.05) ++hits;
        else misses += fmt(" %.3f(di=%.3f,dx=%.3f)", b, di, dx);
    }
    *hits_out = hits;
    return {hits >= 9, fmt("%d/10 points within 0.05 (need 9);%s", hits, misses.empty() ? " none missed" : misses.c_str())};
}

Outcome criterion3() {
    const std::vector<double> alphas{0.6, 0.8, 1.0};
    int points = 0;
    for (double b : linspace(0.001, 0.02, 40)) {
        std::vector<SteadyState> s;
        bool ok = true;
        for (double a : alphas) {
            const ModelParams p = three_regime(b, a);
            s.push_back(classify_pt(p));
            keep(s.back(), p, Mode::PT, fmt("alpha order %.2f %.5f", a, b));
            ok = ok && s.back().label == CaseLabel::Case3 && 10.0 * b * s.back().i_star <= 1.0 / std::exp(1.0);
        }
        if (!ok) continue;
        ++points;
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k].i_star < s[k - 1].i_star || s[k].x1_star < s[k - 1].x1_star)
                return {false, fmt("order breaks at beta1=%.5f between alpha=%.1f and %.1f", b, alphas[k - 1], alphas[k])};
    }
    return {points > 0, fmt("i* and x1* nondecreasing in alpha at %d qualifying beta1 points", points)};
}

Outcome criterion4() {
    const std::vector<double> alphas{0.4, 0.6, 0.8, 1.0};
    std::vector<double> xs;
    for (double a : alphas) {
        ModelParams p = two_behavior(0.1, 0.0, -1.0, -1.1, 0.12, 10.0, a);
        const SteadyState s = classify_pt(p);
        keep(s, p, Mode::PT, fmt("radical %.1f", a));
        if (s.label != CaseLabel::Case3) return {false, fmt("alpha=%.1f is %s, not Case3", a, to_string(s.label))};
        xs.push_back(s.x1_star);
    }
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (!(xs[k] < xs[k - 1])) return {false, fmt("x1* not strictly decreasing at alpha=%.1f", alphas[k])};
    const bool radical = radical_regime_test(two_behavior(0.1, 0.0, -1.0, -1.1, 0.12, 10.0, 0.6)).possible;
    const bool conservative = radical_regime_test(two_behavior(0.02, 0.0, -1.0, -20.0, 0.03, 10.0, 0.6)).possible;
    return {radical && !conservative,
            fmt("x1* = %.4f > %.4f > %.4f > %.4f over alpha 0.4..1.0; test: radical=%d, c_n=-20 -> %d", xs[0], xs[1], xs[2],
                xs[3], radical, conservative)};
}

// Penalty continuation used for the feasible targets.
OptimizerConfig continuation() {
    OptimizerConfig c;
    c.stages = {{100.0, 1e-4, 0.99, 5000}, {1e3, 1e-5, 0.99, 5000}, {1e4, 1e-6, 0.99, 10000}};
    return c;
}

Outcome criterion5() {
    struct Target {
        double beta, i, x;
    };
    const std::vector<Target> targets{{0.01, 0.3, 0.35}, {0.01, 0.5, 0.5}, {0.02, 0.3, 0.15}, {0.02, 0.5, 0.25}, {0.02, 0.7, 0.4}};
    const OptimizerConfig cfg = continuation();
    int passed = 0;
    double slowest = 0.0;
    std::string detail;
    for (const auto& t : targets) {
        const auto t0 = std::chrono::steady_clock::now();
        const ModelParams p = guided(t.beta);
        const ConstraintTarget target{t.i, t.x};
        if (!feasibility(target, p)) return {false, fmt("target (%.2f, %.2f) is not feasible", t.i, t.x)};
        const OptimizeResult r = optimize(target, p, GuidanceCost::squared_norm(), cfg);
        ModelParams pinned = p;
        pinned.u_max = p.payoff_scale();
        keep(r.achieved, adjusted(pinned, r.delta), Mode::PT, "optimizer");
        const auto& h = r.loss_history;
        const int iters = static_cast<int>(h.size()) - 1;
        const auto tail = h.end() - std::min<std::ptrdiff_t>(1000, static_cast<std::ptrdiff_t>(h.size()));
        const double range = *std::max_element(tail, h.end()) - *std::min_element(tail, h.end());
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, secs);
        const bool ok = r.variant == Variant::Feasible && r.achieved.i_star <= t.i + 1e-4 &&
                        r.achieved.x1_star >= t.x - 1e-4 && range < 1e-6 * std::abs(h.back()) && iters <= 20000 &&
                        secs < 120.0;
        passed += ok;
        detail += fmt(" (%.2f,%.2f)@%.2f:i=%.5f,x=%.5f,range/loss=%.1e%s", t.i, t.x, t.beta, r.achieved.i_star,
                      r.achieved.x1_star, range / std::abs(h.back()), ok ? "" : "!");
    }
    return {passed == static_cast<int>(targets.size()),
            fmt("%d/5 targets, slowest %.1f s;", passed, slowest) + detail};
}

Outcome criterion6() {
    struct Target {
        double beta, i, x;
    };
    const std::vector<Target> targets{{0.01, 0.1, 0.9}, {0.01, 0.2, 0.6}, {0.02, 0.1, 0.5}, {0.02, 0.3, 0.6}, {0.02, 0.05, 0.9}};
    double worst_gap = -1e300, worst_res = 0.0;
    int passed = 0;
    for (const auto& t : targets) {
        const ModelParams p = guided(t.beta);
        const ConstraintTarget target{t.i, t.x};
        if (feasibility(target, p)) return {false, fmt("target (%.2f, %.2f) is feasible", t.i, t.x)};
        const double i_bar = 1.0 - p.gamma / (p.k_bar * t.beta);
        auto dist = [&](double i, double x) { return (i - t.i) * (i - t.i) + (x - t.x) * (x - t.x); };
        double scan = 1e300;
        for (int k = 0; k <= 200000; ++k) {
            const double i = i_bar * k / 200000.0;
            scan = std::min(scan, dist(i, steady_curve(i, p)));
        }
        const OptimizeResult with = optimize(target, p, GuidanceCost::squared_norm(), {});
        const OptimizeResult without = optimize(target, p, GuidanceCost::none(), {});
        const double d_with = dist(with.achieved.i_star, with.achieved.x1_star);
        const double d_without = dist(without.achieved.i_star, without.achieved.x1_star);
        const double offset = std::max(0.0, d_with - d_without);
        const double res = std::abs(with.achieved.x1_star - steady_curve(with.achieved.i_star, p));
        worst_res = std::max({worst_res, res, std::abs(without.achieved.x1_star - steady_curve(without.achieved.i_star, p))});
        worst_gap = std::max(worst_gap, d_with - scan - offset);
        passed += res < 1e-8 && d_with - scan <= 1e-3 + offset && with.variant == Variant::Infeasible;
    }
    return {passed == static_cast<int>(targets.size()),
            fmt("%d/5 targets; worst curve residual %.1e (tol 1e-8), worst excess over scan+l3 offset %.2e (tol 1e-3)", passed,
                worst_res, worst_gap)};
}

Outcome criterion7() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    int tested = 0;
    for (Variant v : {Variant::Feasible, Variant::Infeasible}) {
        const ConstraintTarget t = v == Variant::Feasible ? ConstraintTarget{0.2, 0.5} : ConstraintTarget{0.1, 0.9};
        int n = 0;
        while (n < 50) {
            const ModelParams p = guided(n % 2 ? 0.02 : 0.01);
            const InterventionVector d{0.15 * u(rng), 3 * u(rng), 0.5 * u(rng), 0.5 * u(rng)};
            if (!interior(p, d)) continue;
            const GuidanceCost cost = GuidanceCost::squared_norm();
            const Evaluation e = evaluate(d, t, p, cost, {}, v);
            if (!e.finite || e.kink_distance < 1e-3) continue;
            Gradient fd{};
            const double h = 1e-6;
            for (std::size_t k = 0; k < 4; ++k) {
                auto a = d.as_array(), b = a;
                a[k] += h;
                b[k] -= h;
                fd[k] = (objective(InterventionVector::from(a), t, p, cost, {}, v) -
                         objective(InterventionVector::from(b), t, p, cost, {}, v)) / (2 * h);
            }
            double scale = 0.0, err = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                scale = std::max(scale, std::abs(fd[k]));
                err = std::max(err, std::abs(e.grad[k] - fd[k]));
            }
            worst = std::max(worst, err / std::max(scale, 1e-12));
            ++n;
            ++tested;
        }
    }
    return {worst < 1e-5, fmt("%d points over both variants, max relative error %.2e (tol 1e-5)", tested, worst)};
}

// Share of 200 noisy 8-pair subjects per alpha whose estimate lands within 0.05; returns the worst alpha.
double noisy_recovery(const std::vector<double>& probs, double* worst_clean) {
    const double sigma = 0.65, stake = 100.0;
    double worst_share = 1.0;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 1.0);
    for (double a : {0.3, 0.5, 0.7, 0.9, 1.0}) {
        std::vector<InsuranceResponse> clean;
        for (double p : probs) clean.push_back({p, model_price(p, a, sigma, stake), stake});
        *worst_clean = std::max(*worst_clean, std::abs(estimate_alpha(clean, sigma).alpha_hat - a));
        int close = 0;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<InsuranceResponse> noisy = clean;
            for (auto& r : noisy) r.r = std::clamp(r.r * (1.0 + 0.05 * z(rng)), 1e-9, stake * (1 - 1e-12));
            close += std::abs(estimate_alpha(noisy, sigma).alpha_hat - a) <= 0.05;
        }
        worst_share = std::min(worst_share, close / 200.0);
    }
    return worst_share;
}

Outcome criterion8() {
    double worst_clean = 0.0;
    const double share = noisy_recovery({0.001, 0.003, 0.01, 0.03, 0.1, 0.2, 0.3, 0.5}, &worst_clean);
    return {worst_clean < 1e-10 && share >= 0.95,
            fmt("noiseless max error %.1e (tol 1e-10); 5%% noise, p in [0.001, 0.5]: worst alpha has %.1f%% of 200 trials "
                "within 0.05 (need 95%%)",
                worst_clean, 100 * share)};
}

const std::vector<std::pair<std::vector<double>, std::vector<double>>> kThreeSets{
    {{-4.5, -2.0, -1.0}, {0.005, 0.015, 0.025}}, {{-3.0, -2.0, -1.0}, {0.004, 0.015, 0.031}}};

Outcome criterion9() {
    std::vector<std::pair<std::string, bool>> numeric_stable;
    for (const auto& [c, beta] : kThreeSets)
        for (const auto& cl : numeric_steady_state(three_behavior(c, beta), Mode::PT, 8).clusters) {
            bool stable = cl.stable && !cl.eigenvalues.empty();
            for (const auto& e : cl.eigenvalues) stable = stable && e.real() < 0;
            numeric_stable.push_back({fmt("numeric c1=%.1f", c[0]), stable});
        }
    int unstable = 0;
    double worst_jac = 0.0;
    std::string bad;
    for (const auto& c : certified) {
        const Stability s = stability_certificate(c.i, c.x1, c.p, c.mode);
        const bool ok = s.P < 0 && s.Q > 0 && s.eig1.real() < 0 && s.eig2.real() < 0;
        if (!ok && unstable++ < 3) bad += " " + c.origin;
        const Jacobian2 j = jacobian_2(c.i, c.x1, c.p, c.mode);
        // central differences, one-sided at the simplex faces
        const auto col = [&](bool wrt_i) {
            const double h = 1e-6;
            double hi_i = c.i, hi_x = c.x1;
            const double v = wrt_i ? c.i : c.x1;
            const auto at = [&](double offset) {
                (wrt_i ? hi_i : hi_x) = v + offset;
                return rhs_2(hi_i, hi_x, c.p, c.mode);
            };
            if (v - h < 0.0 || v + h > 1.0) {
                const double s = v - h < 0.0 ? h : -h;
                const Rhs2 f0 = at(0), f1 = at(s), f2 = at(2 * s);
                return std::pair{(-3 * f0.di + 4 * f1.di - f2.di) / (2 * s), (-3 * f0.dx1 + 4 * f1.dx1 - f2.dx1) / (2 * s)};
            }
            const Rhs2 a = at(h), b = at(-h);
            return std::pair{(a.di - b.di) / (2 * h), (a.dx1 - b.dx1) / (2 * h)};
        };
        const auto [di_di, dx_di] = col(true);
        const auto [di_dx, dx_dx] = col(false);
        const double scale = std::max({std::abs(j.a11), std::abs(j.a12), std::abs(j.a21), std::abs(j.a22), 1e-12});
        const double err = std::max({std::abs(j.a11 - di_di), std::abs(j.a12 - di_dx), std::abs(j.a21 - dx_di),
                                     std::abs(j.a22 - dx_dx)}) / scale;
        worst_jac = std::max(worst_jac, err);
    }
    for (const auto& [origin, stable] : numeric_stable)
        if (!stable && unstable++ < 3) bad += " " + origin;
    return {unstable == 0 && worst_jac < 1e-6 && !certified.empty(),
            fmt("%zu closed-form + %zu numeric states, %d not certified%s; Jacobian vs FD max relative %.1e (tol 1e-6)",
                certified.size(), numeric_stable.size(), unstable, bad.c_str(), worst_jac)};
}

Outcome criterion10(Topology topo) {
    bool ok = true;
    std::string detail;
    for (const auto& [c, beta] : kThreeSets) {
        const ModelParams p = three_behavior(c, beta);
        const NumericResult nr = numeric_steady_state(p, Mode::PT, 8);
        if (nr.clusters.empty()) return {false, "no numeric cluster"};
        const auto best = std::min_element(nr.clusters.begin(), nr.clusters.end(),
                                           [](const auto& a, const auto& b) { return a.residual < b.residual; });
        const EnsembleResult r = run_ensemble(p, Mode::PT, agent_fixture(topo));
        double gap = std::abs(r.i_mean.back() - best->state.i);
        for (std::size_t j = 0; j < 3; ++j) gap = std::max(gap, std::abs(r.x_mean.back()[j] - best->state.x[j]));
        ok = ok && best->residual < 1e-8 && gap <= 0.05;
        detail += fmt(" c1=%.1f: residual %.1e, i*=%.3f, agents i=%.3f, max gap %.3f;", c[0], best->residual,
                      best->state.i, r.i_mean.back(), gap);
    }
    return {ok, "tol residual 1e-8, gap 0.05;" + detail};
}

} // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv) {
    for (int k = 1; k < argc; ++k) selected.push_back(std::atoi(argv[k]));
    std::printf("acceptance: agent fixtures use N=500, degrees 10/20, 50 runs, horizon 3000, m=0.1, alpha=0.6\n");
    run(1, "three-regime sweep", criterion1);
    int hits = 0;
    run(2, "agent/mean-field agreement (ring lattice)", [&] { return agent_sweep(Topology::RingLattice, &hits); });
    if (wanted(2)) {
        int rr = 0;
        const Outcome o = agent_sweep(Topology::RandomRegular, &rr);
        std::printf("INFO  2 random-regular diagnostic (not counted): %s\n", o.detail.c_str());
    }
    run(3, "conservative regime ordering", criterion3);
    run(4, "radical regime", criterion4);
    run(5, "optimizer, feasible targets", criterion5);
    run(6, "optimizer, infeasible targets", criterion6);
    run(7, "gradient check", criterion7);
    run(8, "alpha recovery", criterion8);
    if (wanted(8)) {
        double clean = 0.0;
        const double share = noisy_recovery({0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9}, &clean);
        std::printf("INFO  8 wide grid p in [0.01, 0.9] (not counted): worst alpha %.1f%% within 0.05\n", 100 * share);
    }
    run(9, "stability certificates", criterion9);
    run(10, "three-behavior numerics and agents (ring lattice)", [] { return criterion10(Topology::RingLattice); });
    if (wanted(10)) {
        const Outcome o = criterion10(Topology::RandomRegular);
        std::printf("INFO 10 random-regular diagnostic (not counted): %s\n", o.detail.c_str());
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
