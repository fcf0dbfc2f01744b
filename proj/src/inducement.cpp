#include "epib/inducement.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace epib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

Gradient numeric_grad(const std::function<double(const InterventionVector&)>& f, const InterventionVector& d) {
    Gradient g{};
    const auto a = d.as_array();
    for (std::size_t k = 0; k < 4; ++k) {
        auto up = a, dn = a;
        const double h = 1e-6;
        up[k] += h;
        dn[k] -= h;
        g[k] = (f(InterventionVector::from(up)) - f(InterventionVector::from(dn))) / (2.0 * h);
    }
    return g;
}

} // namespace

double InterventionVector::norm() const {
    return std::sqrt(d_alpha * d_alpha + d_cn * d_cn + d_c1 * d_c1 + d_c2 * d_c2);
}

GuidanceCost GuidanceCost::squared_norm() {
    GuidanceCost c;
    c.l3 = [](const InterventionVector& d) {
        const auto a = d.as_array();
        double s = 0.0;
        for (double v : a) s += v * v;
        return s;
    };
    c.l3_grad = [](const InterventionVector& d) {
        const auto a = d.as_array();
        return Gradient{2 * a[0], 2 * a[1], 2 * a[2], 2 * a[3]};
    };
    return c;
}

GuidanceCost GuidanceCost::none() {
    GuidanceCost c;
    c.l3 = [](const InterventionVector&) { return 0.0; };
    c.l3_grad = [](const InterventionVector&) { return Gradient{}; };
    return c;
}

double GuidanceCost::value(const InterventionVector& d) const { return l3 ? l3(d) : 0.0; }

Gradient GuidanceCost::grad(const InterventionVector& d) const {
    if (l3_grad) return l3_grad(d);
    if (!l3) return Gradient{};
    return numeric_grad(l3, d);
}

bool validate_cost(const GuidanceCost& cost, int samples, unsigned seed) {
    if (std::abs(cost.value(InterventionVector{})) > 1e-12) return false;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        const InterventionVector d{u(rng), u(rng), u(rng), u(rng)};
        if (cost.value(d) < -1e-12) return false;
        const Gradient g = cost.grad(d);
        const auto a = d.as_array();
        for (std::size_t k = 0; k < 4; ++k)
            if (g[k] * a[k] < -1e-9) return false;
    }
    return true;
}

const char* to_string(Variant v) { return v == Variant::Feasible ? "feasible" : "infeasible"; }

double steady_curve(double i, const ModelParams& p) {
    if (!(i >= 0.0 && i < 1.0)) throw DomainError("steady_curve: i must lie in [0,1), got " + num(i));
    const double kb = p.k_bar * p.beta(0);
    if (!(kb > 0.0)) throw DomainError("steady_curve: k_bar*beta1 must be > 0");
    return p.gamma / ((1.0 - i) * kb);
}

bool feasibility(const ConstraintTarget& target, const ModelParams& p) {
    const double kb = p.k_bar * p.beta(0);
    if (kb <= p.gamma) return true; // unguided state (0, 1) already satisfies any target
    const double ibar = 1.0 - p.gamma / kb;
    const double i = std::min(target.i_max, ibar);
    if (i < 0.0) return false;
    return target.x_min <= std::min(1.0, steady_curve(i, p) * (1.0 + 1e-12));
}

ModelParams adjusted(const ModelParams& base, const InterventionVector& d) {
    ModelParams q = base;
    q.u_max = base.payoff_scale();
    q.alpha = base.alpha + d.d_alpha;
    q.c_n = base.c_n + d.d_cn;
    q.behaviors.at(0).intrinsic_payoff += d.d_c1;
    q.behaviors.at(1).intrinsic_payoff += d.d_c2;
    return q;
}

bool interior(const ModelParams& base, const InterventionVector& d) {
    const double a = base.alpha + d.d_alpha;
    const double cn = base.c_n + d.d_cn;
    const double c1 = base.c(0) + d.d_c1;
    const double c2 = base.c(1) + d.d_c2;
    return a > 0.0 && a < 1.0 && cn < 0.0 && c1 > c2 && std::isfinite(c1) && std::isfinite(c2);
}

Evaluation evaluate(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                    const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant) {
    Evaluation e;
    if (!interior(base, d)) {
        e.loss = kInf;
        e.finite = false;
        e.diagnostic = "barrier domain violated: need 0 < alpha' < 1, c_n' < 0, c1' > c2'";
        return e;
    }
    const ModelParams q = adjusted(base, d);
    const double kb = q.k_bar * q.beta(0);
    if (!(kb > q.gamma)) throw DomainError("objective: unguided spread k_bar*beta1 <= gamma (Case1)");
    const double spread = kb - q.gamma;
    if (!(spread < 1.0)) throw DomainError("objective: weight argument k_bar*beta1 - gamma = " + num(spread) + " >= 1");
    const double ibar = 1.0 - q.gamma / kb;
    const double a = q.alpha;
    const double k0 = q.k0();
    const double un = q.u(q.c_n);

    auto df2 = [&](double x) {
        const double prob = kb * x;
        return Gradient{k0 * un * weight_dalpha(prob, a), k0 * q.du(q.c_n) * weight(prob, a), k0 * q.du(q.c(0)),
                        -k0 * q.du(q.c(1))};
    };

    e.f1 = phi2(q);
    e.case3 = e.f1 >= 0.0;
    Gradient di{};
    if (e.case3) {
        SteadyState s;
        try {
            s = classify_pt(q);
        } catch (const DomainError& err) {
            e.loss = kInf;
            e.finite = false;
            e.diagnostic = err.what();
            return e;
        }
        if (s.label != CaseLabel::Case3) throw DomainError("objective: adjusted parameters have no Case3 root");
        e.i = s.i_star;
        const double slope = kb * (k0 * un * weight_dp(kb * e.i, a) - 1.0);
        const Gradient g = df2(e.i);
        for (std::size_t k = 0; k < 4; ++k) di[k] = -g[k] / slope;
    } else {
        e.i = ibar; // Case2 continuation at (ibar, 1)
    }
    e.x1 = std::min(1.0, q.gamma / ((1.0 - e.i) * kb));
    const double dxdi = q.gamma / ((1.0 - e.i) * (1.0 - e.i) * kb);

    double state_loss = 0.0, dstate_di = 0.0;
    const double mu = cfg.penalty_weight;
    if (variant == Variant::Feasible) {
        const double args[] = {e.i - target.i_max, -e.i, target.x_min - e.x1, e.x1 - 1.0};
        state_loss = mu * (hinge_sq(args[0]) + hinge_sq(args[1]) + hinge_sq(args[2]) + hinge_sq(args[3]));
        dstate_di = mu * (2.0 * std::max(0.0, args[0]) - 2.0 * std::max(0.0, args[1]) +
                          (-2.0 * std::max(0.0, args[2]) + 2.0 * std::max(0.0, args[3])) * dxdi);
        e.kink_distance = std::min({std::abs(args[0]), std::abs(args[1]), std::abs(args[2]), std::abs(args[3])});
    } else {
        state_loss = (e.i - target.i_max) * (e.i - target.i_max) + (e.x1 - target.x_min) * (e.x1 - target.x_min);
        dstate_di = 2.0 * (e.i - target.i_max) + 2.0 * (e.x1 - target.x_min) * dxdi;
        e.kink_distance = kInf;
    }
    e.kink_distance = std::min(e.kink_distance, std::abs(e.f1));

    const double inv_t = 1.0 / cfg.barrier_scale;
    const double barrier = -inv_t * (std::log(1.0 - a) + std::log(a) + std::log(-q.c_n));
    const double violation = std::max(0.0, -e.f1);
    const double bf = barrier + mu * violation * violation;

    const Gradient g_bar = df2(ibar); // dF1/d delta = -df2(ibar)
    const Gradient l3g = cost.grad(d);
    e.loss = state_loss + cost.value(d) + bf;
    for (std::size_t k = 0; k < 4; ++k) e.grad[k] = dstate_di * di[k] + l3g[k] + 2.0 * mu * violation * g_bar[k];
    e.grad[0] += -inv_t * (1.0 / a + 1.0 / (a - 1.0));
    e.grad[1] += -inv_t / q.c_n;
    return e;
}

double objective(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                 const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant) {
    return evaluate(d, target, base, cost, cfg, variant).loss;
}

Gradient gradient(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                  const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant) {
    const Evaluation e = evaluate(d, target, base, cost, cfg, variant);
    if (!e.finite) throw DomainError("gradient: " + e.diagnostic);
    return e.grad;
}

DescentResult momentum_descent(const InterventionVector& d0, const LossFn& f, const InteriorFn& ok,
                               const OptimizerConfig& cfg) {
    if (!ok(d0)) throw StepFailure("momentum_descent: starting point is not interior");
    DescentResult r;
    auto d = d0.as_array();
    std::array<double, 4> v{};
    Evaluation e = f(d0);
    if (!e.finite) throw StepFailure("momentum_descent: loss is not finite at the start: " + e.diagnostic);
    r.loss_history.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
    r.loss_history.push_back(e.loss);
    for (int it = 0; it < cfg.max_iters; ++it) {
        for (std::size_t k = 0; k < 4; ++k) v[k] = cfg.momentum * v[k] - cfg.learning_rate * e.grad[k];
        int halvings = 0;
        Evaluation trial_eval;
        std::array<double, 4> trial{};
        for (;;) {
            for (std::size_t k = 0; k < 4; ++k) trial[k] = d[k] + v[k];
            const InterventionVector t = InterventionVector::from(trial);
            if (ok(t)) {
                trial_eval = f(t);
                if (trial_eval.finite && std::isfinite(trial_eval.loss)) break;
            }
            if (++halvings > cfg.max_halvings)
                throw StepFailure("momentum_descent: no interior step after " + std::to_string(cfg.max_halvings) +
                                  " halvings at iteration " + std::to_string(it));
            for (double& c : v) c *= 0.5;
        }
        r.halvings += halvings;
        d = trial;
        e = std::move(trial_eval);
        r.loss_history.push_back(e.loss);
    }
    r.delta = InterventionVector::from(d);
    return r;
}

OptimizerConfig OptimizerConfig::final_stage() const {
    OptimizerConfig c = *this;
    c.stages.clear();
    if (!stages.empty()) {
        const PenaltyStage& s = stages.back();
        c.penalty_weight = s.penalty_weight;
        c.learning_rate = s.learning_rate;
        c.momentum = s.momentum;
        c.max_iters = s.iters;
    }
    return c;
}

int OptimizerConfig::total_iters() const {
    if (stages.empty()) return max_iters;
    int n = 0;
    for (const auto& s : stages) n += s.iters;
    return n;
}

DescentResult momentum_descent(const InterventionVector& d0, const ConstraintTarget& target, const ModelParams& base,
                               const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant) {
    const auto ok = [&](const InterventionVector& d) { return interior(base, d); };
    if (cfg.stages.empty())
        return momentum_descent(
            d0, [&](const InterventionVector& d) { return evaluate(d, target, base, cost, cfg, variant); }, ok, cfg);
    DescentResult out;
    out.delta = d0;
    for (const auto& s : cfg.stages) {
        OptimizerConfig c = cfg;
        c.stages.clear();
        c.penalty_weight = s.penalty_weight;
        c.learning_rate = s.learning_rate;
        c.momentum = s.momentum;
        c.max_iters = s.iters;
        DescentResult r = momentum_descent(
            out.delta, [&](const InterventionVector& d) { return evaluate(d, target, base, cost, c, variant); }, ok, c);
        auto first = r.loss_history.begin();
        if (!out.loss_history.empty()) ++first;
        out.loss_history.insert(out.loss_history.end(), first, r.loss_history.end());
        out.halvings += r.halvings;
        out.delta = r.delta;
    }
    return out;
}

InterventionVector default_start(const ModelParams& base) {
    InterventionVector d;
    if (base.alpha == 1.0) d.d_alpha = -1e-6;
    return d;
}

OptimizeResult optimize(const ConstraintTarget& target, const ModelParams& base, const GuidanceCost& cost,
                        const OptimizerConfig& cfg, const std::vector<InterventionVector>& extra_starts) {
    if (!(target.i_max >= 0.0 && target.i_max <= 1.0 && target.x_min >= 0.0 && target.x_min <= 1.0))
        throw PreconditionError("optimize: target must lie in [0,1]^2");
    OptimizeResult out;
    ModelParams pinned = base;
    pinned.u_max = base.payoff_scale();
    const SteadyState before = classify_pt(pinned);
    out.case_before = before.label;
    out.case_trace.push_back(std::string("unguided: ") + to_string(before.label));
    out.feasible = feasibility(target, pinned);
    out.variant = out.feasible ? Variant::Feasible : Variant::Infeasible;
    out.case_trace.push_back(std::string("target: ") + to_string(out.variant));

    if (before.label == CaseLabel::NoSteadyState)
        throw DomainError("optimize: unguided parameters have no steady state (k_bar = gamma/beta1)");
    if (before.label == CaseLabel::Case1) {
        out.case_trace.push_back("Case1: no guidance needed");
        out.achieved = before;
        out.case_after = before.label;
        return out;
    }

    std::vector<InterventionVector> starts{default_start(pinned)};
    starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
    std::vector<std::future<DescentResult>> jobs;
    for (const auto& s : starts)
        jobs.push_back(std::async(starts.size() > 1 ? std::launch::async : std::launch::deferred,
                                  [&, s] { return momentum_descent(s, target, pinned, cost, cfg, out.variant); }));
    DescentResult best;
    bool have = false;
    for (auto& j : jobs) {
        DescentResult r = j.get();
        const double loss = r.loss_history.back();
        if (!have || loss < best.loss_history.back() ||
            (loss == best.loss_history.back() && r.delta.norm() < best.delta.norm())) {
            best = std::move(r);
            have = true;
        }
    }
    out.case_trace.push_back("descent finished after " + std::to_string(cfg.total_iters()) + " iterations");
    out.delta = best.delta;
    out.loss = best.loss_history.back();
    out.loss_history = std::move(best.loss_history);

    if (before.label == CaseLabel::Case2) {
        const double zero_loss = objective(starts.front(), target, pinned, cost, cfg.final_stage(), out.variant);
        if (zero_loss <= out.loss) {
            out.case_trace.push_back("Case2: zero intervention is no worse than delta3, keeping 0");
            out.delta = InterventionVector{};
            out.loss = zero_loss;
        } else {
            out.case_trace.push_back("Case2: delta3 improves on zero intervention");
        }
    }
    out.achieved = classify_pt(adjusted(pinned, out.delta));
    out.case_after = out.achieved.label;
    out.case_trace.push_back(std::string("guided: ") + to_string(out.case_after));
    return out;
}

void write_loss_csv(std::ostream& os, const std::vector<double>& history) {
    os << "iter,loss\n";
    os.precision(15);
    for (std::size_t k = 0; k < history.size(); ++k) os << k << ',' << history[k] << '\n';
}

} // namespace epib
