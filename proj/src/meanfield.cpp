#include "epib/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace epib {

double Derivative::max_abs() const {
    double m = std::abs(di);
    for (double v : dx) m = std::max(m, std::abs(v));
    return m;
}

PayoffKernel::PayoffKernel(const ModelParams& p) : params(&p), u_n(p.u(p.c_n)), k0(p.k0()) {
    u_c.reserve(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) u_c.push_back(p.u(p.c(j)));
}

double PayoffKernel::utility(std::size_t j, double i, Mode mode) const {
    return u_c[j] + u_n * infection_risk(j, i, *params, mode);
}

void check_state(const SystemState& s, std::size_t m) {
    if (s.x.size() != m)
        throw DomainError("state has " + std::to_string(s.x.size()) + " shares, expected " + std::to_string(m));
    if (!(s.i >= 0.0 && s.i <= 1.0)) throw DomainError("infected fraction outside [0,1]");
    double sum = 0.0;
    for (double v : s.x) {
        if (!(v >= 0.0)) throw DomainError("negative or non-finite behavior share");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("behavior shares do not sum to 1");
}

Derivative rhs_m(const SystemState& s, const PayoffKernel& k, Mode mode) {
    const ModelParams& p = *k.params;
    const std::size_t m = p.size();
    Derivative d;
    d.dx.assign(m, 0.0);
    double beta_bar = 0.0;
    for (std::size_t j = 0; j < m; ++j) beta_bar += p.beta(j) * s.x[j];
    d.di = s.i * (1.0 - s.i) * beta_bar * p.k_bar - p.gamma * s.i;

    std::vector<double> u(m);
    for (std::size_t j = 0; j < m; ++j) u[j] = k.utility(j, s.i, mode);
    for (std::size_t a = 0; a < m; ++a) {
        double health = 0.0, choice = 0.0;
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            health += s.x[b] * (p.beta(b) - p.beta(a));
            choice += s.x[b] * (u[a] - u[b]);
        }
        d.dx[a] = s.x[a] * (p.k_bar * s.i * health + k.k0 * choice);
    }
    return d;
}

Derivative rhs_m(const SystemState& s, const ModelParams& p, Mode mode) {
    check_state(s, p.size());
    return rhs_m(s, PayoffKernel(p), mode);
}

Rhs2 rhs_2(double i, double x1, const ModelParams& p, Mode mode) {
    if (p.size() != 2 || p.beta(1) != 0.0) throw PreconditionError("rhs_2 requires M = 2 and beta_2 = 0");
    if (!(i >= 0.0 && i <= 1.0) || !(x1 >= 0.0 && x1 <= 1.0)) throw DomainError("rhs_2: state outside [0,1]^2");
    const double kb = p.k_bar * p.beta(0);
    const double risk = infection_risk(0, i, p, mode);
    const double g = -kb * i + p.k0() * (p.u(p.c(0)) + p.u(p.c_n) * risk - p.u(p.c(1)));
    return {kb * i * x1 * (1.0 - i) - p.gamma * i, x1 * (1.0 - x1) * g};
}

namespace {

struct Vec {
    double i;
    std::vector<double> x;
};

Vec eval(const Vec& v, const PayoffKernel& k, Mode mode) {
    SystemState s{std::clamp(v.i, 0.0, 1.0), v.x};
    const Derivative d = rhs_m(s, k, mode);
    return {d.di, d.dx};
}

Vec axpy(const Vec& base, double h, const Vec& dir) {
    Vec r = base;
    r.i += h * dir.i;
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] += h * dir.x[j];
    return r;
}

bool finite(const Vec& v) {
    if (!std::isfinite(v.i)) return false;
    return std::all_of(v.x.begin(), v.x.end(), [](double a) { return std::isfinite(a); });
}

} // namespace

Trajectory integrate(const SystemState& s0, const ModelParams& p, Mode mode, const IntegrateOptions& opt) {
    if (!(opt.dt > 0.0) || !(opt.horizon >= opt.dt)) throw PreconditionError("integrate: need dt > 0 and T >= dt");
    if (opt.stride < 1) throw PreconditionError("integrate: stride must be >= 1");
    check_state(s0, p.size());
    const PayoffKernel kernel(p);
    const long n_steps = static_cast<long>(std::llround(opt.horizon / opt.dt));

    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.push_back(s0);
    Vec y{s0.i, s0.x};
    int calm = 0;
    double last_norm = 0.0;
    long step = 0;
    for (step = 1; step <= n_steps; ++step) {
        const Vec k1 = eval(y, kernel, mode);
        const Vec k2 = eval(axpy(y, opt.dt / 2, k1), kernel, mode);
        const Vec k3 = eval(axpy(y, opt.dt / 2, k2), kernel, mode);
        const Vec k4 = eval(axpy(y, opt.dt, k3), kernel, mode);
        Vec next = y;
        next.i += opt.dt / 6 * (k1.i + 2 * k2.i + 2 * k3.i + k4.i);
        for (std::size_t j = 0; j < next.x.size(); ++j)
            next.x[j] += opt.dt / 6 * (k1.x[j] + 2 * k2.x[j] + 2 * k3.x[j] + k4.x[j]);
        if (!finite(next)) throw IntegrationError("non-finite state at step " + std::to_string(step), step);

        const double sum = std::accumulate(next.x.begin(), next.x.end(), 0.0);
        const double drift = std::abs(sum - 1.0);
        tr.max_drift = std::max(tr.max_drift, drift);
        if (drift > opt.drift_abort)
            throw IntegrationError("simplex drift " + std::to_string(drift) + " at step " + std::to_string(step), step);
        for (double& v : next.x) v = std::max(v, 0.0);
        const double norm = std::accumulate(next.x.begin(), next.x.end(), 0.0);
        for (double& v : next.x) v /= norm;
        next.i = std::clamp(next.i, 0.0, 1.0);
        y = std::move(next);

        const double t = static_cast<double>(step) * opt.dt;
        bool stop = false;
        if (opt.stop_at_steady) {
            last_norm = rhs_m(SystemState{y.i, y.x}, kernel, mode).max_abs();
            calm = last_norm < opt.steady_tol ? calm + 1 : 0;
            stop = calm >= opt.steady_window;
        }
        if (step % opt.stride == 0 || step == n_steps || stop) {
            tr.times.push_back(t);
            tr.states.push_back(SystemState{y.i, y.x});
        }
        if (stop) {
            tr.converged = true;
            break;
        }
    }
    tr.steps = std::min(step, n_steps);
    tr.final_rhs_norm = opt.stop_at_steady ? last_norm : rhs_m(SystemState{y.i, y.x}, kernel, mode).max_abs();
    return tr;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const std::size_t m = tr.states.empty() ? 0 : tr.states.front().x.size();
    os << "t,i";
    for (std::size_t j = 0; j < m; ++j) os << ",x" << (j + 1);
    os << '\n';
    os.precision(12);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        os << tr.times[k] << ',' << tr.states[k].i;
        for (double v : tr.states[k].x) os << ',' << v;
        os << '\n';
    }
}

} // namespace epib
