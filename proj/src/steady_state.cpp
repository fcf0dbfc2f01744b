#include "epib/steady_state.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace epib {

namespace {

constexpr double kE = 2.718281828459045;
constexpr double kInvE = 0.36787944117144233;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_two_behavior(const ModelParams& p) {
    p.validate();
    if (p.size() != 2) throw PreconditionError("two-behavior analysis requires exactly 2 behaviors");
    if (p.beta(1) != 0.0) throw PreconditionError("two-behavior analysis requires beta_2 = 0");
    if (!(p.c(0) > p.c(1))) throw PreconditionError("two-behavior analysis requires c1 > c2");
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Shared prefix of both classifiers: Case1 / boundary / spread extent.
std::optional<SteadyState> trivial_case(const ModelParams& p) {
    const double kb = p.k_bar * p.beta(0);
    SteadyState s;
    s.discriminant = kNaN;
    if (std::abs(kb - p.gamma) <= 1e-12 * p.gamma) {
        s.label = CaseLabel::NoSteadyState;
        s.i_star = s.x1_star = kNaN;
        return s;
    }
    if (kb < p.gamma) {
        s.label = CaseLabel::Case1;
        s.i_star = 0.0;
        s.x1_star = 1.0;
        return s;
    }
    return std::nullopt;
}

void certify(SteadyState& s, const ModelParams& p, Mode mode) {
    if (s.label == CaseLabel::NoSteadyState) return;
    const Rhs2 r = rhs_2(s.i_star, s.x1_star, p, mode);
    s.residual = std::max(std::abs(r.di), std::abs(r.dx1));
    s.stability = stability_certificate(s.i_star, s.x1_star, p, mode);
}

struct RootFunction {
    double kb, k0, un, du, alpha;
    explicit RootFunction(const ModelParams& p)
        : kb(p.k_bar * p.beta(0)), k0(p.k0()), un(p.u(p.c_n)), du(p.u(p.c(0)) - p.u(p.c(1))), alpha(p.alpha) {}
    double operator()(double x) const { return k0 * un * weight(kb * x, alpha) - kb * x + k0 * du; }
};

} // namespace

const char* to_string(CaseLabel c) {
    switch (c) {
    case CaseLabel::Case1: return "Case1";
    case CaseLabel::Case2: return "Case2";
    case CaseLabel::Case3: return "Case3";
    case CaseLabel::NoSteadyState: return "NoSteadyState";
    }
    return "?";
}

double f2(double x, const ModelParams& p, Mode mode) {
    const double kb = p.k_bar * p.beta(0);
    const double risk = mode == Mode::EUT ? kb * x : weight(kb * x, p.alpha);
    return p.k0() * p.u(p.c_n) * risk - kb * x + p.k0() * (p.u(p.c(0)) - p.u(p.c(1)));
}

double phi1(const ModelParams& p) {
    const double kb = p.k_bar * p.beta(0);
    const double k0 = p.k0();
    return -k0 * (p.u(p.c(0)) - p.u(p.c(1))) + (p.gamma - kb) * (k0 * p.u(p.c_n) - 1.0);
}

double phi2(const ModelParams& p) {
    const double kb = p.k_bar * p.beta(0);
    const double spread = kb - p.gamma;
    if (!(spread >= 0.0 && spread <= 1.0))
        throw DomainError("weight argument k_bar*beta1 - gamma = " + num(spread) + " outside [0,1]");
    if (spread == 1.0) throw DomainError("weight argument k_bar*beta1 - gamma = 1 is not a valid probability here");
    const double k0 = p.k0();
    return -k0 * (p.u(p.c(0)) - p.u(p.c(1))) - (p.gamma - kb) - k0 * p.u(p.c_n) * weight(spread, p.alpha);
}

SteadyState classify_eut(const ModelParams& p) {
    require_two_behavior(p);
    if (auto s = trivial_case(p)) {
        certify(*s, p, Mode::EUT);
        return *s;
    }
    const double kb = p.k_bar * p.beta(0);
    const double k0 = p.k0();
    SteadyState s;
    s.discriminant = phi1(p);
    if (s.discriminant < 0.0) {
        s.label = CaseLabel::Case2;
        s.i_star = max_spread(p);
        s.x1_star = 1.0;
    } else {
        s.label = CaseLabel::Case3;
        s.i_star = k0 * (p.u(p.c(1)) - p.u(p.c(0))) / ((k0 * p.u(p.c_n) - 1.0) * kb);
        s.x1_star = std::min(1.0, p.gamma / ((1.0 - s.i_star) * kb));
    }
    certify(s, p, Mode::EUT);
    return s;
}

SteadyState classify_pt(const ModelParams& p) {
    if (p.alpha == 1.0) return classify_eut(p);
    require_two_behavior(p);
    if (auto s = trivial_case(p)) {
        certify(*s, p, Mode::PT);
        return *s;
    }
    const double kb = p.k_bar * p.beta(0);
    SteadyState s;
    s.discriminant = phi2(p);
    const double ibar = max_spread(p);
    if (s.discriminant < 0.0) {
        s.label = CaseLabel::Case2;
        s.i_star = ibar;
        s.x1_star = 1.0;
        certify(s, p, Mode::PT);
        return s;
    }
    s.label = CaseLabel::Case3;
    const RootFunction f(p);
    double lo = 1e-15, hi = ibar;
    double f_lo = f(lo);
    double f_hi = f(hi);
    constexpr int kGrid = 32;
    double prev = f_lo;
    for (int k = 1; k <= kGrid; ++k) {
        const double cur = f(lo + (hi - lo) * k / kGrid);
        if (!(cur < prev)) throw DomainError("f2 is not strictly decreasing on the root bracket");
        prev = cur;
    }
    if (f_hi >= 0.0) {
        s.i_star = hi;
    } else if (f_lo <= 0.0) {
        throw DomainError("f2 is already negative at i = 1e-15 (alpha = " + std::to_string(p.alpha) +
                          "); the endemic root is below resolution");
    } else {
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double fm = f(mid);
            if (fm == 0.0) {
                lo = hi = mid;
                f_lo = f_hi = 0.0;
                break;
            }
            if (fm > 0.0) {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
        }
        s.i_star = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
    }
    s.x1_star = std::min(1.0, p.gamma / ((1.0 - s.i_star) * kb));
    certify(s, p, Mode::PT);
    return s;
}

SteadyState classify(const ModelParams& p, Mode mode) {
    return mode == Mode::EUT ? classify_eut(p) : classify_pt(p);
}

Jacobian2 jacobian_2(double i, double x1, const ModelParams& p, Mode mode) {
    const double kb = p.k_bar * p.beta(0);
    const double k0 = p.k0();
    const double un = p.u(p.c_n);
    const double logistic = x1 * (1.0 - x1);
    const double risk = infection_risk(0, i, p, mode);
    const double g = -kb * i + k0 * (p.u(p.c(0)) - p.u(p.c(1)) + un * risk);
    Jacobian2 j{};
    j.a11 = kb * x1 * (1.0 - 2.0 * i) - p.gamma;
    j.a12 = kb * i * (1.0 - i);
    if (logistic == 0.0) {
        j.a21 = 0.0;
    } else {
        const double drisk = mode == Mode::EUT ? kb : kb * weight_dp(kb * i, p.alpha);
        j.a21 = logistic * (-kb + k0 * un * drisk);
    }
    j.a22 = (1.0 - 2.0 * x1) * g;
    return j;
}

Stability stability_from(const Jacobian2& j) {
    Stability s;
    s.P = j.a11 + j.a22;
    s.Q = j.a11 * j.a22 - j.a12 * j.a21;
    const std::complex<double> root = std::sqrt(std::complex<double>(s.P * s.P - 4.0 * s.Q, 0.0));
    s.eig1 = (s.P + root) / 2.0;
    s.eig2 = (s.P - root) / 2.0;
    s.stable = s.P < 0.0 && s.Q > 0.0;
    return s;
}

Stability stability_certificate(double i, double x1, const ModelParams& p, Mode mode) {
    const Rhs2 r = rhs_2(i, x1, p, mode);
    const double res = std::max(std::abs(r.di), std::abs(r.dx1));
    if (!(res < 1e-8))
        throw PreconditionError("stability_certificate: (" + num(i) + ", " + num(x1) +
                                ") is not a fixed point, residual " + num(res));
    return stability_from(jacobian_2(i, x1, p, mode));
}

double max_spread(const ModelParams& p) {
    const double kb = p.k_bar * p.beta(0);
    if (!(kb > p.gamma)) throw DomainError("max_spread: k_bar <= gamma/beta1, no endemic maximum");
    return 1.0 - p.gamma / kb;
}

RationalityReport compare_rationality(const ModelParams& p, double alpha_low, double alpha_high) {
    if (!(alpha_low > 0.0 && alpha_low <= alpha_high && alpha_high <= 1.0))
        throw PreconditionError("compare_rationality requires 0 < alpha_low <= alpha_high <= 1");
    RationalityReport r;
    r.alpha_low = alpha_low;
    r.alpha_high = alpha_high;
    ModelParams lo = p, hi = p;
    lo.alpha = alpha_low;
    hi.alpha = alpha_high;
    r.low = classify_pt(lo);
    r.high = classify_pt(hi);
    if (r.low.label == CaseLabel::NoSteadyState || r.high.label == CaseLabel::NoSteadyState)
        throw DomainError("compare_rationality: no steady state at the boundary k_bar = gamma/beta1");

    const double kb = p.k_bar * p.beta(0);
    std::ostringstream os;
    if (r.low.label == CaseLabel::Case3 && r.high.label == CaseLabel::Case3) {
        r.both_case3 = true;
        const bool over = kb * r.high.i_star <= kInvE;
        r.regime = over ? Regime::Overweighting : Regime::Underweighting;
        if (over)
            r.prediction_holds = r.high.i_star >= r.low.i_star && r.high.x1_star >= r.low.x1_star;
        else
            r.prediction_holds = r.high.i_star <= r.low.i_star && r.high.x1_star <= r.low.x1_star;
        os << (over ? "overweighting regime: expect i_high >= i_low and x1_high >= x1_low"
                    : "underweighting regime: expect i_high <= i_low and x1_high <= x1_low");
    } else if (r.low.label == r.high.label) {
        os << "both " << to_string(r.low.label) << ": steady states coincide";
        r.prediction_holds = r.low.i_star == r.high.i_star && r.low.x1_star == r.high.x1_star;
    } else {
        const double ibar = max_spread(p);
        const bool over = kb * ibar <= kInvE;
        const CaseLabel want_low = over ? CaseLabel::Case3 : CaseLabel::Case2;
        const CaseLabel want_high = over ? CaseLabel::Case2 : CaseLabel::Case3;
        r.subcase = over ? "max spread <= 1/(k_bar*beta1*e): higher rationality may reach Case2 first"
                         : "max spread >= 1/(k_bar*beta1*e): lower rationality may reach Case2 first";
        r.prediction_holds = r.low.label == want_low && r.high.label == want_high;
        os << "mixed cases (" << to_string(r.low.label) << " at alpha_low, " << to_string(r.high.label)
           << " at alpha_high); " << r.subcase;
    }
    os << (r.prediction_holds ? "; ordering holds" : "; ordering VIOLATED");
    r.summary = os.str();
    return r;
}

RadicalTest radical_regime_test(const ModelParams& p) {
    require_two_behavior(p);
    RadicalTest t;
    const double du = p.u(p.c(1)) - p.u(p.c(0));
    t.spread_margin = p.k_bar * p.beta(0) - p.gamma;
    t.loss_ratio = p.u(p.c_n) / du;
    t.loss_bound = kE + 1.0 / (p.k0() * du);
    t.spread_condition = t.spread_margin > kInvE;
    t.loss_condition = t.loss_ratio < t.loss_bound;
    t.possible = t.spread_condition && t.loss_condition;
    return t;
}

std::vector<std::complex<double>> reduced_eigenvalues(const SystemState& s, const ModelParams& p, Mode mode) {
    const std::size_t m = p.size();
    const int n = static_cast<int>(m);
    const PayoffKernel kernel(p);
    auto reduced = [&](const Eigen::VectorXd& z) {
        SystemState st;
        st.i = std::clamp(z(0), 0.0, 1.0);
        st.x.resize(m);
        double rest = 1.0;
        for (std::size_t j = 0; j + 1 < m; ++j) {
            st.x[j] = z(static_cast<int>(j) + 1);
            rest -= st.x[j];
        }
        st.x[m - 1] = rest;
        const Derivative d = rhs_m(st, kernel, mode);
        Eigen::VectorXd out(n);
        out(0) = d.di;
        for (std::size_t j = 0; j + 1 < m; ++j) out(static_cast<int>(j) + 1) = d.dx[j];
        return out;
    };
    Eigen::VectorXd z(n);
    z(0) = s.i;
    for (std::size_t j = 0; j + 1 < m; ++j) z(static_cast<int>(j) + 1) = s.x[j];
    Eigen::MatrixXd jac(n, n);
    const double h = 1e-7;
    for (int c = 0; c < n; ++c) {
        Eigen::VectorXd zp = z, zm = z;
        zp(c) += h;
        zm(c) -= h;
        jac.col(c) = (reduced(zp) - reduced(zm)) / (2.0 * h);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, false);
    std::vector<std::complex<double>> out;
    for (int k = 0; k < n; ++k) out.push_back(solver.eigenvalues()(k));
    return out;
}

namespace {

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    for (int k = index; k > 0; k /= base) {
        f /= base;
        r += f * (k % base);
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

} // namespace

NumericResult numeric_steady_state(const ModelParams& p, Mode mode, int starts, const NumericOptions& opt) {
    p.validate();
    const std::size_t m = p.size();
    if (m + 1 > std::size(kPrimes)) throw PreconditionError("numeric_steady_state supports at most 11 behaviors");
    NumericResult result;
    struct Hit {
        SystemState s;
        double res;
    };
    std::vector<Hit> hits;
    IntegrateOptions io;
    io.dt = opt.dt;
    io.horizon = opt.horizon;
    io.stop_at_steady = true;
    io.stride = 1 << 30;
    for (int k = 1; k <= starts; ++k) {
        SystemState s0;
        s0.i = opt.i_floor + (1.0 - opt.i_floor) * halton(k, kPrimes[0]);
        s0.x.resize(m);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double u = std::clamp(halton(k, kPrimes[j + 1]), 1e-6, 1.0 - 1e-6);
            s0.x[j] = -std::log(u);
            total += s0.x[j];
        }
        for (double& v : s0.x) v /= total;
        try {
            const Trajectory tr = integrate(s0, p, mode, io);
            if (!tr.converged) {
                result.failures.push_back("start " + std::to_string(k) + ": not converged, |rhs| = " +
                                          num(tr.final_rhs_norm));
                continue;
            }
            hits.push_back({tr.states.back(), tr.final_rhs_norm});
        } catch (const std::exception& e) {
            result.failures.push_back("start " + std::to_string(k) + ": " + e.what());
        }
    }
    auto dist = [](const SystemState& a, const SystemState& b) {
        double d = std::abs(a.i - b.i);
        for (std::size_t j = 0; j < a.x.size(); ++j) d = std::max(d, std::abs(a.x[j] - b.x[j]));
        return d;
    };
    for (const Hit& h : hits) {
        auto it = std::find_if(result.clusters.begin(), result.clusters.end(),
                               [&](const NumericSteadyState& c) { return dist(c.state, h.s) < opt.cluster_radius; });
        if (it == result.clusters.end()) {
            result.clusters.push_back({h.s, h.res, 1, {}, false, std::nullopt});
        } else {
            ++it->members;
            if (h.res < it->residual) {
                it->state = h.s;
                it->residual = h.res;
            }
        }
    }
    for (auto& c : result.clusters) {
        c.eigenvalues = reduced_eigenvalues(c.state, p, mode);
        c.stable = std::all_of(c.eigenvalues.begin(), c.eigenvalues.end(),
                               [](const std::complex<double>& z) { return z.real() < 0.0; });
        if (m == 2 && p.beta(1) == 0.0) {
            c.certificate = stability_from(jacobian_2(c.state.i, c.state.x[0], p, mode));
            c.stable = c.stable && c.certificate->stable;
        }
    }
    return result;
}

std::vector<SweepRow> sweep(const ModelParams& p, SweepAxis axis, const std::vector<double>& grid, Mode mode) {
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw PreconditionError("sweep grid must be strictly increasing");
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double v : grid) {
        SweepRow row;
        row.value = v;
        ModelParams q = p;
        if (axis == SweepAxis::Beta1)
            q.behaviors.at(0).infection_rate = v;
        else
            q.alpha = v;
        try {
            row.state = classify(q, mode);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "param_value,case,i_star,x1_star,phi,P,Q\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.value << ',';
        if (!r.state) {
            os << "Error,nan,nan,nan,nan,nan\n";
            continue;
        }
        const SteadyState& s = *r.state;
        os << to_string(s.label) << ',' << s.i_star << ',' << s.x1_star << ',' << s.discriminant << ','
           << s.stability.P << ',' << s.stability.Q << '\n';
    }
}

} // namespace epib
