#include "epib/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epib {

namespace {

constexpr double kInvE = 0.36787944117144233;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

} // namespace

const char* to_string(Mode m) { return m == Mode::EUT ? "EUT" : "PT"; }

double value(double x, double sigma, double lambda) {
    if (!std::isfinite(x)) throw DomainError("value: non-finite input " + fmt_double(x));
    if (x >= 0.0) return std::pow(x, sigma);
    return -lambda * std::pow(-x, sigma);
}

double value_derivative(double x, double sigma, double lambda) {
    if (!std::isfinite(x)) throw DomainError("value_derivative: non-finite input " + fmt_double(x));
    if (x == 0.0) return sigma == 1.0 ? 1.0 : std::numeric_limits<double>::infinity();
    if (x > 0.0) return sigma * std::pow(x, sigma - 1.0);
    return lambda * sigma * std::pow(-x, sigma - 1.0);
}

double weight(double p, double alpha) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weight: probability outside [0,1]: " + fmt_double(p));
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    if (alpha == 1.0) return p;
    return std::exp(-std::pow(-std::log(p), alpha));
}

double weight_dp(double p, double alpha) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weight_dp: probability outside [0,1]: " + fmt_double(p));
    if (alpha == 1.0) return 1.0;
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    if (p == 1.0) return 0.0;
    const double l = -std::log(p);
    return weight(p, alpha) * alpha * std::pow(l, alpha - 1.0) / p;
}

double weight_dalpha(double p, double alpha) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weight_dalpha: probability outside [0,1]: " + fmt_double(p));
    if (p == 0.0 || p == 1.0) return 0.0;
    const double l = -std::log(p);
    return -std::pow(l, alpha) * std::log(l) * std::exp(-std::pow(l, alpha));
}

double ModelParams::u(double x) const {
    if (value_fn) {
        if (!std::isfinite(x)) throw DomainError("value: non-finite input " + fmt_double(x));
        return value_fn->f(x);
    }
    return value(x, sigma, lambda);
}

double ModelParams::du(double x) const {
    if (value_fn) {
        if (value_fn->df) return value_fn->df(x);
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        return (value_fn->f(x + h) - value_fn->f(x - h)) / (2.0 * h);
    }
    return value_derivative(x, sigma, lambda);
}

double ModelParams::payoff_scale() const { return u_max ? *u_max : default_u_max(*this); }

double ModelParams::k0() const { return m * omega / payoff_scale(); }

void ModelParams::validate() const {
    require(behaviors.size() >= 2, "at least two behaviors are required");
    for (std::size_t j = 0; j < behaviors.size(); ++j) {
        const auto& b = behaviors[j];
        const std::string tag = "behavior " + std::to_string(j + 1) + ": ";
        require(std::isfinite(b.infection_rate) && b.infection_rate >= 0.0, tag + "beta must be >= 0");
        require(k_bar * b.infection_rate <= 1.0, tag + "k_bar*beta must not exceed 1, got " +
                                                     fmt_double(k_bar * b.infection_rate));
        require(std::isfinite(b.intrinsic_payoff), tag + "c must be finite");
    }
    require(std::isfinite(gamma) && gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
    require(k_bar >= 1.0, "k_bar must be >= 1");
    require(d_bar >= 1.0, "d_bar must be >= 1");
    require(std::isfinite(c_n) && c_n < 0.0, "c_n must be < 0");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
    require(sigma > 0.0 && sigma <= 1.0, "sigma must lie in (0,1]");
    require(lambda >= 0.0, "lambda must be >= 0");
    require(m > 0.0 && m <= 1.0, "m must lie in (0,1]");
    require(omega > 0.0 && omega <= 1.0, "omega must lie in (0,1]");
    if (u_max) require(std::isfinite(*u_max) && *u_max > 0.0, "u_max must be > 0");
    if (value_fn) {
        require(static_cast<bool>(value_fn->f), "custom value function is empty");
        require(value_fn->f(0.0) == 0.0, "custom value function must satisfy u(0) = 0");
        double prev = value_fn->f(-100.0);
        for (int k = -99; k <= 100; ++k) {
            const double cur = value_fn->f(static_cast<double>(k));
            require(cur >= prev, "custom value function must be nondecreasing");
            prev = cur;
        }
    }
    require(payoff_scale() > 0.0, "derived U_max must be > 0 (behaviors are indistinguishable)");
}

ModelParams two_behavior(double beta1, double c1, double c2, double c_n, double gamma,
                         double k_bar, double alpha) {
    ModelParams p;
    p.behaviors = {{beta1, c1}, {0.0, c2}};
    p.c_n = c_n;
    p.gamma = gamma;
    p.k_bar = k_bar;
    p.alpha = alpha;
    return p;
}

double infection_risk(std::size_t j, double i, const ModelParams& p, Mode mode) {
    const double q = p.k_bar * p.beta(j) * i;
    if (!(q >= 0.0) || q > 1.0)
        throw DomainError("infection probability k_bar*beta*i = " + fmt_double(q) + " outside [0,1]");
    return mode == Mode::EUT ? q : weight(q, p.alpha);
}

double utility(std::size_t j, double i, const ModelParams& p, Mode mode) {
    return p.u(p.c(j)) + p.u(p.c_n) * infection_risk(j, i, p, mode);
}

double imitation_prob(double u_self, double u_other, double omega, double u_max) {
    if (!(u_max > 0.0)) throw PreconditionError("imitation_prob: U_max must be > 0");
    const double gap = u_other - u_self;
    if (std::abs(gap) > u_max * (1.0 + 1e-12))
        throw DomainError("imitation_prob: payoff gap " + fmt_double(gap) + " exceeds U_max " +
                          fmt_double(u_max));
    return 0.5 + 0.5 * omega * gap / u_max;
}

double default_u_max(const ModelParams& p) {
    const double loss = std::abs(p.u(p.c_n));
    double best = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        for (std::size_t b = 0; b < p.size(); ++b) {
            if (a == b) continue;
            auto reach = [&](std::size_t j) {
                return p.beta(j) == 0.0 ? 0.0 : std::max(std::min(1.0, p.k_bar * p.beta(j)), kInvE);
            };
            const double base = p.u(p.c(a)) - p.u(p.c(b));
            best = std::max({best, std::abs(base - loss * reach(a)), std::abs(base + loss * reach(b))});
        }
    }
    return best;
}

} // namespace epib
