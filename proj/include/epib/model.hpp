#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace epib {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Mode { EUT, PT };

const char* to_string(Mode m);

// User-supplied value function. Must be increasing with f(0) = 0.
// df is optional; a central difference is used when it is empty.
struct ValueFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
};

struct BehaviorSpec {
    double infection_rate = 0.0;  // beta_j
    double intrinsic_payoff = 0.0; // c_j
};

struct ModelParams {
    std::vector<BehaviorSpec> behaviors;
    double gamma = 0.03;
    double k_bar = 10.0;
    double d_bar = 20.0;

    double c_n = -20.0;
    double alpha = 1.0;
    double sigma = 0.65;
    double lambda = 1.0;
    double m = 1.0;
    double omega = 1.0;
    std::optional<double> u_max; // empty: derived by default_u_max()

    std::optional<ValueFunction> value_fn;

    std::size_t size() const { return behaviors.size(); }
    double beta(std::size_t j) const { return behaviors.at(j).infection_rate; }
    double c(std::size_t j) const { return behaviors.at(j).intrinsic_payoff; }

    double u(double x) const;       // value function under these params
    double du(double x) const;      // its derivative
    double payoff_scale() const;    // U_max
    double k0() const;              // m * omega / U_max

    // Throws PreconditionError naming the first violated invariant.
    void validate() const;
};

// Two-behavior fixture with beta_2 = 0.
ModelParams two_behavior(double beta1, double c1, double c2, double c_n, double gamma,
                         double k_bar = 10.0, double alpha = 1.0);

// Power value function: x^sigma for x >= 0, -lambda (-x)^sigma otherwise.
double value(double x, double sigma, double lambda);
double value_derivative(double x, double sigma, double lambda);

// Probability weighting exp(-(-ln p)^alpha) with w(0) = 0, w(1) = 1.
double weight(double p, double alpha);
double weight_dp(double p, double alpha);
double weight_dalpha(double p, double alpha);

// Loss probability entering the payoff of behavior j at infected fraction i.
double infection_risk(std::size_t j, double i, const ModelParams& p, Mode mode);

double utility(std::size_t j, double i, const ModelParams& p, Mode mode);

double imitation_prob(double u_self, double u_other, double omega, double u_max);

// Supremum of |U_a - U_b| over i in [0,1], alpha in (0,1] and both modes.
double default_u_max(const ModelParams& p);

} // namespace epib
