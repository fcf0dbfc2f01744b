#pragma once

#include "epib/model.hpp"

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace epib {

struct SystemState {
    double i = 0.0;
    std::vector<double> x;
};

struct Derivative {
    double di = 0.0;
    std::vector<double> dx;
    double max_abs() const;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

// Invariant payoff terms of a parameter set, cached for repeated rhs evaluation.
struct PayoffKernel {
    explicit PayoffKernel(const ModelParams& p);
    const ModelParams* params;
    std::vector<double> u_c;
    double u_n;
    double k0;
    double utility(std::size_t j, double i, Mode mode) const;
};

Derivative rhs_m(const SystemState& s, const ModelParams& p, Mode mode);
Derivative rhs_m(const SystemState& s, const PayoffKernel& k, Mode mode);

struct Rhs2 {
    double di;
    double dx1;
};
Rhs2 rhs_2(double i, double x1, const ModelParams& p, Mode mode);

void check_state(const SystemState& s, std::size_t m);

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    double max_drift = 0.0;     // largest pre-normalization simplex drift
    long steps = 0;
    bool converged = false;     // early stop fired
    double final_rhs_norm = 0.0;
};

struct IntegrateOptions {
    double dt = 0.01;
    double horizon = 1000.0;
    bool stop_at_steady = false;
    double steady_tol = 1e-10;
    int steady_window = 100;
    int stride = 1;             // keep every stride-th step
    double drift_abort = 1e-6;
};

Trajectory integrate(const SystemState& s0, const ModelParams& p, Mode mode, const IntegrateOptions& opt);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

} // namespace epib
