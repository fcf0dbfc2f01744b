#pragma once

#include "epib/meanfield.hpp"
#include "epib/model.hpp"

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace epib {

enum class CaseLabel { Case1, Case2, Case3, NoSteadyState };

const char* to_string(CaseLabel c);

struct Jacobian2 {
    double a11, a12, a21, a22; // d(i',x')/d(i,x)
};

struct Stability {
    double P = 0.0;
    double Q = 0.0;
    std::complex<double> eig1, eig2;
    bool stable = false; // P < 0 and Q > 0
};

struct SteadyState {
    CaseLabel label = CaseLabel::NoSteadyState;
    double i_star = 0.0;
    double x1_star = 0.0;
    double discriminant = 0.0; // Phi_1 or Phi_2
    Stability stability;
    double residual = 0.0;     // max |rhs| at the point
};

// Two-behavior root function g(i) = -k b1 i + k0 (u1 - u2 + u_n pi(i)).
double f2(double x, const ModelParams& p, Mode mode);
double phi1(const ModelParams& p);
double phi2(const ModelParams& p);

SteadyState classify_eut(const ModelParams& p);
SteadyState classify_pt(const ModelParams& p);
SteadyState classify(const ModelParams& p, Mode mode);

Jacobian2 jacobian_2(double i, double x1, const ModelParams& p, Mode mode);
Stability stability_from(const Jacobian2& j);
Stability stability_certificate(double i, double x1, const ModelParams& p, Mode mode);

double max_spread(const ModelParams& p);

enum class Regime { Overweighting, Underweighting };

struct RationalityReport {
    SteadyState low, high;
    double alpha_low = 0.0, alpha_high = 0.0;
    bool both_case3 = false;
    std::optional<Regime> regime;       // set when both are Case3
    bool prediction_holds = true;
    std::string subcase;                // description when cases differ
    std::string summary;
};

RationalityReport compare_rationality(const ModelParams& p, double alpha_low, double alpha_high);

struct RadicalTest {
    bool possible = false;
    double spread_margin = 0.0;   // k b1 - gamma
    double loss_ratio = 0.0;      // u(c_n) / (u(c2) - u(c1))
    double loss_bound = 0.0;      // e + 1 / (k0 (u(c2) - u(c1)))
    bool spread_condition = false;
    bool loss_condition = false;
};

RadicalTest radical_regime_test(const ModelParams& p);

struct NumericSteadyState {
    SystemState state;
    double residual = 0.0;
    int members = 0;                       // starts that converged here
    std::vector<std::complex<double>> eigenvalues; // reduced Jacobian
    bool stable = false;
    std::optional<Stability> certificate;  // M = 2 only
};

struct NumericOptions {
    double dt = 0.5;
    double horizon = 2.0e5;
    double cluster_radius = 1e-4;
    double i_floor = 0.05; // starts have i in (i_floor, 1)
};

struct NumericResult {
    std::vector<NumericSteadyState> clusters;
    std::vector<std::string> failures; // per-start non-convergence reports
};

NumericResult numeric_steady_state(const ModelParams& p, Mode mode, int starts, const NumericOptions& opt = {});

// Jacobian of the reduced system (i, x_1..x_{M-1}) by central differences.
std::vector<std::complex<double>> reduced_eigenvalues(const SystemState& s, const ModelParams& p, Mode mode);

enum class SweepAxis { Beta1, Alpha };

struct SweepRow {
    double value = 0.0;
    std::optional<SteadyState> state;
    std::string error;
};

std::vector<SweepRow> sweep(const ModelParams& p, SweepAxis axis, const std::vector<double>& grid, Mode mode);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

} // namespace epib
