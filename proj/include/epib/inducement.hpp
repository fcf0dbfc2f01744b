#pragma once

#include "epib/model.hpp"
#include "epib/steady_state.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace epib {

// delta = [d_alpha, d_cn, d_c1, d_c2]
struct InterventionVector {
    double d_alpha = 0.0;
    double d_cn = 0.0;
    double d_c1 = 0.0;
    double d_c2 = 0.0;

    std::array<double, 4> as_array() const { return {d_alpha, d_cn, d_c1, d_c2}; }
    static InterventionVector from(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
    double norm() const;
};

using Gradient = std::array<double, 4>;

struct ConstraintTarget {
    double i_max = 0.0;
    double x_min = 0.0;
};

// One leg of a penalty continuation; each leg warm-starts from the previous iterate with zero velocity.
struct PenaltyStage {
    double penalty_weight = 100.0;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int iters = 10000;
};

struct OptimizerConfig {
    double penalty_weight = 100.0; // mu
    double barrier_scale = 1000.0; // t
    double momentum = 0.9;         // eta
    double learning_rate = 1e-3;   // epsilon
    int max_iters = 20000;
    int max_halvings = 60;
    // When non-empty, replaces (penalty_weight, learning_rate, momentum, max_iters) in momentum_descent.
    std::vector<PenaltyStage> stages;

    OptimizerConfig final_stage() const;
    int total_iters() const;
};

// Intervention cost l3. grad may be empty, in which case central differences are used.
struct GuidanceCost {
    std::function<double(const InterventionVector&)> l3;
    std::function<Gradient(const InterventionVector&)> l3_grad;

    static GuidanceCost squared_norm();
    static GuidanceCost none();
    double value(const InterventionVector& d) const;
    Gradient grad(const InterventionVector& d) const;
};

// l3 must be zero at the origin and grow away from it componentwise.
bool validate_cost(const GuidanceCost& cost, int samples = 200, unsigned seed = 7);

enum class Variant { Feasible, Infeasible };

const char* to_string(Variant v);

double steady_curve(double i, const ModelParams& p);
bool feasibility(const ConstraintTarget& target, const ModelParams& p);

// Parameters after applying delta. U_max is pinned to the unguided value.
ModelParams adjusted(const ModelParams& base, const InterventionVector& d);

// Constraints 1-2 plus c1' > c2' (required by the steady-state analysis).
bool interior(const ModelParams& base, const InterventionVector& d);

inline double hinge_sq(double x) { return x > 0.0 ? x * x : 0.0; }

struct Evaluation {
    double loss = 0.0;
    Gradient grad{};
    double i = 0.0, x1 = 0.0;
    double f1 = 0.0;          // Phi_2 of the adjusted parameters
    bool case3 = false;       // F1 >= 0
    bool finite = true;
    std::string diagnostic;
    // smallest |argument| over the max{0, .} terms active in this variant
    double kink_distance = 0.0;
};

// Loss and analytic gradient. base must be a two-behavior parameter set with k_bar*beta1 > gamma.
Evaluation evaluate(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                    const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant);

double objective(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                 const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant);

Gradient gradient(const InterventionVector& d, const ConstraintTarget& target, const ModelParams& base,
                  const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant);

class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DescentResult {
    InterventionVector delta;
    std::vector<double> loss_history; // loss at each iterate, starting with delta0
    int halvings = 0;
};

using LossFn = std::function<Evaluation(const InterventionVector&)>;
using InteriorFn = std::function<bool(const InterventionVector&)>;

DescentResult momentum_descent(const InterventionVector& d0, const LossFn& f, const InteriorFn& ok,
                               const OptimizerConfig& cfg);

DescentResult momentum_descent(const InterventionVector& d0, const ConstraintTarget& target, const ModelParams& base,
                               const GuidanceCost& cost, const OptimizerConfig& cfg, Variant variant);

InterventionVector default_start(const ModelParams& base);

struct OptimizeResult {
    InterventionVector delta;
    Variant variant = Variant::Feasible;
    bool feasible = true;
    CaseLabel case_before = CaseLabel::NoSteadyState;
    CaseLabel case_after = CaseLabel::NoSteadyState;
    SteadyState achieved;
    double loss = 0.0;
    std::vector<double> loss_history;
    std::vector<std::string> case_trace;
};

OptimizeResult optimize(const ConstraintTarget& target, const ModelParams& base, const GuidanceCost& cost,
                        const OptimizerConfig& cfg, const std::vector<InterventionVector>& extra_starts = {});

void write_loss_csv(std::ostream& os, const std::vector<double>& history);

} // namespace epib
