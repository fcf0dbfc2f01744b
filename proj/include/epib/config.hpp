#pragma once

#include "epib/agent_sim.hpp"
#include "epib/inducement.hpp"
#include "epib/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace epib {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, long line) : std::runtime_error(what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Flat YAML mapping. Model keys: beta, c, c_n, gamma, k_bar, d_bar, alpha, sigma, lambda, m, omega, u_max.
struct ExperimentConfig {
    ModelParams params;
    bool has_model = false;
    std::vector<std::string> missing; // required model keys not given
    long end_line = 1;

    Mode mode = Mode::PT;
    std::uint64_t seed = 1;

    // mean-field
    double dt = 0.01;
    double horizon = 1000.0;
    int stride = 100;
    double i0 = 0.05;
    std::vector<double> x0;
    bool stop_at_steady = false;
    int starts = 0; // numeric multi-start search when > 0

    // agents
    int n = 500;
    int contact_degree = 10;
    int info_degree = 20;
    int agent_horizon = 2000;
    int runs = 50;
    int sample_every = 10;
    int threads = 0;
    std::string edge_list;
    std::string topology = "ring"; // ring | random_regular

    // sweep
    std::string sweep_axis = "beta1";
    double sweep_min = 0.001;
    double sweep_max = 0.02;
    int sweep_steps = 40;
    std::vector<double> sweep_grid;

    // rationality comparison
    double alpha_low = 0.6;
    double alpha_high = 0.8;

    // inducement
    ConstraintTarget target{0.3, 0.5};
    OptimizerConfig optimizer;
    std::string cost = "squared";

    // estimation
    std::string responses;
    std::string choices;
    std::string series;
    int bins = 6;

    void require_model() const;
};

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

} // namespace epib
