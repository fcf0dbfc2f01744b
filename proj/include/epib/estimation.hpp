#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace epib {

struct InsuranceResponse {
    double p = 0.0;        // loss probability
    double r = 0.0;        // accepted price
    double stake = 100.0;  // L
};

struct SubjectRecord {
    std::string id;
    std::vector<InsuranceResponse> responses;
    std::vector<bool> choices; // risky = true
};

struct AlphaFit {
    double alpha_hat = 0.0;   // slope with intercept fixed at -ln(sigma)
    bool in_range = false;    // alpha_hat in (0, 1]
    double free_slope = 0.0;  // unconstrained y = a x + b
    double free_intercept = 0.0;
    double r2 = 0.0;          // of the free fit
    std::size_t n = 0;
};

class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

AlphaFit estimate_alpha(const std::vector<InsuranceResponse>& responses, double sigma = 0.65);

// Price a subject with parameters (alpha, sigma) accepts: L * w(p, alpha)^(1/sigma).
double model_price(double p, double alpha, double sigma, double stake);

double risk_appetite(const std::vector<bool>& choices);

struct Correlation {
    double pearson = 0.0;
    double pearson_p = 0.0;
    double spearman = 0.0;
    double spearman_p = 0.0;
    std::size_t n = 0;
};

Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v);

// Exact two-sided permutation p-value for Spearman's rho, n <= 10.
double spearman_permutation_p(const std::vector<double>& xs, const std::vector<double>& ys);

struct AppetiteGroup {
    double lower = 0.0, upper = 0.0;
    std::size_t count = 0;
    double mean_appetite = 0.0;
    double mean_alpha = 0.0;
};

struct SubjectSummary {
    std::string id;
    double alpha_hat = 0.0;
    double appetite = 0.0;
};

std::vector<AppetiteGroup> group_by_appetite(const std::vector<SubjectSummary>& subjects, int bin_count = 6);

// Reads `subject_id,p,r,stake` and `subject_id,scenario_id,risky` files into subject records.
// Throws CsvError naming the offending line.
std::vector<SubjectRecord> read_subjects(std::istream& responses, std::istream* choices);

void write_estimates_csv(std::ostream& os, const std::vector<SubjectRecord>& subjects, double sigma);

} // namespace epib
