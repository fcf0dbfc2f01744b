#include "epib/estimation.hpp"

#include "epib/csv.hpp"
#include "epib/model.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace epib {

double model_price(double p, double alpha, double sigma, double stake) {
    return stake * std::pow(weight(p, alpha), 1.0 / sigma);
}

AlphaFit estimate_alpha(const std::vector<InsuranceResponse>& responses, double sigma) {
    if (!(sigma > 0.0 && sigma <= 1.0)) throw DomainError("estimate_alpha: sigma must lie in (0,1]");
    std::set<double> distinct;
    std::vector<double> xs, ys;
    for (const auto& r : responses) {
        if (!(r.p > 0.0 && r.p < 1.0)) throw DomainError("estimate_alpha: p must lie in (0,1)");
        if (!(r.stake > 0.0)) throw DomainError("estimate_alpha: stake must be > 0");
        if (!(r.r > 0.0 && r.r < r.stake)) throw DomainError("estimate_alpha: price must lie in (0, stake)");
        distinct.insert(r.p);
        xs.push_back(std::log(-std::log(r.p)));
        ys.push_back(std::log(-std::log(r.r / r.stake)));
    }
    if (distinct.size() < 2) throw InsufficientData("estimate_alpha: need at least 2 distinct probabilities");

    AlphaFit fit;
    fit.n = xs.size();
    const double shift = std::log(sigma);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += xs[k] * xs[k];
        sxy += xs[k] * (ys[k] + shift);
    }
    if (sxx == 0.0) throw InsufficientData("estimate_alpha: all probabilities equal 1/e");
    fit.alpha_hat = sxy / sxx;
    fit.in_range = fit.alpha_hat > 0.0 && fit.alpha_hat <= 1.0;

    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        cxx += (xs[k] - mx) * (xs[k] - mx);
        cxy += (xs[k] - mx) * (ys[k] - my);
        cyy += (ys[k] - my) * (ys[k] - my);
    }
    fit.free_slope = cxy / cxx;
    fit.free_intercept = my - fit.free_slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double e = ys[k] - (fit.free_slope * xs[k] + fit.free_intercept);
        ss_res += e * e;
    }
    fit.r2 = cyy > 0.0 ? 1.0 - ss_res / cyy : 1.0;
    return fit;
}

double risk_appetite(const std::vector<bool>& choices) {
    if (choices.empty()) throw InsufficientData("risk_appetite: no scenario choices");
    const auto risky = std::count(choices.begin(), choices.end(), true);
    return static_cast<double>(risky) / static_cast<double>(choices.size());
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t k = 0; k < order.size();) {
        std::size_t e = k;
        while (e + 1 < order.size() && v[order[e + 1]] == v[order[k]]) ++e;
        const double r = (static_cast<double>(k) + static_cast<double>(e)) / 2.0 + 1.0;
        for (std::size_t q = k; q <= e; ++q) ranks[order[q]] = r;
        k = e + 1;
    }
    return ranks;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw DomainError("correlate: zero variance, correlation undefined");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double t_test_p(double r, std::size_t n) {
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

} // namespace

Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw PreconditionError("correlate: series lengths differ");
    if (xs.size() < 3) throw InsufficientData("correlate: need at least 3 points");
    Correlation c;
    c.n = xs.size();
    c.pearson = pearson(xs, ys);
    c.spearman = pearson(average_ranks(xs), average_ranks(ys));
    c.pearson_p = t_test_p(c.pearson, c.n);
    c.spearman_p = t_test_p(c.spearman, c.n);
    return c;
}

double spearman_permutation_p(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw PreconditionError("spearman_permutation_p: series lengths differ");
    if (xs.size() < 3 || xs.size() > 10) throw PreconditionError("spearman_permutation_p: need 3 <= n <= 10");
    const std::vector<double> rx = average_ranks(xs);
    std::vector<double> ry = average_ranks(ys);
    const double observed = std::abs(pearson(rx, ry));
    std::sort(ry.begin(), ry.end());
    long hits = 0, total = 0;
    do {
        ++total;
        if (std::abs(pearson(rx, ry)) >= observed - 1e-12) ++hits;
    } while (std::next_permutation(ry.begin(), ry.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<AppetiteGroup> group_by_appetite(const std::vector<SubjectSummary>& subjects, int bin_count) {
    if (bin_count < 2) throw PreconditionError("group_by_appetite: bin_count must be >= 2");
    std::vector<AppetiteGroup> groups(static_cast<std::size_t>(bin_count));
    for (int b = 0; b < bin_count; ++b) {
        groups[static_cast<std::size_t>(b)].lower = static_cast<double>(b) / bin_count;
        groups[static_cast<std::size_t>(b)].upper = static_cast<double>(b + 1) / bin_count;
    }
    for (const auto& s : subjects) {
        if (!(s.appetite >= 0.0 && s.appetite <= 1.0))
            throw DomainError("group_by_appetite: appetite outside [0,1] for subject " + s.id);
        const int b = std::min(bin_count - 1, static_cast<int>(std::floor(s.appetite * bin_count)));
        auto& g = groups[static_cast<std::size_t>(b)];
        ++g.count;
        g.mean_appetite += s.appetite;
        g.mean_alpha += s.alpha_hat;
    }
    for (auto& g : groups) {
        if (g.count == 0) continue;
        g.mean_appetite /= static_cast<double>(g.count);
        g.mean_alpha /= static_cast<double>(g.count);
    }
    return groups;
}

std::vector<SubjectRecord> read_subjects(std::istream& responses, std::istream* choices) {
    std::map<std::string, SubjectRecord> by_id;
    std::vector<std::string> order;
    auto record = [&](const std::string& id) -> SubjectRecord& {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            order.push_back(id);
            it = by_id.emplace(id, SubjectRecord{id, {}, {}}).first;
        }
        return it->second;
    };
    const CsvTable t = read_csv(responses);
    const std::size_t cid = t.column("subject_id"), cp = t.column("p"), cr = t.column("r");
    const bool has_stake = std::find(t.header.begin(), t.header.end(), "stake") != t.header.end();
    const std::size_t cs = has_stake ? t.column("stake") : 0;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& row = t.rows[k];
        const long line = t.lines[k];
        if (row[cid].empty()) throw CsvError("line " + std::to_string(line) + ": empty subject_id", line);
        InsuranceResponse r;
        r.p = parse_double(row[cp], line, "p");
        r.r = parse_double(row[cr], line, "r");
        r.stake = has_stake ? parse_double(row[cs], line, "stake") : 100.0;
        if (!(r.p > 0.0 && r.p < 1.0))
            throw CsvError("line " + std::to_string(line) + ": p must lie in (0,1)", line);
        if (!(r.r > 0.0 && r.r < r.stake))
            throw CsvError("line " + std::to_string(line) + ": r must lie in (0, stake)", line);
        record(row[cid]).responses.push_back(r);
    }
    if (choices) {
        const CsvTable c = read_csv(*choices);
        const std::size_t did = c.column("subject_id"), drisky = c.column("risky");
        c.column("scenario_id");
        for (std::size_t k = 0; k < c.rows.size(); ++k) {
            const auto& row = c.rows[k];
            const long line = c.lines[k];
            if (row[drisky] != "0" && row[drisky] != "1")
                throw CsvError("line " + std::to_string(line) + ": risky must be 0 or 1", line);
            record(row[did]).choices.push_back(row[drisky] == "1");
        }
    }
    std::vector<SubjectRecord> out;
    for (const auto& id : order) out.push_back(by_id.at(id));
    return out;
}

void write_estimates_csv(std::ostream& os, const std::vector<SubjectRecord>& subjects, double sigma) {
    os << "subject_id,alpha_hat,in_range,r2,appetite\n";
    os.precision(12);
    for (const auto& s : subjects) {
        const AlphaFit f = estimate_alpha(s.responses, sigma);
        os << s.id << ',' << f.alpha_hat << ',' << (f.in_range ? 1 : 0) << ',' << f.r2 << ',';
        if (s.choices.empty())
            os << "nan";
        else
            os << risk_appetite(s.choices);
        os << '\n';
    }
}

} // namespace epib
