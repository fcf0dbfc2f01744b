#include "epib/agent_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace epib {

RegularNetwork build_regular(int n, int degree) {
    if (degree < 2 || degree % 2 != 0) throw PreconditionError("build_regular: degree must be even and >= 2");
    if (degree >= n) throw PreconditionError("build_regular: degree must be smaller than the node count");
    RegularNetwork g;
    g.node_count = n;
    g.degree = degree;
    g.adjacency.assign(static_cast<std::size_t>(n), {});
    for (int v = 0; v < n; ++v) {
        auto& nb = g.adjacency[static_cast<std::size_t>(v)];
        nb.reserve(static_cast<std::size_t>(degree));
        for (int s = 1; s <= degree / 2; ++s) {
            nb.push_back((v + s) % n);
            nb.push_back((v - s + n) % n);
        }
    }
    return g;
}

void write_edge_list(std::ostream& os, const RegularNetwork& g) {
    for (int v = 0; v < g.node_count; ++v)
        for (int u : g.adjacency[static_cast<std::size_t>(v)])
            if (v < u) os << v << ' ' << u << '\n';
}

RegularNetwork rewire_regular(const RegularNetwork& g, Rng& rng, int swaps_per_edge) {
    RegularNetwork h = g;
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < h.node_count; ++v)
        for (int u : h.adjacency[static_cast<std::size_t>(v)])
            if (v < u) edges.emplace_back(v, u);
    if (edges.size() < 2) return h;
    auto adj = [&](int v) -> std::vector<int>& { return h.adjacency[static_cast<std::size_t>(v)]; };
    auto linked = [&](int a, int b) { return std::find(adj(a).begin(), adj(a).end(), b) != adj(a).end(); };
    auto relink = [&](int v, int from, int to) { *std::find(adj(v).begin(), adj(v).end(), from) = to; };
    std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
    const long attempts = static_cast<long>(swaps_per_edge) * static_cast<long>(edges.size());
    for (long k = 0; k < attempts; ++k) {
        const std::size_t e1 = pick_edge(rng), e2 = pick_edge(rng);
        if (e1 == e2) continue;
        auto [a, b] = edges[e1];
        auto [c, d] = edges[e2];
        if (rng() & 1) std::swap(c, d);
        // (a,b),(c,d) -> (a,d),(c,b)
        if (a == d || c == b || a == c || b == d || linked(a, d) || linked(c, b)) continue;
        relink(a, b, d);
        relink(b, a, c);
        relink(c, d, b);
        relink(d, c, a);
        edges[e1] = {std::min(a, d), std::max(a, d)};
        edges[e2] = {std::min(c, b), std::max(c, b)};
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

double uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int pick(Rng& rng, int n) { return static_cast<int>(uniform(rng) * n); }

int draw_behavior(const std::vector<double>& shares, Rng& rng) {
    const double r = uniform(rng);
    double acc = 0.0;
    for (std::size_t j = 0; j < shares.size(); ++j) {
        acc += shares[j];
        if (r < acc) return static_cast<int>(j);
    }
    return static_cast<int>(shares.size()) - 1;
}

} // namespace

double Population::infected_fraction() const {
    if (infected.empty()) return 0.0;
    long c = 0;
    for (auto f : infected) c += f;
    return static_cast<double>(c) / static_cast<double>(infected.size());
}

std::vector<double> Population::susceptible_shares(std::size_t m) const {
    std::vector<double> s(m, 0.0), all(m, 0.0);
    double n = 0.0;
    for (std::size_t v = 0; v < infected.size(); ++v) {
        all[static_cast<std::size_t>(behavior[v])] += 1.0;
        if (!infected[v]) {
            s[static_cast<std::size_t>(behavior[v])] += 1.0;
            n += 1.0;
        }
    }
    if (n == 0.0) {
        s = all;
        n = static_cast<double>(infected.size());
    }
    for (double& v : s) v /= n;
    return s;
}

Population initial_population(int n, const std::vector<double>& shares, double infected0, Rng& rng) {
    Population pop;
    pop.infected.assign(static_cast<std::size_t>(n), 0);
    pop.behavior.assign(static_cast<std::size_t>(n), 0);
    for (auto& b : pop.behavior) b = draw_behavior(shares, rng);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
    const int k = static_cast<int>(std::lround(infected0 * n));
    for (int a = 0; a < k; ++a) {
        const int b = a + pick(rng, n - a);
        std::swap(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
        pop.infected[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])] = 1;
    }
    return pop;
}

void step(Population& pop, const RegularNetwork& contact, const RegularNetwork& info, const ModelParams& p,
          Mode mode, Rng& rng) {
    const int n = pop.size();
    if (contact.node_count != n || info.node_count != n || static_cast<int>(pop.behavior.size()) != n)
        throw PreconditionError("step: population and network sizes differ");
    const std::size_t m = p.size();

    const std::vector<std::uint8_t> was_infected = pop.infected;
    for (int v = 0; v < n; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        if (was_infected[sv]) continue;
        int k = 0;
        for (int u : contact.adjacency[sv]) k += was_infected[static_cast<std::size_t>(u)];
        if (k == 0) continue;
        const double beta = p.beta(static_cast<std::size_t>(pop.behavior[sv]));
        if (uniform(rng) < 1.0 - std::pow(1.0 - beta, k)) pop.infected[sv] = 1;
    }

    const std::vector<double> shares = pop.susceptible_shares(m);
    for (int v = 0; v < n; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        if (!was_infected[sv]) continue;
        if (uniform(rng) < p.gamma) {
            pop.infected[sv] = 0;
            pop.behavior[sv] = draw_behavior(shares, rng);
        }
    }

    const double i_now = pop.infected_fraction();
    const double u_max = p.payoff_scale();
    std::vector<double> payoff(m);
    for (std::size_t j = 0; j < m; ++j) payoff[j] = utility(j, i_now, p, mode);

    std::vector<int> susceptible;
    susceptible.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        if (!pop.infected[static_cast<std::size_t>(v)]) susceptible.push_back(v);
    const int focal = static_cast<int>(std::floor(p.m * static_cast<double>(susceptible.size())));
    const std::vector<int> before = pop.behavior;
    std::vector<int> candidates;
    candidates.reserve(static_cast<std::size_t>(info.degree));
    const int ns = static_cast<int>(susceptible.size());
    for (int a = 0; a < focal; ++a) {
        const int b = a + pick(rng, ns - a);
        std::swap(susceptible[static_cast<std::size_t>(a)], susceptible[static_cast<std::size_t>(b)]);
        const int v = susceptible[static_cast<std::size_t>(a)];
        candidates.clear();
        for (int u : info.adjacency[static_cast<std::size_t>(v)])
            if (!pop.infected[static_cast<std::size_t>(u)]) candidates.push_back(u);
        if (candidates.empty()) continue;
        const int u = candidates[static_cast<std::size_t>(pick(rng, static_cast<int>(candidates.size())))];
        const int bv = before[static_cast<std::size_t>(v)];
        const int bu = before[static_cast<std::size_t>(u)];
        if (bu == bv) continue;
        const double q = imitation_prob(payoff[static_cast<std::size_t>(bv)], payoff[static_cast<std::size_t>(bu)],
                                        p.omega, u_max);
        if (uniform(rng) < q) pop.behavior[static_cast<std::size_t>(v)] = bu;
    }
}

namespace {

struct Series {
    std::vector<double> i;
    std::vector<std::vector<double>> x;
};

Series simulate_run(const ModelParams& p, Mode mode, const EnsembleConfig& cfg, const RegularNetwork& contact,
                    const RegularNetwork& info, const std::vector<double>& shares0, std::uint64_t seed) {
    Rng rng(seed);
    Population pop = initial_population(cfg.n, shares0, cfg.infected0, rng);
    Series s;
    auto sample = [&] {
        s.i.push_back(pop.infected_fraction());
        s.x.push_back(pop.susceptible_shares(p.size()));
    };
    sample();
    for (int t = 1; t <= cfg.horizon; ++t) {
        step(pop, contact, info, p, mode, rng);
        if (t % cfg.sample_every == 0 || t == cfg.horizon) sample();
    }
    return s;
}

} // namespace

NetworkPair build_networks(const EnsembleConfig& cfg) {
    NetworkPair g{build_regular(cfg.n, cfg.contact_degree), build_regular(cfg.n, cfg.info_degree)};
    if (cfg.topology == Topology::RandomRegular) {
        Rng rng(splitmix64(cfg.base_seed ^ 0x6e6574776f726b00ULL));
        g.contact = rewire_regular(g.contact, rng);
        g.info = rewire_regular(g.info, rng);
    }
    return g;
}

EnsembleResult run_ensemble(const ModelParams& p, Mode mode, const EnsembleConfig& cfg) {
    p.validate();
    if (cfg.runs < 1) throw PreconditionError("run_ensemble: runs must be >= 1");
    if (cfg.horizon < 1 || cfg.sample_every < 1) throw PreconditionError("run_ensemble: bad horizon or sampling");
    const NetworkPair nets = build_networks(cfg);
    const RegularNetwork& contact = nets.contact;
    const RegularNetwork& info = nets.info;
    const std::size_t m = p.size();
    std::vector<double> shares0 = cfg.shares0;
    if (shares0.empty()) shares0.assign(m, 1.0 / static_cast<double>(m));
    if (shares0.size() != m) throw PreconditionError("run_ensemble: initial shares must have one entry per behavior");

    std::vector<Series> runs(static_cast<std::size_t>(cfg.runs));
    std::vector<std::uint64_t> seeds(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) seeds[r] = splitmix64(cfg.base_seed + r);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t r = next++; r < runs.size(); r = next++) {
            try {
                runs[r] = simulate_run(p, mode, cfg, contact, info, shares0, seeds[r]);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleResult out;
    const std::size_t samples = runs.front().i.size();
    const double nr = static_cast<double>(runs.size());
    for (std::size_t k = 0; k < samples; ++k) {
        const int t = std::min(static_cast<int>(k) * cfg.sample_every, cfg.horizon);
        out.times.push_back(static_cast<double>(t));
        double mi = 0.0;
        std::vector<double> mx(m, 0.0);
        for (const auto& s : runs) {
            mi += s.i[k];
            for (std::size_t j = 0; j < m; ++j) mx[j] += s.x[k][j];
        }
        mi /= nr;
        for (double& v : mx) v /= nr;
        double vi = 0.0;
        std::vector<double> vx(m, 0.0);
        for (const auto& s : runs) {
            vi += (s.i[k] - mi) * (s.i[k] - mi);
            for (std::size_t j = 0; j < m; ++j) vx[j] += (s.x[k][j] - mx[j]) * (s.x[k][j] - mx[j]);
        }
        const double denom = runs.size() > 1 ? nr - 1.0 : 1.0;
        out.i_mean.push_back(mi);
        out.i_std.push_back(std::sqrt(vi / denom));
        for (double& v : vx) v = std::sqrt(v / denom);
        out.x_mean.push_back(std::move(mx));
        out.x_std.push_back(std::move(vx));
    }
    for (std::size_t r = 0; r < runs.size(); ++r)
        out.terminals.push_back({seeds[r], runs[r].i.back(), runs[r].x.back()});
    return out;
}

void write_ensemble_csv(std::ostream& os, const EnsembleResult& r) {
    const std::size_t m = r.x_mean.empty() ? 0 : r.x_mean.front().size();
    os << "t,i_mean,i_std";
    for (std::size_t j = 0; j < m; ++j) os << ",x" << (j + 1) << "_mean,x" << (j + 1) << "_std";
    os << '\n';
    os.precision(10);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        os << r.times[k] << ',' << r.i_mean[k] << ',' << r.i_std[k];
        for (std::size_t j = 0; j < m; ++j) os << ',' << r.x_mean[k][j] << ',' << r.x_std[k][j];
        os << '\n';
    }
}

} // namespace epib
