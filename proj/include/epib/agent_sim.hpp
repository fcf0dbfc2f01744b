#pragma once

#include "epib/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace epib {

struct RegularNetwork {
    int node_count = 0;
    int degree = 0;
    std::vector<std::vector<int>> adjacency;
};

// Circulant ring lattice: v ~ v +- 1..degree/2 (mod N).
RegularNetwork build_regular(int n, int degree);

void write_edge_list(std::ostream& os, const RegularNetwork& g);

using Rng = std::mt19937_64;

// Degree-preserving double-edge swaps applied to g; yields a random regular graph.
RegularNetwork rewire_regular(const RegularNetwork& g, Rng& rng, int swaps_per_edge = 10);

enum class Topology { RingLattice, RandomRegular };

// SplitMix64 finalizer; run r of an ensemble uses splitmix64(base_seed + r).
std::uint64_t splitmix64(std::uint64_t x);

struct Population {
    std::vector<std::uint8_t> infected;
    std::vector<int> behavior;

    int size() const { return static_cast<int>(infected.size()); }
    double infected_fraction() const;
    // Shares over the susceptible population; falls back to all agents when none is susceptible.
    std::vector<double> susceptible_shares(std::size_t m) const;
};

Population initial_population(int n, const std::vector<double>& shares, double infected0, Rng& rng);

// One synchronous time unit: infection, recovery with re-entry, imitation.
void step(Population& pop, const RegularNetwork& contact, const RegularNetwork& info, const ModelParams& p,
          Mode mode, Rng& rng);

struct EnsembleConfig {
    int n = 500;
    int contact_degree = 10;
    int info_degree = 20;
    int horizon = 2000;        // time units
    int runs = 50;
    std::uint64_t base_seed = 1;
    double infected0 = 0.05;
    std::vector<double> shares0; // empty: uniform
    int sample_every = 1;
    int threads = 0;           // 0: hardware concurrency
    Topology topology = Topology::RingLattice;
};

struct RunTerminal {
    std::uint64_t seed;
    double i;
    std::vector<double> x;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<double> i_mean, i_std;
    std::vector<std::vector<double>> x_mean, x_std; // [sample][behavior]
    std::vector<RunTerminal> terminals;
};

struct NetworkPair {
    RegularNetwork contact, info;
};

// Networks used by run_ensemble; random topologies are seeded from base_seed.
NetworkPair build_networks(const EnsembleConfig& cfg);

EnsembleResult run_ensemble(const ModelParams& p, Mode mode, const EnsembleConfig& cfg);

void write_ensemble_csv(std::ostream& os, const EnsembleResult& r);

} // namespace epib
