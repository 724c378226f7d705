#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "scd/masks.hpp"

namespace scd {

// Per-node distribution over {changing, non-changing}, stored as the
// probability of "changing"; the complement is implied, so every pair sums to 1.
struct ChangeField {
    std::vector<double> p_change;

    std::size_t size() const { return p_change.size(); }
    std::pair<double, double> at(std::size_t i) const { return {p_change[i], 1.0 - p_change[i]}; }
    void validate() const;
};

struct GmpEdge {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double weight = 1.0;  // same-mask indicator or a continuous weight
};

// Kullback-Leibler fidelity plus lambda times a weighted Potts penalty.
struct GmpProblem {
    std::size_t nodes = 0;
    std::vector<GmpEdge> edges;
    double edge_weight = 1.0;  // constant factor w on every edge
    double lambda = 1.0;
    double smoothing = 0.01;

    void validate() const;

    // Keeps only edges with a positive weight.
    static GmpProblem from_edge_weights(std::size_t nodes, const EdgeWeights& weights, double lambda,
                                        double edge_weight = 1.0, double smoothing = 0.01);
};

struct Partition {
    std::vector<std::uint32_t> component;  // per node
    std::vector<double> value;             // per component, p_change

    std::size_t components() const { return value.size(); }
    ChangeField field() const;
};

// (p_seed, 1 - p_seed) on changed nodes, (p_other, 1 - p_other) elsewhere.
ChangeField init_labeling(std::size_t nodes, std::span<const std::uint32_t> changed, double p_seed = 0.8,
                          double p_other = 0.5);

// (1 - eps) * x + eps / 2 on the change probability.
double smooth(double p, double eps);
// KL((p, 1-p) || (q, 1-q)) in nats, with 0 log 0 = 0.
double binary_kl(double p, double q);

double fidelity(const ChangeField& P, const ChangeField& Q, double smoothing);
// Sum over edges of w * weight where the two end values differ.
double penalty(const ChangeField& Q, const GmpProblem& problem);
double energy(const ChangeField& P, const ChangeField& Q, const GmpProblem& problem);

struct CutPursuitOptions {
    int max_outer_iters = 10;
    int max_sweeps = 50;
};

struct CutPursuitResult {
    ChangeField q;
    Partition partition;
    double energy = 0.0;
    // Energy of the starting partition followed by each accepted iteration.
    std::vector<double> energy_history;
};

// Split / reduce / merge descent on the piecewise-constant field, with a
// single-node relocation pass after each merge.
CutPursuitResult cut_pursuit(const ChangeField& P, const GmpProblem& problem, const CutPursuitOptions& opts = {});

struct BruteForceResult {
    Partition partition;
    double energy = 0.0;
};

constexpr std::size_t kBruteForceMaxNodes = 12;

// Exact minimum over every set partition of the nodes (component values are
// member means). Equal energies prefer fewer components.
BruteForceResult brute_force_gmp(const ChangeField& P, const GmpProblem& problem);

// 1 (changing) iff p_change > p_nochange; an exact tie is non-changing.
std::vector<std::uint8_t> extract_labels(const ChangeField& Q);

}  // namespace scd
