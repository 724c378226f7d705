#include "scd/gmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <tuple>

namespace scd {

namespace {

// Values closer than this count as the same component value in the penalty.
constexpr double kValueTol = 1e-12;

bool values_differ(double a, double b) { return std::abs(a - b) > kValueTol; }

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double neg_entropy(double p) { return xlogy(p, p) + xlogy(1.0 - p, 1.0 - p); }

double energy_tol(double e) { return 1e-12 * std::max(1.0, std::abs(e)); }

// Threshold initialisations tried per component split.
constexpr std::size_t kSplitStarts = 8;
// Pair lookahead is skipped on partitions with more adjacent pairs than this.
constexpr std::size_t kLookaheadPairs = 2000;

// Sufficient statistics of a node set for the closed-form fidelity.
struct Stats {
    double count = 0.0;
    double sum_raw = 0.0;
    double sum_smooth = 0.0;
    double neg_entropy = 0.0;

    void add(const Stats& o) {
        count += o.count;
        sum_raw += o.sum_raw;
        sum_smooth += o.sum_smooth;
        neg_entropy += o.neg_entropy;
    }
    void remove(const Stats& o) {
        count -= o.count;
        sum_raw -= o.sum_raw;
        sum_smooth -= o.sum_smooth;
        neg_entropy -= o.neg_entropy;
    }
    double value() const { return sum_raw / count; }
    // Sum over members of KL(p~ || q~) with q the member mean.
    double fidelity() const {
        const double qs = sum_smooth / count;
        return neg_entropy - xlogy(sum_smooth, qs) - xlogy(count - sum_smooth, 1.0 - qs);
    }
};

using Adjacency = std::vector<std::vector<std::pair<std::uint32_t, double>>>;

Adjacency build_adjacency(const GmpProblem& pb) {
    std::vector<std::map<std::uint32_t, double>> acc(pb.nodes);
    for (const GmpEdge& e : pb.edges) {
        const double w = pb.edge_weight * e.weight;
        if (e.a == e.b || !(w > 0.0)) continue;
        acc[e.a][e.b] += w;
        acc[e.b][e.a] += w;
    }
    Adjacency adj(pb.nodes);
    for (std::size_t i = 0; i < pb.nodes; ++i) adj[i].assign(acc[i].begin(), acc[i].end());
    return adj;
}

class CutPursuit {
public:
    CutPursuit(const ChangeField& P, const GmpProblem& pb, const CutPursuitOptions& opts)
        : P_(P), pb_(pb), opts_(opts), adj_(build_adjacency(pb)) {
        const std::size_t n = P.size();
        node_stats_.resize(n);
        smoothed_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = smooth(P.p_change[i], pb.smoothing);
            smoothed_[i] = s;
            node_stats_[i] = {1.0, P.p_change[i], s, neg_entropy(s)};
        }
    }

    CutPursuitResult run();

private:
    void init_connected_components();
    void split();
    void merge();
    void relocate();
    double lookahead(double e);
    void canonicalize();
    double current_energy() const { return energy(P_, field(), pb_); }
    ChangeField field() const;
    double node_cost(std::uint32_t i, double candidate_smoothed) const {
        return binary_kl(smoothed_[i], candidate_smoothed);
    }
    Stats stats_of(const std::vector<std::uint32_t>& members) const {
        Stats s;
        for (std::uint32_t i : members) s.add(node_stats_[i]);
        return s;
    }

    const ChangeField& P_;
    const GmpProblem& pb_;
    CutPursuitOptions opts_;
    Adjacency adj_;
    std::vector<Stats> node_stats_;
    std::vector<double> smoothed_;

    std::vector<std::uint32_t> comp_;
    std::vector<std::vector<std::uint32_t>> members_;
    std::vector<double> value_;
    std::vector<std::uint8_t> visited_;
};

ChangeField CutPursuit::field() const {
    ChangeField q;
    q.p_change.resize(comp_.size());
    for (std::size_t i = 0; i < comp_.size(); ++i) q.p_change[i] = value_[comp_[i]];
    return q;
}

void CutPursuit::canonicalize() {
    std::vector<std::uint32_t> remap(members_.size(), UINT32_MAX);
    std::uint32_t next = 0;
    for (std::uint32_t& c : comp_) {
        if (remap[c] == UINT32_MAX) remap[c] = next++;
        c = remap[c];
    }
    members_.assign(next, {});
    for (std::uint32_t i = 0; i < comp_.size(); ++i) members_[comp_[i]].push_back(i);
    value_.resize(next);
    for (std::uint32_t c = 0; c < next; ++c) value_[c] = stats_of(members_[c]).value();
}

void CutPursuit::init_connected_components() {
    const std::size_t n = P_.size();
    comp_.assign(n, UINT32_MAX);
    std::uint32_t next = 0;
    for (std::uint32_t s = 0; s < n; ++s) {
        if (comp_[s] != UINT32_MAX) continue;
        std::vector<std::uint32_t> stack{s};
        comp_[s] = next;
        while (!stack.empty()) {
            const std::uint32_t i = stack.back();
            stack.pop_back();
            for (const auto& [j, w] : adj_[i]) {
                if (comp_[j] == UINT32_MAX) {
                    comp_[j] = next;
                    stack.push_back(j);
                }
            }
        }
        ++next;
    }
    members_.resize(next);
    canonicalize();
}

void CutPursuit::split() {
    const double lambda = pb_.lambda;
    const double eps = pb_.smoothing;
    std::vector<std::uint32_t> new_comp(comp_.size());
    std::vector<std::uint8_t> side(comp_.size(), 0);
    std::vector<std::uint8_t> best_side(comp_.size(), 0);
    std::uint32_t next = 0;

    for (std::uint32_t c = 0; c < members_.size(); ++c) {
        const std::vector<std::uint32_t>& mem = members_[c];
        double center[2] = {0.0, 0.0};

        auto recenter = [&]() {
            double sum[2] = {0.0, 0.0};
            double cnt[2] = {0.0, 0.0};
            for (std::uint32_t i : mem) {
                sum[side[i]] += P_.p_change[i];
                cnt[side[i]] += 1.0;
            }
            if (cnt[0] == 0.0 || cnt[1] == 0.0) return false;
            center[0] = sum[0] / cnt[0];
            center[1] = sum[1] / cnt[1];
            return true;
        };

        // Local relaxation of fidelity + lambda * cut edges inside the component,
        // starting from `side`. Returns the cost of the two-valued result.
        auto relax = [&]() {
            if (!recenter()) return std::numeric_limits<double>::infinity();
            for (int round = 0; round < 10; ++round) {
                const double sm[2] = {smooth(center[0], eps), smooth(center[1], eps)};
                bool round_changed = false;
                for (int sweep = 0; sweep < opts_.max_sweeps; ++sweep) {
                    bool changed = false;
                    for (std::uint32_t i : mem) {
                        double cost[2] = {node_cost(i, sm[0]), node_cost(i, sm[1])};
                        for (const auto& [j, w] : adj_[i]) {
                            if (comp_[j] != c) continue;
                            cost[1 - side[j]] += lambda * w;
                        }
                        if (cost[1 - side[i]] < cost[side[i]]) {
                            side[i] = static_cast<std::uint8_t>(1 - side[i]);
                            changed = true;
                        }
                    }
                    if (!changed) break;
                    round_changed = true;
                }
                if (!recenter()) return std::numeric_limits<double>::infinity();
                if (!round_changed) break;
            }
            const double sm[2] = {smooth(center[0], eps), smooth(center[1], eps)};
            double cost = 0.0;
            for (std::uint32_t i : mem) {
                cost += node_cost(i, sm[side[i]]);
                for (const auto& [j, w] : adj_[i]) {
                    if (comp_[j] == c && i < j && side[i] != side[j]) cost += lambda * w;
                }
            }
            return cost;
        };

        std::vector<double> sorted;
        sorted.reserve(mem.size());
        for (std::uint32_t i : mem) sorted.push_back(P_.p_change[i]);
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end(),
                                 [](double x, double y) { return !values_differ(x, y); }),
                     sorted.end());
        bool splittable = mem.size() > 1 && sorted.size() > 1;
        double best_cost = std::numeric_limits<double>::infinity();

        if (splittable) {
            // 2-means on the member distributions, assignment by fidelity.
            center[0] = sorted.front();
            center[1] = sorted.back();
            for (std::uint32_t i : mem) side[i] = 0;
            bool degenerate = false;
            for (int it = 0; it < 20; ++it) {
                bool changed = false;
                const double s0 = smooth(center[0], eps), s1 = smooth(center[1], eps);
                for (std::uint32_t i : mem) {
                    const std::uint8_t sd = node_cost(i, s1) < node_cost(i, s0) ? 1 : 0;
                    changed |= sd != side[i];
                    side[i] = sd;
                }
                if (!recenter()) {
                    degenerate = true;
                    break;
                }
                if (!changed && it > 0) break;
            }
            if (!degenerate) {
                best_cost = relax();
                for (std::uint32_t i : mem) best_side[i] = side[i];
            }
            // Threshold starts at quantiles of the member values.
            const std::size_t cuts = sorted.size() - 1;
            const std::size_t tries = std::min<std::size_t>(cuts, kSplitStarts);
            for (std::size_t t = 0; t < tries; ++t) {
                const std::size_t k = tries == cuts ? t : (t * cuts) / tries;
                const double thr = 0.5 * (sorted[k] + sorted[k + 1]);
                for (std::uint32_t i : mem) side[i] = P_.p_change[i] > thr ? 1 : 0;
                const double cost = relax();
                if (cost < best_cost && (!std::isfinite(best_cost) || cost < best_cost - energy_tol(best_cost))) {
                    best_cost = cost;
                    for (std::uint32_t i : mem) best_side[i] = side[i];
                }
            }
            const double whole = stats_of(mem).fidelity();
            splittable = std::isfinite(best_cost) && best_cost < whole - energy_tol(whole);
            for (std::uint32_t i : mem) side[i] = best_side[i];
        }

        if (!splittable) {
            for (std::uint32_t i : mem) new_comp[i] = next;
            ++next;
            continue;
        }
        // Connected pieces of each side become components.
        for (std::uint32_t i : mem) visited_[i] = 0;
        for (std::uint32_t start : mem) {
            if (visited_[start]) continue;
            std::vector<std::uint32_t> stack{start};
            visited_[start] = 1;
            while (!stack.empty()) {
                const std::uint32_t i = stack.back();
                stack.pop_back();
                new_comp[i] = next;
                for (const auto& [j, w] : adj_[i]) {
                    if (comp_[j] == c && !visited_[j] && side[j] == side[start]) {
                        visited_[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
            ++next;
        }
    }
    comp_ = std::move(new_comp);
    members_.assign(next, {});
    canonicalize();
}

void CutPursuit::merge() {
    const double lambda = pb_.lambda;
    const std::size_t k = members_.size();
    std::vector<Stats> stats(k);
    std::vector<bool> alive(k, true);
    for (std::uint32_t c = 0; c < k; ++c) stats[c] = stats_of(members_[c]);
    std::vector<std::map<std::uint32_t, double>> link(k);
    for (std::uint32_t i = 0; i < comp_.size(); ++i) {
        for (const auto& [j, w] : adj_[i]) {
            if (i < j && comp_[i] != comp_[j]) {
                link[comp_[i]][comp_[j]] += w;
                link[comp_[j]][comp_[i]] += w;
            }
        }
    }
    std::vector<std::uint32_t> parent(k);
    for (std::uint32_t c = 0; c < k; ++c) parent[c] = c;

    auto delta = [&](std::uint32_t a, std::uint32_t b) {
        Stats ab = stats[a];
        ab.add(stats[b]);
        const double va = stats[a].value(), vb = stats[b].value(), vab = ab.value();
        double d_pen = values_differ(va, vb) ? -link[a].at(b) : 0.0;
        auto third = [&](std::uint32_t self, std::uint32_t other, double v_self) {
            for (const auto& [c, w] : link[self]) {
                if (c == other) continue;
                const double vc = stats[c].value();
                d_pen += w * ((values_differ(vab, vc) ? 1.0 : 0.0) - (values_differ(v_self, vc) ? 1.0 : 0.0));
            }
        };
        third(a, b, va);
        third(b, a, vb);
        return ab.fidelity() - stats[a].fidelity() - stats[b].fidelity() + lambda * d_pen;
    };
    auto acceptable = [&](double d, std::uint32_t a, std::uint32_t b) {
        return d < -energy_tol(0.0) || (d <= energy_tol(0.0) && !values_differ(stats[a].value(), stats[b].value()));
    };

    using Entry = std::tuple<double, std::uint32_t, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    for (std::uint32_t a = 0; a < k; ++a) {
        for (const auto& [b, w] : link[a]) {
            if (a < b) queue.emplace(delta(a, b), a, b);
        }
    }
    while (!queue.empty()) {
        const auto [d, a, b] = queue.top();
        queue.pop();
        if (!alive[a] || !alive[b] || !link[a].count(b)) continue;
        const double now = delta(a, b);
        if (std::abs(now - d) > 1e-15) {
            queue.emplace(now, a, b);
            continue;
        }
        if (!acceptable(now, a, b)) continue;
        // Merge b into a.
        stats[a].add(stats[b]);
        alive[b] = false;
        parent[b] = a;
        link[a].erase(b);
        for (const auto& [c, w] : link[b]) {
            if (c == a) continue;
            link[a][c] += w;
            link[c].erase(b);
            link[c][a] += w;
        }
        link[b].clear();
        for (const auto& [c, w] : link[a]) {
            queue.emplace(delta(std::min(a, c), std::max(a, c)), std::min(a, c), std::max(a, c));
        }
    }
    auto find = [&](std::uint32_t c) {
        while (parent[c] != c) c = parent[c];
        return c;
    };
    for (std::uint32_t& c : comp_) c = find(c);
    canonicalize();
}

// Greedy single-node moves to an adjacent component or a fresh singleton.
void CutPursuit::relocate() {
    const double lambda = pb_.lambda;
    std::vector<Stats> stats(members_.size());
    std::vector<std::size_t> size(members_.size());
    for (std::uint32_t c = 0; c < members_.size(); ++c) {
        stats[c] = stats_of(members_[c]);
        size[c] = members_[c].size();
    }
    std::map<std::uint32_t, double> to;
    for (int sweep = 0; sweep < opts_.max_sweeps; ++sweep) {
        bool moved = false;
        for (std::uint32_t i = 0; i < comp_.size(); ++i) {
            const std::uint32_t c = comp_[i];
            if (size[c] < 2) continue;
            to.clear();
            for (const auto& [j, w] : adj_[i]) to[comp_[j]] += w;
            const double w_own = to.count(c) ? to[c] : 0.0;
            Stats rest = stats[c];
            rest.remove(node_stats_[i]);
            const double base = rest.fidelity() - stats[c].fidelity();
            double best = base + lambda * w_own;  // fresh singleton, zero fidelity
            std::uint32_t target = UINT32_MAX;
            for (const auto& [d, w] : to) {
                if (d == c) continue;
                Stats grown = stats[d];
                grown.add(node_stats_[i]);
                const double delta = base + grown.fidelity() - stats[d].fidelity() + lambda * (w_own - w);
                if (delta < best) {
                    best = delta;
                    target = d;
                }
            }
            if (!(best < -energy_tol(0.0))) continue;
            if (target == UINT32_MAX) {
                target = static_cast<std::uint32_t>(stats.size());
                stats.emplace_back();
                size.push_back(0);
            }
            stats[c] = rest;
            --size[c];
            stats[target].add(node_stats_[i]);
            ++size[target];
            comp_[i] = target;
            moved = true;
        }
        if (!moved) break;
    }
    members_.assign(stats.size(), {});
    canonicalize();
}

// Merge each adjacent pair outright, re-run relocation and merging, and keep
// the first result that lowers the energy. Repeats until a pass finds nothing.
double CutPursuit::lookahead(double e) {
    for (int pass = 0; pass < opts_.max_outer_iters; ++pass) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (std::uint32_t i = 0; i < comp_.size(); ++i) {
            for (const auto& [j, w] : adj_[i]) {
                if (comp_[i] < comp_[j]) pairs.emplace_back(comp_[i], comp_[j]);
            }
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        if (pairs.size() > kLookaheadPairs) return e;
        bool improved = false;
        const auto saved = comp_;
        for (const auto& [a, b] : pairs) {
            for (std::uint32_t& c : comp_) {
                if (c == b) c = a;
            }
            members_.assign(comp_.size(), {});
            canonicalize();
            relocate();
            merge();
            const double e_new = current_energy();
            if (e_new < e - energy_tol(e)) {
                e = e_new;
                improved = true;
                break;
            }
            comp_ = saved;
            members_.assign(comp_.size(), {});
            canonicalize();
        }
        if (!improved) break;
    }
    return e;
}

CutPursuitResult CutPursuit::run() {
    visited_.assign(P_.size(), 0);
    init_connected_components();
    double e = current_energy();
    CutPursuitResult res;
    res.energy_history.push_back(e);
    for (int it = 0; it < opts_.max_outer_iters; ++it) {
        const auto saved_comp = comp_;
        const auto saved_members = members_;
        const auto saved_value = value_;
        split();
        merge();
        relocate();
        merge();
        const double e_new = current_energy();
        if (e_new > e + energy_tol(e)) {
            comp_ = saved_comp;
            members_ = saved_members;
            value_ = saved_value;
            break;
        }
        if (comp_ == saved_comp) break;
        res.energy_history.push_back(e_new);
        const bool improved = e_new < e - energy_tol(e);
        e = e_new;
        if (!improved) break;
    }
    {
        const double e_look = lookahead(e);
        if (e_look < e) {
            e = e_look;
            res.energy_history.push_back(e);
        }
    }
    // Second descent from the all-singleton partition (Q = P); adopted only if lower.
    {
        const auto saved_comp = comp_;
        comp_.resize(P_.size());
        for (std::uint32_t i = 0; i < comp_.size(); ++i) comp_[i] = i;
        members_.assign(P_.size(), {});
        canonicalize();
        for (int it = 0; it < opts_.max_outer_iters; ++it) {
            const auto before = comp_;
            merge();
            relocate();
            if (comp_ == before) break;
        }
        const double e_alt = current_energy();
        if (e_alt < e - energy_tol(e)) {
            e = e_alt;
            res.energy_history.push_back(e);
        } else {
            comp_ = saved_comp;
            members_.assign(P_.size(), {});
            canonicalize();
        }
    }
    res.q = field();
    res.partition.component = comp_;
    res.partition.value = value_;
    res.energy = e;
    return res;
}

}  // namespace

void ChangeField::validate() const {
    for (double p : p_change) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("change field: probability outside [0,1]");
    }
}

void GmpProblem::validate() const {
    for (const GmpEdge& e : edges) {
        if (e.a >= nodes || e.b >= nodes) throw ValidationError("gmp problem: edge endpoint out of range");
        if (!(e.weight >= 0.0)) throw ValidationError("gmp problem: negative edge weight");
    }
    if (!(lambda >= 0.0)) throw ValidationError("gmp problem: lambda must be >= 0");
    if (!(edge_weight >= 0.0)) throw ValidationError("gmp problem: edge weight must be >= 0");
    if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValidationError("gmp problem: smoothing must be in [0,1)");
}

GmpProblem GmpProblem::from_edge_weights(std::size_t nodes, const EdgeWeights& weights, double lambda,
                                         double edge_weight, double smoothing) {
    GmpProblem pb;
    pb.nodes = nodes;
    pb.lambda = lambda;
    pb.edge_weight = edge_weight;
    pb.smoothing = smoothing;
    for (std::size_t e = 0; e < weights.edges.size(); ++e) {
        if (weights.weights[e] > 0.0) pb.edges.push_back({weights.edges[e].first, weights.edges[e].second, weights.weights[e]});
    }
    pb.validate();
    return pb;
}

ChangeField Partition::field() const {
    ChangeField f;
    f.p_change.reserve(component.size());
    for (std::uint32_t c : component) f.p_change.push_back(value.at(c));
    return f;
}

ChangeField init_labeling(std::size_t nodes, std::span<const std::uint32_t> changed, double p_seed, double p_other) {
    if (!(p_seed >= 0.0 && p_seed <= 1.0) || !(p_other >= 0.0 && p_other <= 1.0)) {
        throw ValidationError("init_labeling: probabilities must lie in [0,1]");
    }
    ChangeField f;
    f.p_change.assign(nodes, p_other);
    for (std::uint32_t c : changed) {
        if (c >= nodes) throw ValidationError("init_labeling: node id out of range");
        f.p_change[c] = p_seed;
    }
    return f;
}

double smooth(double p, double eps) { return (1.0 - eps) * p + 0.5 * eps; }

double binary_kl(double p, double q) {
    double out = 0.0;
    if (p > 0.0) out += p * std::log(p / q);
    if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return out;
}

double fidelity(const ChangeField& P, const ChangeField& Q, double smoothing) {
    if (P.size() != Q.size()) throw ValidationError("fidelity: fields differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        sum += binary_kl(smooth(P.p_change[i], smoothing), smooth(Q.p_change[i], smoothing));
    }
    return sum;
}

double penalty(const ChangeField& Q, const GmpProblem& problem) {
    double sum = 0.0;
    for (const GmpEdge& e : problem.edges) {
        if (values_differ(Q.p_change.at(e.a), Q.p_change.at(e.b))) sum += problem.edge_weight * e.weight;
    }
    return sum;
}

double energy(const ChangeField& P, const ChangeField& Q, const GmpProblem& problem) {
    return fidelity(P, Q, problem.smoothing) + problem.lambda * penalty(Q, problem);
}

CutPursuitResult cut_pursuit(const ChangeField& P, const GmpProblem& problem, const CutPursuitOptions& opts) {
    problem.validate();
    P.validate();
    if (P.size() != problem.nodes) throw ValidationError("cut_pursuit: field size does not match the graph");
    if (P.size() == 0) return {};
    CutPursuit cp(P, problem, opts);
    return cp.run();
}

BruteForceResult brute_force_gmp(const ChangeField& P, const GmpProblem& problem) {
    problem.validate();
    const std::size_t n = P.size();
    if (n != problem.nodes) throw ValidationError("brute_force_gmp: field size does not match the graph");
    if (n > kBruteForceMaxNodes) {
        throw ValidationError("brute_force_gmp: " + std::to_string(n) + " nodes exceeds the limit of " +
                              std::to_string(kBruteForceMaxNodes));
    }
    BruteForceResult best;
    if (n == 0) return best;

    std::vector<Stats> node(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = smooth(P.p_change[i], problem.smoothing);
        node[i] = {1.0, P.p_change[i], s, neg_entropy(s)};
    }
    std::vector<std::uint32_t> a(n, 0);      // restricted growth string
    std::vector<std::uint32_t> prefix_max(n, 0);
    std::vector<Stats> blocks(n);
    std::vector<double> values(n);
    double best_e = std::numeric_limits<double>::infinity();
    std::size_t best_k = n + 1;

    while (true) {
        const std::size_t k = prefix_max[n - 1] + 1;
        std::fill(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(k), Stats{});
        for (std::size_t i = 0; i < n; ++i) blocks[a[i]].add(node[i]);
        double e = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            values[b] = blocks[b].value();
            e += blocks[b].fidelity();
        }
        double pen = 0.0;
        for (const GmpEdge& edge : problem.edges) {
            if (values_differ(values[a[edge.a]], values[a[edge.b]])) pen += problem.edge_weight * edge.weight;
        }
        e += problem.lambda * pen;
        const double tol = energy_tol(std::isfinite(best_e) ? best_e : e);
        if (e < best_e - tol || (std::abs(e - best_e) <= tol && k < best_k)) {
            best_e = e;
            best_k = k;
            best.partition.component = a;
            best.partition.value.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
        }
        // Next restricted growth string.
        std::size_t i = n - 1;
        while (i > 0 && a[i] > prefix_max[i - 1]) --i;
        if (i == 0) break;
        ++a[i];
        prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            a[j] = 0;
            prefix_max[j] = prefix_max[j - 1];
        }
    }
    best.energy = energy(P, best.partition.field(), problem);
    return best;
}

std::vector<std::uint8_t> extract_labels(const ChangeField& Q) {
    std::vector<std::uint8_t> out(Q.size(), 0);
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const auto [change, keep] = Q.at(i);
        out[i] = change > keep ? 1 : 0;
    }
    return out;
}

}  // namespace scd
