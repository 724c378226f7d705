#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "scd/gmp.hpp"

using namespace scd;

namespace {

ChangeField field(std::vector<double> p) { return ChangeField{std::move(p)}; }

GmpProblem problem(std::size_t n, std::vector<GmpEdge> edges, double lambda, double eps) {
    GmpProblem g;
    g.nodes = n;
    g.edges = std::move(edges);
    g.lambda = lambda;
    g.smoothing = eps;
    return g;
}

std::vector<oracle::Edge> oracle_edges(const GmpProblem& g) {
    std::vector<oracle::Edge> out;
    for (const auto& e : g.edges) out.push_back({e.a, e.b, e.weight * g.edge_weight});
    return out;
}

}  // namespace

TEST_CASE("smoothing and KL") {
    CHECK(smooth(1.0, 0.01) == doctest::Approx(0.995));
    CHECK(smooth(0.0, 0.01) == doctest::Approx(0.005));
    CHECK(binary_kl(0.3, 0.3) == 0.0);
    CHECK(binary_kl(0.8, 0.65) == doctest::Approx(oracle::kl(0.8, 0.65, 0.0)).epsilon(1e-12));
    CHECK(binary_kl(1.0, 0.5) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("energy examples") {
    const auto P = field({0.8, 0.5});
    const auto Q = field({0.65, 0.65});
    auto g = problem(2, {}, 1.0, 0.0);
    const double phi = oracle::kl(0.8, 0.65, 0) + oracle::kl(0.5, 0.65, 0);
    CHECK(phi == doctest::Approx(0.1013).epsilon(5e-4));
    CHECK(fidelity(P, Q, 0.0) == doctest::Approx(phi).epsilon(1e-12));
    CHECK(penalty(Q, g) == 0.0);
    CHECK(penalty(P, g) == 0.0);  // no edges

    g.edges = {{0, 1, 1.0}};
    g.lambda = 2.0;
    CHECK(energy(P, P, g) == doctest::Approx(2.0));  // Q = P, one cut edge
    CHECK(energy(P, Q, g) == doctest::Approx(phi).epsilon(1e-12));
    g.edge_weight = 3.0;
    CHECK(penalty(P, g) == doctest::Approx(3.0));
}

TEST_CASE("init labeling and label extraction") {
    const std::vector<std::uint32_t> changed{1};
    const auto f = init_labeling(3, changed);
    CHECK(f.at(1).first == doctest::Approx(0.8));
    CHECK(f.at(1).second == doctest::Approx(0.2));
    CHECK(f.at(0).first == doctest::Approx(0.5));
    CHECK(extract_labels(field({0.65, 0.5, 0.2})) == std::vector<std::uint8_t>{1, 0, 0});

    // p_seed = 1 stays finite through smoothing.
    const auto hard = init_labeling(2, changed, 1.0);
    CHECK(hard.at(1).first == 1.0);
    const auto g = problem(2, {}, 1.0, 0.01);
    const double e = energy(hard, field({0.5, 0.5}), g);
    CHECK(std::isfinite(e));
    CHECK(e == doctest::Approx(oracle::kl(1.0, 0.5, 0.01)).epsilon(1e-12));
    CHECK_THROWS_AS(field({1.2}).validate(), ValidationError);
}

TEST_CASE("argmax is invariant under monotone rescaling") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const double p = u(rng);
        const double a = std::pow(p, 3.0), b = std::pow(1 - p, 3.0);
        CHECK(extract_labels(field({p})) == extract_labels(field({a / (a + b)})));
    }
}

TEST_CASE("cut pursuit trivial cases") {
    const auto one = cut_pursuit(field({0.8}), problem(1, {}, 1.0, 0.01));
    CHECK(one.q.p_change == std::vector<double>{0.8});
    CHECK(one.partition.components() == 1);

    const auto P = field({0.8, 0.5, 0.5, 0.8, 0.3});
    auto g = problem(5, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}}, 0.0, 0.01);
    const auto r = cut_pursuit(P, g);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.q.p_change[i] == doctest::Approx(P.p_change[i]).epsilon(1e-12));
    CHECK(r.energy == doctest::Approx(0.0));

    // No edges: any lambda leaves Q = P.
    g.edges.clear();
    g.lambda = 5.0;
    const auto s = cut_pursuit(P, g);
    for (std::size_t i = 0; i < 5; ++i) CHECK(s.q.p_change[i] == doctest::Approx(P.p_change[i]).epsilon(1e-12));
}

TEST_CASE("two-node instance merges") {
    const auto P = field({0.8, 0.5});
    const auto g = problem(2, {{0, 1, 1}}, 1.0, 0.0);
    const auto r = cut_pursuit(P, g);
    CHECK(r.partition.components() == 1);
    CHECK(r.q.p_change[0] == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(r.q.p_change[1] == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(extract_labels(r.q) == std::vector<std::uint8_t>{1, 1});
    const auto bf = brute_force_gmp(P, g);
    const double ref = oracle::min_partition_energy(P.p_change, oracle_edges(g), 1.0, 0.0);
    CHECK(std::abs(bf.energy - ref) < 1e-9);
    CHECK(std::abs(r.energy - ref) < 1e-9);
    CHECK(bf.partition.components() == 1);
}

TEST_CASE("brute force limits") {
    const auto P = field({0.8, 0.5, 0.2, 0.9});
    // Huge lambda on a connected graph: one component at the mean.
    const auto g = problem(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}, 1e6, 0.01);
    const auto r = brute_force_gmp(P, g);
    CHECK(r.partition.components() == 1);
    CHECK(r.partition.value[0] == doctest::Approx(0.6).epsilon(1e-9));
    const auto z = brute_force_gmp(P, problem(4, g.edges, 0.0, 0.01));
    CHECK(z.energy == doctest::Approx(0.0));
    CHECK(z.partition.components() == 4);
    CHECK_THROWS_AS(brute_force_gmp(field(std::vector<double>(13, 0.5)), problem(13, {}, 1.0, 0.01)),
                    ValidationError);
}

TEST_CASE("random instances against the exhaustive oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int exact = 0, total = 0;
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 2 + rng() % 6;
        std::vector<double> p(n);
        for (auto& x : p) x = u(rng) < 0.4 ? 0.8 : u(rng);
        GmpProblem g;
        g.nodes = n;
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b)
                if (u(rng) < 0.5) g.edges.push_back({a, b, u(rng) < 0.7 ? 1.0 : 0.5});
        g.lambda = std::array<double, 4>{0.05, 0.2, 1, 5}[static_cast<std::size_t>(t % 4)];
        const auto P = field(p);
        const double ref = oracle::min_partition_energy(p, oracle_edges(g), g.lambda, g.smoothing);
        const auto bf = brute_force_gmp(P, g);
        CHECK(std::abs(bf.energy - ref) < 1e-9);
        const auto r = cut_pursuit(P, g);
        CHECK(r.energy >= ref - 1e-9);
        CHECK(r.energy == doctest::Approx(energy(P, r.q, g)).epsilon(1e-9));
        CHECK(r.energy <= r.energy_history.front() + 1e-12);
        for (std::size_t i = 1; i < r.energy_history.size(); ++i)
            CHECK(r.energy_history[i] <= r.energy_history[i - 1] + 1e-12);
        exact += std::abs(r.energy - ref) <= 1e-9 * std::max(1.0, ref);
        ++total;
    }
    CHECK(exact >= 0.9 * total);
}
