#include <doctest.h>

#include "smfg/measure.hpp"
#include "smfg/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace smfg;

namespace {

std::shared_ptr<const StateGrid> grid01() { return std::make_shared<StateGrid>(0.0, 1.0, 2); }
std::shared_ptr<const StateGrid> grid012() { return std::make_shared<StateGrid>(0.0, 2.0, 3); }

DiscreteMeasure delta(std::shared_ptr<const StateGrid> g, std::size_t i) {
    std::vector<double> w(g->size(), 0.0);
    w[i] = 1.0;
    return DiscreteMeasure(std::move(g), std::move(w));
}

} // namespace

TEST_CASE("dominance on point masses and crossing CDFs") {
    auto g = grid01();
    auto d0 = delta(g, 0);
    auto d1 = delta(g, 1);
    CHECK(stoch_leq(d0, d1)); // point mass at the larger point dominates
    CHECK(!stoch_leq(d1, d0));
    CHECK(stoch_leq(d0, d0)); // reflexivity
    CHECK(stoch_leq(d1, d1));

    auto g3 = grid012();
    DiscreteMeasure mu(g3, {0.5, 0.0, 0.5});
    auto nu = delta(g3, 1);
    CHECK(!stoch_leq(mu, nu)); // CDFs cross: (.5,.5,1) vs (0,1,1)
    CHECK(!stoch_leq(nu, mu));
}

TEST_CASE("meet and join of comparable and crossing pairs") {
    auto g = grid01();
    auto d0 = delta(g, 0);
    auto d1 = delta(g, 1);
    CHECK(kolmogorov_distance(meet(d0, d1), d0) == 0.0);
    CHECK(kolmogorov_distance(join(d0, d1), d1) == 0.0);

    auto g3 = grid012();
    DiscreteMeasure mu(g3, {0.5, 0.0, 0.5});
    auto nu = delta(g3, 1);
    auto m = meet(mu, nu);
    auto j = join(mu, nu);
    // pointwise max/min of (.5,.5,1) and (0,1,1)
    CHECK(m.cdf()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.cdf()[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.cdf()[2] == 1.0);
    CHECK(j.cdf()[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(j.cdf()[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(j.cdf()[2] == 1.0);
    // weights are first differences: meet = (1/2, 1/2, 0), join = (0, 1/2, 1/2)
    CHECK(m.weights()[0] == doctest::Approx(0.5));
    CHECK(m.weights()[1] == doctest::Approx(0.5));
    CHECK(j.weights()[1] == doctest::Approx(0.5));
    CHECK(j.weights()[2] == doctest::Approx(0.5));

    auto any = random_measure(grid012(), 99);
    CHECK(kolmogorov_distance(meet(any, any), any) == 0.0); // idempotence
}

TEST_CASE("grid mismatch is rejected") {
    auto a = delta(grid01(), 0);
    auto b = delta(grid012(), 0);
    CHECK_THROWS_AS((void)stoch_leq(a, b), std::invalid_argument);
    CHECK_THROWS_AS((void)meet(a, b), std::invalid_argument);
    CHECK_THROWS_AS((void)kolmogorov_distance(a, b), std::invalid_argument);
}

TEST_CASE("lattice laws hold exactly on random pairs and triples") {
    auto g = std::make_shared<StateGrid>(-2.0, 2.0, 17);
    for (std::uint64_t s = 0; s < 300; ++s) {
        auto a = random_measure(g, 3 * s);
        auto b = random_measure(g, 3 * s + 1);
        auto c = random_measure(g, 3 * s + 2);
        CHECK(kolmogorov_distance(meet(a, b), meet(b, a)) <= kCdfTol);
        CHECK(kolmogorov_distance(join(a, b), join(b, a)) <= kCdfTol);
        CHECK(kolmogorov_distance(meet(a, meet(b, c)), meet(meet(a, b), c)) <= kCdfTol);
        CHECK(kolmogorov_distance(join(a, join(b, c)), join(join(a, b), c)) <= kCdfTol);
        CHECK(kolmogorov_distance(meet(a, a), a) <= kCdfTol);
        CHECK(kolmogorov_distance(join(a, a), a) <= kCdfTol);
        CHECK(kolmogorov_distance(meet(a, join(a, b)), a) <= kCdfTol);
        CHECK(kolmogorov_distance(join(a, meet(a, b)), a) <= kCdfTol);
        // dominance <=> meet/join consistency
        const bool leq = stoch_leq(a, b);
        CHECK(leq == (kolmogorov_distance(meet(a, b), a) <= kCdfTol));
        CHECK(leq == (kolmogorov_distance(join(a, b), b) <= kCdfTol));
        // meet below both, join above both
        CHECK(stoch_leq(meet(a, b), a));
        CHECK(stoch_leq(meet(a, b), b));
        CHECK(stoch_leq(a, join(a, b)));
        CHECK(stoch_leq(b, join(a, b)));
    }
}

TEST_CASE("dominance implies ordered integrals of nondecreasing step functions") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 21);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, g->size() - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t rep = 0; rep < 100; ++rep) {
        auto a = random_measure(g, 2000 + 2 * rep);
        auto b = random_measure(g, 2001 + 2 * rep);
        auto lo = meet(a, b);
        auto hi = join(a, b);
        for (std::size_t fi = 0; fi < 20; ++fi) {
            const std::size_t jumps = 1 + pick(rng) % 4;
            std::vector<double> phi(g->size(), 0.0);
            double levels = 0.0;
            std::vector<std::size_t> at(jumps);
            for (auto& v : at) v = pick(rng);
            for (std::size_t i = 0; i < g->size(); ++i) {
                for (auto v : at)
                    if (i == v) levels += unif(rng);
                phi[i] = levels;
            }
            double int_lo = 0.0, int_hi = 0.0;
            for (std::size_t i = 0; i < g->size(); ++i) {
                int_lo += phi[i] * lo.weights()[i];
                int_hi += phi[i] * hi.weights()[i];
            }
            CHECK(int_lo <= int_hi + 1e-10);
        }
    }
}

TEST_CASE("family sup and inf") {
    auto g = grid01();
    auto d0 = delta(g, 0);
    auto d1 = delta(g, 1);
    CHECK(kolmogorov_distance(family_sup({d0, d1}), d1) == 0.0);
    CHECK(kolmogorov_distance(family_inf({d0, d1}), d0) == 0.0);
    CHECK(kolmogorov_distance(family_sup({d0}), d0) == 0.0);
    CHECK_THROWS_AS((void)family_sup({}), std::invalid_argument);

    auto g3 = grid012();
    DiscreteMeasure mu(g3, {0.5, 0.0, 0.5});
    auto nu = delta(g3, 1);
    CHECK(kolmogorov_distance(family_sup({mu, nu}), join(mu, nu)) == 0.0);
    CHECK(kolmogorov_distance(family_inf({mu, nu}), meet(mu, nu)) == 0.0);

    // sup dominates every member, inf is dominated by every member
    auto gg = std::make_shared<StateGrid>(-1.0, 1.0, 9);
    std::vector<DiscreteMeasure> family;
    for (std::uint64_t s = 0; s < 6; ++s)
        family.push_back(random_measure(gg, 500 + s));
    auto sup = family_sup(family);
    auto inf = family_inf(family);
    for (const auto& m : family) {
        CHECK(stoch_leq(m, sup));
        CHECK(stoch_leq(inf, m));
    }
}

TEST_CASE("envelope bounds follow the moment-bound formula") {
    auto psi = [](double s) { return s * s; };
    auto g = std::make_shared<StateGrid>(-4.0, 4.0, 9); // nodes at integers
    auto env = envelope_bounds(4.0, psi, g);
    // C/psi(4) = 4/16 at s = -4
    CHECK(env.mu_min.cdf()[0] == doctest::Approx(0.25).epsilon(1e-14));
    // 1 - C/psi(2) = 0 at s = 2
    CHECK(env.mu_max.cdf()[6] == doctest::Approx(0.0).epsilon(1e-14));
    // psi(-s) = psi(0) <= C for s >= 0, so the min-envelope CDF is 1 there
    for (std::size_t j = 4; j < g->size(); ++j)
        CHECK(env.mu_min.cdf()[j] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(stoch_leq(env.mu_min, env.mu_max));

    CHECK_THROWS_AS((void)envelope_bounds(0.5, [](double s) { return 1.0 + s; }, g),
                    std::invalid_argument);

    // min-envelope below and max-envelope above whenever C >= psi(0)
    for (double c : {1.0, 2.0, 10.0}) {
        auto e = envelope_bounds(c, psi, g);
        CHECK(stoch_leq(e.mu_min, e.mu_max));
    }
}

TEST_CASE("kolmogorov distance") {
    auto g = grid01();
    auto d0 = delta(g, 0);
    auto d1 = delta(g, 1);
    CHECK(kolmogorov_distance(d0, d0) == 0.0);
    CHECK(kolmogorov_distance(d0, d1) == 1.0);
    DiscreteMeasure half(g, {0.5, 0.5});
    CHECK(kolmogorov_distance(half, d1) == doctest::Approx(0.5));
}

TEST_CASE("flow order, meet/join and distance") {
    auto g = grid01();
    auto d0 = delta(g, 0);
    auto d1 = delta(g, 1);
    TimeGrid time(1.0, 4);
    auto lo = MeasureFlow::constant_after_start(time, d0, d0);
    auto hi = MeasureFlow::constant_after_start(time, d0, d1);
    CHECK(flow_leq(lo, hi));
    CHECK(!flow_leq(hi, lo));
    CHECK(kolmogorov_distance(flow_meet(lo, lo)[2], lo[2]) == 0.0);
    CHECK(flow_distance(lo, hi) == 1.0);

    // order decided by the last node when flows differ only there
    std::vector<DiscreteMeasure> ms(hi.measures());
    ms.back() = d0;
    MeasureFlow almost(time, std::move(ms));
    CHECK(!flow_leq(hi, almost));
    CHECK(flow_leq(almost, hi));
}

TEST_CASE("point mass projection preserves the mean") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    auto on_node = DiscreteMeasure::point_mass(g, 0.5);
    CHECK(on_node.weights()[3] == 1.0);
    auto split = DiscreteMeasure::point_mass(g, 0.3);
    CHECK(split.mean() == doctest::Approx(0.3).epsilon(1e-14));
    auto clamped = DiscreteMeasure::point_mass(g, 5.0);
    CHECK(clamped.weights()[4] == 1.0);
}

TEST_CASE("flow csv round-trips exactly") {
    auto g = std::make_shared<StateGrid>(-1.5, 2.5, 11);
    TimeGrid time(0.5, 3);
    std::vector<DiscreteMeasure> ms;
    for (std::size_t k = 0; k < time.nodes(); ++k)
        ms.push_back(random_measure(g, 900 + k));
    MeasureFlow flow(time, std::move(ms));

    std::stringstream ss;
    write_flow_csv(ss, flow);
    auto back = read_flow_csv(ss, time);
    REQUIRE(back.nodes() == flow.nodes());
    for (std::size_t k = 0; k < flow.nodes(); ++k)
        for (std::size_t i = 0; i < g->size(); ++i)
            CHECK(back[k].weights()[i] == flow[k].weights()[i]);
}

TEST_CASE("state grid validation") {
    CHECK_THROWS_AS(StateGrid(0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid(1.0, 0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid(std::vector<double>{0.0, 0.5, 0.7}), std::invalid_argument);
    StateGrid ok(std::vector<double>{0.0, 0.5, 1.0});
    CHECK(ok.dx() == doctest::Approx(0.5));
    CHECK_THROWS_AS(TimeGrid(0.0, 3), std::invalid_argument);
}
