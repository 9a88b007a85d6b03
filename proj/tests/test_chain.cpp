#include <doctest.h>

#include "smfg/chain.hpp"

#include <cmath>
#include <random>

using namespace smfg;

namespace {

MeasureFlow zero_flow(std::shared_ptr<const StateGrid> g, const TimeGrid& time) {
    auto m = DiscreteMeasure::point_mass(g, (*g)[0]);
    return MeasureFlow::constant_after_start(time, m, m);
}

CostModel zero_cost() {
    CostModel c;
    c.f = [](double, double, const DiscreteMeasure&) { return 0.0; };
    c.l = [](double, double, double) { return 0.0; };
    c.g = [](double, const DiscreteMeasure&) { return 0.0; };
    return c;
}

} // namespace

TEST_CASE("degenerate chains take the predicted rows") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    TimeGrid time(1.0, 4);
    auto controls = ControlSet::uniform(0.0, 0.0, 1);

    SUBCASE("no drift, no noise: identity chain") {
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), g, time, controls);
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t i = 0; i < 5; ++i) {
                CHECK(chain.prob_stay(k, i, 0) == 1.0);
                CHECK(chain.prob_up(k, i, 0) == 0.0);
                CHECK(chain.prob_down(k, i, 0) == 0.0);
            }
    }

    SUBCASE("tight CFL pure diffusion: symmetric random walk") {
        // sigma^2 dt / dx^2 = 1 with dx = 1/2, dt = 1/4, sigma^2 = 1
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 1.0), g, time, controls);
        for (std::size_t i = 1; i + 1 < 5; ++i) {
            CHECK(chain.prob_up(0, i, 0) == doctest::Approx(0.5));
            CHECK(chain.prob_down(0, i, 0) == doctest::Approx(0.5));
            CHECK(chain.prob_stay(0, i, 0) == doctest::Approx(0.0));
        }
    }

    SUBCASE("unit drift with dt = dx: pure transport") {
        auto gg = std::make_shared<StateGrid>(0.0, 1.0, 5); // dx = 1/4 = dt
        auto unit = ControlSet::uniform(1.0, 1.0, 1);
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), gg, time, unit);
        for (std::size_t i = 0; i + 1 < 5; ++i) {
            CHECK(chain.prob_up(0, i, 0) == doctest::Approx(1.0));
            CHECK(chain.prob_stay(0, i, 0) == doctest::Approx(0.0));
        }
        CHECK(chain.prob_stay(0, 4, 0) == doctest::Approx(1.0)); // folded at the top
    }
}

TEST_CASE("CFL violation reports the required step") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 21); // dx = 0.1
    TimeGrid time(1.0, 10);                              // dt = 0.1 too coarse
    auto controls = ControlSet::uniform(0.0, 0.0, 1);
    try {
        (void)build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 1.0), g, time, controls);
        FAIL("expected CflError");
    } catch (const CflError& e) {
        CHECK(e.required_dt == doctest::Approx(0.01));
    }
    CHECK(cfl_required_dt(Dynamics::affine_const(0.0, 0.0, 1.0, 1.0), *g, time, controls) ==
          doctest::Approx(0.01));
}

TEST_CASE("rows are stochastic for a generic model") {
    auto g = std::make_shared<StateGrid>(-2.0, 2.0, 41);
    TimeGrid time(1.0, 80);
    auto controls = ControlSet::uniform(-1.0, 1.0, 5);
    auto chain = build_chain(Dynamics::affine_const(0.1, -0.3, 1.0, 0.35), g, time, controls);
    for (std::size_t k = 0; k < chain.steps(); k += 13)
        for (std::size_t i = 0; i < chain.states(); ++i)
            for (std::size_t u = 0; u < controls.size(); ++u) {
                const double sum = chain.prob_down(k, i, u) + chain.prob_stay(k, i, u) +
                                   chain.prob_up(k, i, u);
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(chain.prob_down(k, i, u) >= 0.0);
                CHECK(chain.prob_stay(k, i, u) >= -1e-15);
                CHECK(chain.prob_up(k, i, u) >= 0.0);
            }
}

TEST_CASE("mean-field variants need a flow and geometric needs a positive grid") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    TimeGrid time(1.0, 8);
    auto controls = ControlSet::uniform(0.0, 0.0, 1);
    auto mf = Dynamics::ou_mean_field(
        0.0, [](const DiscreteMeasure& mu) { return mu.mean(); }, 1.0, 0.2);
    CHECK_THROWS_AS((void)build_chain(mf, g, time, controls), std::invalid_argument);
    auto geo = Dynamics::geometric([](double, double, double) { return 0.1; }, 0.2);
    CHECK_THROWS_AS((void)build_chain(geo, g, time, controls), std::invalid_argument);
    auto gpos = std::make_shared<StateGrid>(0.5, 1.5, 5);
    CHECK_NOTHROW((void)build_chain(geo, gpos, TimeGrid(1.0, 40), controls));
}

TEST_CASE("hand-computed one-step instance") {
    // grid {-1, 0, 1}, T = dt = 1, controls {0, 1}, drift = a, sigma = 0,
    // l = a^2/2, g = x^2: V_0 = (1/2, 0, 1), policy = (1, 0, 0)
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 3);
    TimeGrid time(1.0, 1);
    auto controls = ControlSet::uniform(0.0, 1.0, 2);
    auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), g, time, controls);
    CostModel cost = zero_cost();
    cost.l = [](double, double, double a) { return 0.5 * a * a; };
    cost.g = [](double x, const DiscreteMeasure&) { return x * x; };
    auto mu = zero_flow(g, time);

    auto dp = solve_best_response(chain, cost, mu, TieBreak::Lowest);
    CHECK(dp.value.at(1, 0) == 1.0);
    CHECK(dp.value.at(1, 1) == 0.0);
    CHECK(dp.value.at(1, 2) == 1.0);
    CHECK(dp.value.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dp.value.at(0, 1) == 0.0);
    CHECK(dp.value.at(0, 2) == 1.0);
    CHECK(dp.policy.at(0, 0) == 1);
    CHECK(dp.policy.at(0, 1) == 0);
    CHECK(dp.policy.at(0, 2) == 0);

    auto bf = brute_force_best_response(chain, cost, mu, TieBreak::Lowest);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(dp.value.at(k, i) == doctest::Approx(bf.value.at(k, i)).epsilon(1e-15));
    CHECK(dp.policy == bf.policy);
}

TEST_CASE("zero costs leave the value at zero and pick extremal drift") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    TimeGrid time(1.0, 4);
    auto controls = ControlSet::uniform(-1.0, 1.0, 3);
    auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 0.5, 0.0), g, time, controls);
    auto mu = zero_flow(g, time);
    auto lo = solve_best_response(chain, zero_cost(), mu, TieBreak::Lowest);
    auto hi = solve_best_response(chain, zero_cost(), mu, TieBreak::Highest);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(lo.value.at(k, i) == 0.0);
            CHECK(lo.policy.at(k, i) == 0); // smallest drift control
            CHECK(hi.policy.at(k, i) == 2); // largest drift control
        }
}

TEST_CASE("single control policy is constant and value accumulates the cost") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    TimeGrid time(1.0, 4);
    auto controls = ControlSet::uniform(0.25, 0.25, 1);
    auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 0.0, 0.0), g, time, controls);
    CostModel cost = zero_cost();
    cost.l = [](double, double, double a) { return a; }; // 0.25 per unit time
    auto mu = zero_flow(g, time);
    auto dp = solve_best_response(chain, cost, mu, TieBreak::Lowest);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(dp.value.at(0, i) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("push forward reproduces the textbook spreads") {
    TimeGrid time(1.0, 2);
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 5);
    auto controls = ControlSet::uniform(0.0, 0.0, 1);

    SUBCASE("identity chain keeps the initial law") {
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), g, time, controls);
        Policy policy(2, 5);
        auto initial = DiscreteMeasure::point_mass(g, 0.5);
        auto flow = push_forward(chain, policy, initial);
        for (std::size_t k = 0; k <= 2; ++k)
            CHECK(kolmogorov_distance(flow[k], initial) == 0.0);
    }

    SUBCASE("unit drift moves the point mass one node per step") {
        auto gg = std::make_shared<StateGrid>(0.0, 2.0, 5); // dx = 0.5 = dt
        auto unit = ControlSet::uniform(1.0, 1.0, 1);
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), gg, time, unit);
        Policy policy(2, 5);
        auto flow = push_forward(chain, policy, DiscreteMeasure::point_mass(gg, 0.0));
        CHECK(flow[1].weights()[1] == 1.0);
        CHECK(flow[2].weights()[2] == 1.0);
    }

    SUBCASE("symmetric walk spreads binomially") {
        // sigma^2 dt / dx^2 = 1: dx = 0.5, dt = 0.5, sigma^2 = 0.5
        auto chain =
            build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, std::sqrt(0.5)), g, time, controls);
        Policy policy(2, 5);
        auto flow = push_forward(chain, policy, DiscreteMeasure::point_mass(g, 0.0));
        CHECK(flow[2].weights()[0] == doctest::Approx(0.25));
        CHECK(flow[2].weights()[2] == doctest::Approx(0.5));
        CHECK(flow[2].weights()[4] == doctest::Approx(0.25));
        CHECK(flow[2].weights()[1] == 0.0);
    }
}

TEST_CASE("deterministic characteristic is exact") {
    // sigma = 0, constant drift 1, dt = dx: the point mass rides the
    // characteristic without smearing
    auto g = std::make_shared<StateGrid>(0.0, 1.0, 11);
    TimeGrid time(1.0, 10);
    auto controls = ControlSet::uniform(1.0, 1.0, 1);
    auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 1.0, 0.0), g, time, controls);
    Policy policy(10, 11);
    auto flow = push_forward(chain, policy, DiscreteMeasure::point_mass(g, 0.0));
    for (std::size_t k = 0; k <= 10; ++k)
        for (std::size_t i = 0; i < 11; ++i)
            CHECK(flow[k].weights()[i] == (i == k ? 1.0 : 0.0));
}

TEST_CASE("pushed mass stays normalized over long horizons") {
    auto g = std::make_shared<StateGrid>(-2.0, 2.0, 41);
    TimeGrid time(2.0, 200);
    auto controls = ControlSet::uniform(-1.0, 1.0, 3);
    auto chain = build_chain(Dynamics::affine_const(0.0, -0.2, 1.0, 0.3), g, time, controls);
    std::mt19937_64 rng(5);
    Policy policy(200, 41);
    for (std::size_t k = 0; k < 200; ++k)
        for (std::size_t i = 0; i < 41; ++i)
            policy.at(k, i) = rng() % 3;
    auto flow = push_forward(chain, policy, DiscreteMeasure::point_mass(g, 0.0));
    for (std::size_t k = 0; k <= 200; ++k) {
        double total = 0.0;
        for (double w : flow[k].weights()) total += w;
        CHECK(std::abs(total - 1.0) <= 1e-10);
    }
}

TEST_CASE("DP equals brute force on randomized tiny instances") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t m = 2 + rng() % 4;  // 2..5
        const std::size_t nk = 1 + rng() % 3; // 1..3
        const std::size_t nu = 1 + rng() % 3; // 1..3
        auto g = std::make_shared<StateGrid>(-1.0, 1.0, m);
        TimeGrid time(0.5, nk);
        auto controls = ControlSet::uniform(-1.0, 1.0, nu);
        auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 0.5, 0.2), g, time, controls);

        // random smooth costs
        const double c1 = unif(rng), c2 = unif(rng), c3 = unif(rng);
        CostModel cost;
        cost.f = [c1](double t, double x, const DiscreteMeasure& mu) {
            return c1 * x * std::sin(3.0 * t) - 0.5 * x * mu.mean();
        };
        cost.l = [c2](double, double x, double a) { return 0.5 * a * a + c2 * a * x; };
        cost.g = [c3](double x, const DiscreteMeasure& mu) { return c3 * x * x + mu.mean() * x; };
        auto mu = zero_flow(g, time);

        for (auto tie : {TieBreak::Lowest, TieBreak::Highest}) {
            auto dp = solve_best_response(chain, cost, mu, tie);
            auto bf = brute_force_best_response(chain, cost, mu, tie);
            for (std::size_t k = 0; k <= nk; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    CHECK(std::abs(dp.value.at(k, i) - bf.value.at(k, i)) <= 1e-12);
            CHECK(dp.policy == bf.policy);
        }
    }
}

TEST_CASE("brute force rejects instances beyond its size bound") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 6);
    TimeGrid time(0.5, 2);
    auto controls = ControlSet::uniform(0.0, 1.0, 2);
    auto chain = build_chain(Dynamics::affine_const(0.0, 0.0, 0.5, 0.2), g, time, controls);
    auto mu = zero_flow(g, time);
    CHECK_THROWS_AS((void)brute_force_best_response(chain, zero_cost(), mu, TieBreak::Lowest),
                    std::invalid_argument);
}

TEST_CASE("best response ignores the flow when costs are decoupled") {
    auto g = std::make_shared<StateGrid>(-1.0, 1.0, 11);
    TimeGrid time(0.5, 20);
    auto controls = ControlSet::uniform(-1.0, 1.0, 3);
    auto dyn = Dynamics::affine_const(0.0, 0.0, 1.0, 0.3);
    CostModel cost = zero_cost();
    cost.l = [](double, double, double a) { return 0.5 * a * a; };
    cost.g = [](double x, const DiscreteMeasure&) { return x * x; };
    auto initial = DiscreteMeasure::point_mass(g, 0.5);

    auto flow_a = MeasureFlow::constant_after_start(time, initial,
                                                    DiscreteMeasure::point_mass(g, -1.0));
    auto flow_b = MeasureFlow::constant_after_start(time, initial,
                                                    DiscreteMeasure::point_mass(g, 1.0));
    auto ra = best_response(dyn, cost, controls, flow_a, initial, TieBreak::Lowest);
    auto rb = best_response(dyn, cost, controls, flow_b, initial, TieBreak::Lowest);
    CHECK(flow_distance(ra, rb) == 0.0);
    CHECK(kolmogorov_distance(ra[0], initial) == 0.0);
}

TEST_CASE("ordered flows push to ordered laws under submodular costs") {
    auto g = std::make_shared<StateGrid>(-2.0, 2.0, 21);
    TimeGrid time(1.0, 40);
    auto controls = ControlSet::uniform(-1.0, 1.0, 5);
    auto dyn = Dynamics::affine_const(0.0, 0.0, 1.0, 0.3);
    auto model = lq_model({0.0, 0.0, 1.0, 1.0, 1.0, -0.5, 1.0, -0.5}, 0.3);
    auto initial = DiscreteMeasure::point_mass(g, 0.0);

    for (std::uint64_t s = 0; s < 20; ++s) {
        std::vector<DiscreteMeasure> lo_ms{initial}, hi_ms{initial};
        for (std::size_t k = 1; k <= 40; ++k) {
            auto a = random_measure(g, 7000 + 100 * s + 2 * k);
            auto b = random_measure(g, 7001 + 100 * s + 2 * k);
            lo_ms.push_back(meet(a, b));
            hi_ms.push_back(join(a, b));
        }
        MeasureFlow lo(time, std::move(lo_ms));
        MeasureFlow hi(time, std::move(hi_ms));
        auto r_lo = best_response(dyn, model.cost, controls, lo, initial, TieBreak::Lowest);
        auto r_hi = best_response(dyn, model.cost, controls, hi, initial, TieBreak::Lowest);
        CHECK(flow_leq(r_lo, r_hi));
    }
}
