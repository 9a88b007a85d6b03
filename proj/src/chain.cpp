#include "smfg/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace smfg {

MarkovChainModel::MarkovChainModel(std::shared_ptr<const StateGrid> grid, TimeGrid time,
                                   ControlSet controls)
    : grid_(std::move(grid)), time_(time), controls_(std::move(controls)) {
    const std::size_t total = time_.steps() * grid_->size() * controls_.size();
    p_.assign(total * 3, 0.0);
    b_.assign(total, 0.0);
}

MarkovChainModel build_chain(const Dynamics& dyn, std::shared_ptr<const StateGrid> grid,
                             const TimeGrid& time, const ControlSet& controls,
                             const std::optional<MeasureFlow>& mu) {
    if (dyn.needs_measure() && !mu)
        throw std::invalid_argument("mean-field dynamics need a measure flow to build the chain");
    if (dyn.multiplicative_noise() && !(grid->x_min() > 0.0))
        throw std::invalid_argument("geometric dynamics require a positive state grid");
    if (mu && (!mu->grid().same_as(*grid) || !mu->time().same_as(time)))
        throw std::invalid_argument("measure flow grids do not match the chain grids");

    MarkovChainModel chain(grid, time, controls);
    const double dx = grid->dx();
    const double dt = time.dt();
    const std::size_t m = grid->size();
    const std::size_t nk = time.steps();
    const std::size_t nu = controls.size();

    for (std::size_t k = 0; k < nk; ++k) {
        const double t = time.t(k);
        const double shift = dyn.needs_measure() ? dyn.measure_shift((*mu)[k]) : 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = (*grid)[i];
            const double s2 = dyn.sigma_loc(x) * dyn.sigma_loc(x);
            for (std::size_t u = 0; u < nu; ++u) {
                const double b = dyn.drift(t, x, controls[u], shift);
                const double up = (0.5 * s2 + dx * std::max(b, 0.0)) * dt / (dx * dx);
                const double down = (0.5 * s2 + dx * std::max(-b, 0.0)) * dt / (dx * dx);
                const std::size_t base = ((k * m + i) * nu + u) * 3;
                chain.b_[(k * m + i) * nu + u] = b;
                if (up + down > 1.0 + 1e-12) {
                    const double required = (dx * dx) / (s2 + dx * std::abs(b));
                    std::ostringstream msg;
                    msg << "CFL condition violated at (k=" << k << ", i=" << i << ", u=" << u
                        << "): dt=" << dt << " exceeds required dt<=" << required;
                    throw CflError(msg.str(), required);
                }
                // Boundary rows fold the out-of-range move into the edge node.
                const double pd = (i == 0) ? 0.0 : down;
                const double pu = (i + 1 == m) ? 0.0 : up;
                chain.p_[base] = pd;
                chain.p_[base + 1] = 1.0 - pu - pd;
                chain.p_[base + 2] = pu;
            }
        }
    }
    return chain;
}

double cfl_required_dt(const Dynamics& dyn, const StateGrid& grid, const TimeGrid& time,
                       const ControlSet& controls, double extra_drift) {
    const double dx = grid.dx();
    double worst = 0.0;
    for (std::size_t k = 0; k < time.steps(); ++k) {
        const double t = time.t(k);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid[i];
            const double s2 = dyn.sigma_loc(x) * dyn.sigma_loc(x);
            for (std::size_t u = 0; u < controls.size(); ++u) {
                const double b = std::abs(dyn.drift(t, x, controls[u], 0.0)) + extra_drift;
                worst = std::max(worst, s2 / (dx * dx) + b / dx);
            }
        }
    }
    return worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();
}

namespace {

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    double drift = 0.0;
    std::size_t index = 0;
    bool valid = false;
};

/// Shared tie-break rule: best value wins; within kTieTol the extremal drift
/// wins; equal drifts fall back to the extremal control index.
bool prefer(const Candidate& challenger, const Candidate& incumbent, TieBreak tie) {
    if (!incumbent.valid) return true;
    if (challenger.value < incumbent.value - kTieTol) return true;
    if (challenger.value > incumbent.value + kTieTol) return false;
    if (tie == TieBreak::Lowest) {
        if (challenger.drift < incumbent.drift) return true;
        if (challenger.drift > incumbent.drift) return false;
        return challenger.index < incumbent.index;
    }
    if (challenger.drift > incumbent.drift) return true;
    if (challenger.drift < incumbent.drift) return false;
    return challenger.index > incumbent.index;
}

} // namespace

BestResponse solve_best_response(const MarkovChainModel& chain, const CostModel& cost,
                                 const MeasureFlow& mu, TieBreak tie_break) {
    if (!mu.grid().same_as(chain.grid()) || !mu.time().same_as(chain.time()))
        throw std::invalid_argument("measure flow grids do not match the chain grids");

    const std::size_t m = chain.states();
    const std::size_t nk = chain.steps();
    const std::size_t nu = chain.controls().size();
    const double dt = chain.time().dt();

    ValueFunction value(nk + 1, m);
    Policy policy(nk, m);

    for (std::size_t i = 0; i < m; ++i)
        value.at(nk, i) = cost.g(chain.grid()[i], mu[nk]);

    std::vector<double> fk(m);
    for (std::size_t kk = nk; kk-- > 0;) {
        const double t = chain.time().t(kk);
        for (std::size_t i = 0; i < m; ++i)
            fk[i] = cost.f(t, chain.grid()[i], mu[kk]);
        for (std::size_t i = 0; i < m; ++i) {
            const double x = chain.grid()[i];
            const double v_dn = value.at(kk + 1, i > 0 ? i - 1 : 0);
            const double v_st = value.at(kk + 1, i);
            const double v_up = value.at(kk + 1, i + 1 < m ? i + 1 : m - 1);
            Candidate best;
            for (std::size_t u = 0; u < nu; ++u) {
                const double cont = chain.prob_down(kk, i, u) * v_dn +
                                    chain.prob_stay(kk, i, u) * v_st +
                                    chain.prob_up(kk, i, u) * v_up;
                const double stage = (fk[i] + cost.l(t, x, chain.controls()[u])) * dt;
                Candidate cand{stage + cont, chain.drift(kk, i, u), u, true};
                if (prefer(cand, best, tie_break)) best = cand;
            }
            value.at(kk, i) = best.value;
            policy.at(kk, i) = best.index;
        }
    }
    return BestResponse{std::move(value), std::move(policy)};
}

MeasureFlow push_forward(const MarkovChainModel& chain, const Policy& policy,
                         const DiscreteMeasure& initial) {
    if (!initial.grid().same_as(chain.grid()))
        throw std::invalid_argument("initial law grid does not match the chain grid");
    const std::size_t m = chain.states();
    std::vector<DiscreteMeasure> flow;
    flow.reserve(chain.steps() + 1);
    flow.push_back(initial);

    std::vector<double> cur = initial.weights();
    std::vector<double> next(m);
    for (std::size_t k = 0; k < chain.steps(); ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = cur[i];
            if (w == 0.0) continue;
            const std::size_t u = policy.at(k, i);
            next[i > 0 ? i - 1 : 0] += w * chain.prob_down(k, i, u);
            next[i] += w * chain.prob_stay(k, i, u);
            next[i + 1 < m ? i + 1 : m - 1] += w * chain.prob_up(k, i, u);
        }
        flow.emplace_back(chain.grid_ptr(), next);
        cur = flow.back().weights();
    }
    return MeasureFlow(chain.time(), std::move(flow));
}

MeasureFlow best_response(const Dynamics& dyn, const CostModel& cost, const ControlSet& controls,
                          const MeasureFlow& mu, const DiscreteMeasure& initial,
                          TieBreak tie_break) {
    const auto chain = build_chain(dyn, mu.grid_ptr(), mu.time(), controls,
                                   dyn.needs_measure() ? std::optional<MeasureFlow>(mu)
                                                       : std::nullopt);
    const auto br = solve_best_response(chain, cost, mu, tie_break);
    return push_forward(chain, br.policy, initial);
}

BestResponse brute_force_best_response(const MarkovChainModel& chain, const CostModel& cost,
                                       const MeasureFlow& mu, TieBreak tie_break) {
    const std::size_t m = chain.states();
    const std::size_t nk = chain.steps();
    const std::size_t nu = chain.controls().size();
    if (nk > 3 || m > 5 || nu > 3)
        throw std::invalid_argument("brute-force oracle instance too large (needs N<=3, M<=5, K<=3)");

    const double dt = chain.time().dt();
    const std::size_t slots = nk * m;

    // Cost-to-go of one fixed policy at every (k, i), by backward recursion
    // without any minimization.
    std::vector<double> w((nk + 1) * m);
    auto eval = [&](const std::vector<std::size_t>& pi) {
        for (std::size_t i = 0; i < m; ++i)
            w[nk * m + i] = cost.g(chain.grid()[i], mu[nk]);
        for (std::size_t kk = nk; kk-- > 0;) {
            const double t = chain.time().t(kk);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t u = pi[kk * m + i];
                const double stage =
                    (cost.f(t, chain.grid()[i], mu[kk]) + cost.l(t, chain.grid()[i], chain.controls()[u])) * dt;
                const double cont = chain.prob_down(kk, i, u) * w[(kk + 1) * m + (i > 0 ? i - 1 : 0)] +
                                    chain.prob_stay(kk, i, u) * w[(kk + 1) * m + i] +
                                    chain.prob_up(kk, i, u) * w[(kk + 1) * m + (i + 1 < m ? i + 1 : m - 1)];
                w[kk * m + i] = stage + cont;
            }
        }
    };

    std::vector<Candidate> best(slots);
    std::vector<double> best_terminal(m);
    std::vector<std::size_t> pi(slots, 0);
    while (true) {
        eval(pi);
        for (std::size_t kk = 0; kk < nk; ++kk) {
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t s = kk * m + i;
                Candidate cand{w[s], chain.drift(kk, i, pi[s]), pi[s], true};
                if (prefer(cand, best[s], tie_break)) best[s] = cand;
            }
        }
        // odometer over policy slots
        std::size_t s = 0;
        while (s < slots) {
            if (++pi[s] < nu) break;
            pi[s] = 0;
            ++s;
        }
        if (s == slots) break;
    }

    ValueFunction value(nk + 1, m);
    Policy policy(nk, m);
    for (std::size_t i = 0; i < m; ++i)
        value.at(nk, i) = cost.g(chain.grid()[i], mu[nk]);
    for (std::size_t kk = 0; kk < nk; ++kk) {
        for (std::size_t i = 0; i < m; ++i) {
            value.at(kk, i) = best[kk * m + i].value;
            policy.at(kk, i) = best[kk * m + i].index;
        }
    }
    return BestResponse{std::move(value), std::move(policy)};
}

void write_value_policy_csv(std::ostream& os, const MarkovChainModel& chain,
                            const ValueFunction& value, const Policy& policy) {
    os << "k,i,x,value,control\n";
    char buf[160];
    for (std::size_t k = 0; k < value.nodes(); ++k) {
        for (std::size_t i = 0; i < value.states(); ++i) {
            if (k < policy.steps()) {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", k, i,
                              chain.grid()[i], value.at(k, i), chain.controls()[policy.at(k, i)]);
            } else {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,\n", k, i, chain.grid()[i],
                              value.at(k, i));
            }
            os << buf;
        }
    }
}

} // namespace smfg
