#include "smfg/mfg.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace smfg {

namespace {

MarkovChainModel chain_for(const MfgProblem& problem, const MeasureFlow& mu) {
    return build_chain(problem.dynamics, problem.grid(), problem.time, problem.controls,
                       problem.dynamics.needs_measure() ? std::optional<MeasureFlow>(mu)
                                                        : std::nullopt);
}

struct Response {
    MeasureFlow flow;
    BestResponse br;
    double cost;
};

Response respond(const MfgProblem& problem, const MeasureFlow& mu, TieBreak tie) {
    auto chain = chain_for(problem, mu);
    auto br = solve_best_response(chain, problem.cost, mu, tie);
    auto flow = push_forward(chain, br.policy, problem.initial);
    // Optimal cost against mu is the value integrated against the initial law.
    double j = 0.0;
    for (std::size_t i = 0; i < problem.initial.size(); ++i)
        j += problem.initial.weights()[i] * br.value.at(0, i);
    return Response{std::move(flow), std::move(br), j};
}

LearnResult learn_extremal(const MfgProblem& problem, double tol, std::size_t max_iter,
                           bool from_below) {
    const TieBreak tie = from_below ? TieBreak::Lowest : TieBreak::Highest;
    MeasureFlow cur = from_below ? inf_flow(problem) : sup_flow(problem);

    IterationTrace trace;
    trace.flows.push_back(cur);
    trace.monotone.push_back(true);

    for (std::size_t it = 0; it < max_iter; ++it) {
        Response r = respond(problem, cur, tie);
        const bool ordered = from_below ? flow_leq(cur, r.flow) : flow_leq(r.flow, cur);
        const double dist = flow_distance(cur, r.flow);
        trace.flows.push_back(r.flow);
        trace.residuals.push_back(dist);
        trace.monotone.push_back(ordered);
        trace.costs.push_back(r.cost);
        if (!ordered) {
            const double viol = from_below ? flow_leq_violation(cur, r.flow)
                                           : flow_leq_violation(r.flow, cur);
            std::ostringstream msg;
            msg << "monotone learning violated order at iteration " << it
                << " (max CDF violation " << viol
                << "); the model is not submodular or the scheme is broken";
            throw MonotonicityError(msg.str());
        }
        if (dist <= tol) {
            MfgSolution sol{cur, r.br.policy, r.br.value, dist,
                            from_below ? SolutionKind::Minimal : SolutionKind::Maximal, true,
                            it + 1};
            return LearnResult{std::move(sol), std::move(trace)};
        }
        cur = std::move(r.flow);
    }
    Response last = respond(problem, cur, tie);
    MfgSolution sol{cur, last.br.policy, last.br.value, flow_distance(cur, last.flow),
                    from_below ? SolutionKind::Minimal : SolutionKind::Maximal, false, max_iter};
    return LearnResult{std::move(sol), std::move(trace)};
}

} // namespace

MeasureFlow inf_flow(const MfgProblem& problem) {
    auto grid = problem.grid();
    auto bottom = DiscreteMeasure::point_mass(grid, grid->x_min());
    return MeasureFlow::constant_after_start(problem.time, problem.initial, bottom);
}

MeasureFlow sup_flow(const MfgProblem& problem) {
    auto grid = problem.grid();
    auto top = DiscreteMeasure::point_mass(grid, grid->x_max());
    return MeasureFlow::constant_after_start(problem.time, problem.initial, top);
}

LearnResult learn_from_below(const MfgProblem& problem, double tol, std::size_t max_iter) {
    return learn_extremal(problem, tol, max_iter, true);
}

LearnResult learn_from_above(const MfgProblem& problem, double tol, std::size_t max_iter) {
    return learn_extremal(problem, tol, max_iter, false);
}

LearnFromResult learn_from(const MfgProblem& problem, const MeasureFlow& mu0,
                           TieBreak tie_break, double tol, std::size_t max_iter) {
    LearnFromResult out;
    MeasureFlow cur = mu0;
    Response first = respond(problem, cur, tie_break);
    out.trace.flows.push_back(cur);
    out.trace.monotone.push_back(true);

    const bool upward = flow_leq(cur, first.flow);
    const bool downward = flow_leq(first.flow, cur);
    if (!upward && !downward) {
        // first node where the upward comparison already fails
        for (std::size_t k = 0; k < cur.nodes(); ++k) {
            if (!stoch_leq(cur[k], first.flow[k])) {
                out.crossing_time = k;
                break;
            }
        }
        out.warning = "start and its best response are not comparable; no convergence claim";
        out.trace.flows.push_back(first.flow);
        out.trace.residuals.push_back(flow_distance(cur, first.flow));
        out.trace.monotone.push_back(false);
        out.trace.costs.push_back(first.cost);
        return out;
    }

    Response r = std::move(first);
    for (std::size_t it = 0;; ++it) {
        const double dist = flow_distance(cur, r.flow);
        const bool ordered = upward ? flow_leq(cur, r.flow) : flow_leq(r.flow, cur);
        out.trace.flows.push_back(r.flow);
        out.trace.residuals.push_back(dist);
        out.trace.monotone.push_back(ordered);
        out.trace.costs.push_back(r.cost);
        if (!ordered)
            throw MonotonicityError("comparable-start iteration lost monotonicity");
        if (dist <= tol) {
            out.solution = MfgSolution{cur, r.br.policy, r.br.value, dist,
                                       SolutionKind::Interior, true, it + 1};
            return out;
        }
        if (it + 1 >= max_iter) {
            out.solution = MfgSolution{cur, r.br.policy, r.br.value, dist,
                                       SolutionKind::Interior, false, max_iter};
            out.warning = "max_iter reached before convergence";
            return out;
        }
        cur = std::move(r.flow);
        r = respond(problem, cur, tie_break);
    }
}

double residual(const MfgProblem& problem, const MeasureFlow& mu, TieBreak tie_break) {
    return flow_distance(mu, respond(problem, mu, tie_break).flow);
}

double expected_cost(const MfgProblem& problem, const Policy& policy, const MeasureFlow& mu) {
    auto chain = chain_for(problem, mu);
    auto pushed = push_forward(chain, policy, problem.initial);
    const double dt = problem.time.dt();
    double j = 0.0;
    for (std::size_t k = 0; k < chain.steps(); ++k) {
        const double t = problem.time.t(k);
        double stage = 0.0;
        for (std::size_t i = 0; i < chain.states(); ++i) {
            const double x = chain.grid()[i];
            stage += pushed[k].weights()[i] *
                     (problem.cost.f(t, x, mu[k]) + problem.cost.l(t, x, chain.controls()[policy.at(k, i)]));
        }
        j += stage * dt;
    }
    for (std::size_t i = 0; i < chain.states(); ++i)
        j += pushed[chain.steps()].weights()[i] * problem.cost.g(chain.grid()[i], mu[chain.steps()]);
    return j;
}

MonotonicityReport verify_monotone_R(const MfgProblem& problem, std::size_t n_pairs,
                                     std::uint64_t seed, TieBreak tie_break) {
    MonotonicityReport report;
    report.pairs = n_pairs;
    auto grid = problem.grid();
    for (std::size_t p = 0; p < n_pairs; ++p) {
        std::vector<DiscreteMeasure> lo_ms, hi_ms;
        lo_ms.push_back(problem.initial);
        hi_ms.push_back(problem.initial);
        for (std::size_t k = 1; k < problem.time.nodes(); ++k) {
            auto a = random_measure(grid, seed + 1000003 * p + 2 * k);
            auto b = random_measure(grid, seed + 1000003 * p + 2 * k + 1);
            lo_ms.push_back(meet(a, b));
            hi_ms.push_back(join(a, b));
        }
        MeasureFlow lo(problem.time, std::move(lo_ms));
        MeasureFlow hi(problem.time, std::move(hi_ms));
        auto r_lo = respond(problem, lo, tie_break).flow;
        auto r_hi = respond(problem, hi, tie_break).flow;
        if (!flow_leq(r_lo, r_hi)) {
            ++report.violations;
            const double viol = flow_leq_violation(r_lo, r_hi);
            if (viol > report.worst_violation) {
                report.worst_violation = viol;
                report.worst_pair = p;
            }
        }
    }
    return report;
}

LatticeProbe lattice_probe(const MfgProblem& problem, const MfgSolution& sol_a,
                           const MfgSolution& sol_b) {
    LatticeProbe probe;
    probe.ordered = flow_leq(sol_a.flow, sol_b.flow);
    probe.meet_residual = residual(problem, flow_meet(sol_a.flow, sol_b.flow));
    probe.join_residual = residual(problem, flow_join(sol_a.flow, sol_b.flow));
    return probe;
}

void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
    os << "iter,residual,monotone,cost\n";
    char buf[128];
    for (std::size_t n = 0; n < trace.residuals.size(); ++n) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%.17g\n", n, trace.residuals[n],
                      trace.monotone[n + 1] ? 1 : 0, trace.costs[n]);
        os << buf;
    }
}

} // namespace smfg
