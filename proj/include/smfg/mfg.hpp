#pragma once

#include "smfg/chain.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace smfg {

/// Raised when an extremal learning run produces non-monotone iterates;
/// that breaks the hypotheses behind the whole procedure, so it is fatal.
struct MonotonicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IterationTrace {
    std::vector<MeasureFlow> flows;
    std::vector<double> residuals;  // distance(flow_n, flow_{n+1})
    std::vector<bool> monotone;     // order vs previous iterate held
    std::vector<double> costs;      // optimal J against each iterate
};

enum class SolutionKind { Minimal, Maximal, Interior };

struct MfgSolution {
    MeasureFlow flow;
    Policy policy;
    ValueFunction value;
    double residual = 0.0;
    SolutionKind kind = SolutionKind::Interior;
    bool converged = false;
    std::size_t iterations = 0;
};

struct MfgProblem {
    Dynamics dynamics;
    CostModel cost;
    ControlSet controls;
    DiscreteMeasure initial;
    TimeGrid time;

    std::shared_ptr<const StateGrid> grid() const { return initial.grid_ptr(); }
};

/// Extremal starting flows: the initial law at t_0 and the grid's extremal
/// point mass afterwards. On the truncated grid these are exactly the
/// envelope measures for the moment bound the grid itself enforces.
MeasureFlow inf_flow(const MfgProblem& problem);
MeasureFlow sup_flow(const MfgProblem& problem);

struct LearnResult {
    MfgSolution solution;
    IterationTrace trace;
};

/// Iterate R from inf L (tie-break Lowest); monotone nondecreasing iterates
/// converge to the minimal solution. Non-monotone steps throw
/// MonotonicityError; hitting max_iter returns the last iterate unconverged.
LearnResult learn_from_below(const MfgProblem& problem, double tol, std::size_t max_iter);
/// Mirror image from sup L with tie-break Highest.
LearnResult learn_from_above(const MfgProblem& problem, double tol, std::size_t max_iter);

struct LearnFromResult {
    std::optional<MfgSolution> solution; // empty when the start is not comparable to R(start)
    IterationTrace trace;
    std::string warning;
    std::size_t crossing_time = 0; // witness node when not comparable
};

/// Learning from an arbitrary start: proceeds monotonically when mu0 and
/// R(mu0) are comparable, otherwise reports the non-comparable pair.
LearnFromResult learn_from(const MfgProblem& problem, const MeasureFlow& mu0,
                           TieBreak tie_break, double tol, std::size_t max_iter);

/// sup over time of the Kolmogorov distance between mu and R(mu).
double residual(const MfgProblem& problem, const MeasureFlow& mu,
                TieBreak tie_break = TieBreak::Lowest);

/// J for a fixed feedback policy against the flow mu, computed exactly on the
/// chain from the pushed law.
double expected_cost(const MfgProblem& problem, const Policy& policy, const MeasureFlow& mu);

struct MonotonicityReport {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double worst_violation = 0.0;
    std::size_t worst_pair = 0;
    bool pass() const { return violations == 0; }
};

/// Checks flow_leq(R(mu), R(mu_bar)) on random comparable flow pairs.
MonotonicityReport verify_monotone_R(const MfgProblem& problem, std::size_t n_pairs,
                                     std::uint64_t seed, TieBreak tie_break = TieBreak::Lowest);

struct LatticeProbe {
    bool ordered = false;       // flow_leq(a, b)
    double meet_residual = 0.0; // residual of the pointwise meet of the two flows
    double join_residual = 0.0;
};

LatticeProbe lattice_probe(const MfgProblem& problem, const MfgSolution& sol_a,
                           const MfgSolution& sol_b);

/// CSV "iter,residual,monotone,cost".
void write_trace_csv(std::ostream& os, const IterationTrace& trace);

} // namespace smfg
