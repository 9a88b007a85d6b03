#pragma once

#include "smfg/mfg.hpp"

#include <iosfwd>

namespace smfg {

/// Recombining binomial tree for the common noise. Level l has l+1 nodes;
/// node (l, j) carries value (2j - l) * sigma0 * sqrt(dt_b), the common-noise
/// contribution after j up-moves, with probability binom(l, j) / 2^l.
class ScenarioTree {
public:
    ScenarioTree(const TimeGrid& time, std::size_t depth, double sigma0);

    std::size_t depth() const { return depth_; }
    std::size_t levels() const { return depth_ + 1; }
    std::size_t nodes_at(std::size_t level) const { return level + 1; }
    std::size_t offset(std::size_t level) const { return level * (level + 1) / 2; }
    std::size_t total_nodes() const { return offset(depth_ + 1); }
    std::size_t steps_per_branch() const { return steps_per_branch_; }
    double dt_b() const { return dt_b_; }
    double increment() const { return increment_; } // sigma0 * sqrt(dt_b)
    double sigma0() const { return sigma0_; }

    double value(std::size_t level, std::size_t j) const {
        return (2.0 * static_cast<double>(j) - static_cast<double>(level)) * increment_;
    }
    double prob(std::size_t level, std::size_t j) const;

    bool same_as(const ScenarioTree& other) const {
        return depth_ == other.depth_ && std::abs(increment_ - other.increment_) <= 1e-15;
    }

private:
    std::size_t depth_;
    std::size_t steps_per_branch_;
    double dt_b_;
    double sigma0_;
    double increment_;
};

/// Scalar conditional mean per tree node: the discrete stand-in for an
/// F^B-progressively measurable process.
class ConditionalFlow {
public:
    ConditionalFlow(ScenarioTree tree, double fill = 0.0)
        : tree_(tree), values_(tree.total_nodes(), fill) {}

    const ScenarioTree& tree() const { return tree_; }
    double& at(std::size_t level, std::size_t j) { return values_[tree_.offset(level) + j]; }
    double at(std::size_t level, std::size_t j) const { return values_[tree_.offset(level) + j]; }
    const std::vector<double>& values() const { return values_; }

private:
    ScenarioTree tree_;
    std::vector<double> values_;
};

/// sup over nodes of |a - b|.
double cn_distance(const ConditionalFlow& a, const ConditionalFlow& b);
/// a <= b nodewise within tol.
bool cn_leq(const ConditionalFlow& a, const ConditionalFlow& b, double tol = kCdfTol);

struct CnModel {
    /// Bounded drift b(t, x, a); the declared bound is checked on the grid.
    std::function<double(double, double, double)> drift;
    double drift_bound = 0.0;
    /// Optional bounded increasing shift m(mu_val) added to the drift.
    std::function<double(double)> mean_shift;
    double shift_bound = 0.0;
    double sigma = 0.0;
    double sigma0 = 0.0;
};

/// Costs coupled through the scalar conditional mean.
struct CnCost {
    std::function<double(double, double, double)> f; // f(t, x, mu_val)
    std::function<double(double, double, double)> l; // l(t, x, a)
    std::function<double(double, double)> g;         // g(x, mu_val)
};

struct CnProblem {
    CnModel model;
    CnCost cost;
    ControlSet controls;
    DiscreteMeasure initial;
    TimeGrid time;
    std::size_t tree_depth = 8;

    ScenarioTree tree() const { return ScenarioTree(time, tree_depth, model.sigma0); }
};

/// Envelope bound |mu_node| <= |xi|_max + t ||b||_inf + 3 sigma sqrt(t) + |node value|,
/// the discrete version of the pathwise bound on |X_t|.
double cn_envelope(const CnProblem& problem, std::size_t level, std::size_t j);
ConditionalFlow cn_lower_start(const CnProblem& problem);
ConditionalFlow cn_upper_start(const CnProblem& problem);

/// R(mu): DP over the augmented (x-node, tree-node) state, then a forward
/// push; the output is the conditional mean of the state at each tree node.
/// The recombining node stands in for conditioning on the common noise path.
ConditionalFlow cn_best_response(const CnProblem& problem, const ConditionalFlow& mu,
                                 TieBreak tie_break);

double cn_residual(const CnProblem& problem, const ConditionalFlow& mu,
                   TieBreak tie_break = TieBreak::Lowest);

/// Max over levels of |sum_j prob * conditional mean - unconditional mean|
/// for R(mu); a consistency guard on the node-conditioning approximation.
double cn_tower_gap(const CnProblem& problem, const ConditionalFlow& mu,
                    TieBreak tie_break = TieBreak::Lowest);

struct CnTrace {
    std::vector<ConditionalFlow> flows;
    std::vector<double> residuals;
    std::vector<bool> monotone;
};

struct CnSolution {
    ConditionalFlow flow;
    double residual = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    SolutionKind kind = SolutionKind::Interior;
};

struct CnLearnResult {
    CnSolution solution;
    CnTrace trace;
};

CnLearnResult cn_learn_from_below(const CnProblem& problem, double tol, std::size_t max_iter);
CnLearnResult cn_learn_from_above(const CnProblem& problem, double tol, std::size_t max_iter);

/// Decreasing-differences spot check of f and g in (x, mu_val).
double cn_submodularity_violation(const CnProblem& problem, std::size_t samples,
                                  std::uint64_t seed);

/// CSV "level,node,B_value,prob,mu".
void write_conditional_flow_csv(std::ostream& os, const ConditionalFlow& flow);

} // namespace smfg
