#pragma once

#include "smfg/model.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace smfg {

enum class TieBreak { Lowest, Highest };

/// Value-equality margin for tie-breaking among minimizing controls.
inline constexpr double kTieTol = 1e-12;

struct CflError : std::runtime_error {
    CflError(std::string msg, double required_dt)
        : std::runtime_error(std::move(msg)), required_dt(required_dt) {}
    double required_dt;
};

/// Feedback control index per (time node k < N, state node i).
class Policy {
public:
    Policy(std::size_t steps, std::size_t states)
        : steps_(steps), states_(states), u_(steps * states, 0) {}
    std::size_t& at(std::size_t k, std::size_t i) { return u_[k * states_ + i]; }
    std::size_t at(std::size_t k, std::size_t i) const { return u_[k * states_ + i]; }
    std::size_t steps() const { return steps_; }
    std::size_t states() const { return states_; }
    bool operator==(const Policy&) const = default;

private:
    std::size_t steps_, states_;
    std::vector<std::size_t> u_;
};

/// Dynamic-programming value per (time node, state node).
class ValueFunction {
public:
    ValueFunction(std::size_t nodes, std::size_t states)
        : nodes_(nodes), states_(states), v_(nodes * states, 0.0) {}
    double& at(std::size_t k, std::size_t i) { return v_[k * states_ + i]; }
    double at(std::size_t k, std::size_t i) const { return v_[k * states_ + i]; }
    std::size_t nodes() const { return nodes_; }
    std::size_t states() const { return states_; }

private:
    std::size_t nodes_, states_;
    std::vector<double> v_;
};

/// One-step nearest-neighbor chain approximating the controlled SDE.
/// Transition from node i under control u at step k is (down, stay, up) onto
/// nodes i-1, i, i+1, built by the explicit upwind allocation
///   up   = (sigma_loc^2/2 + dx * b^+) dt / dx^2,
///   down = (sigma_loc^2/2 + dx * b^-) dt / dx^2,
/// with out-of-range mass folded into the boundary node. Construction fails
/// when the CFL bound dt * (sigma_loc^2/dx^2 + |b|/dx) <= 1 is violated.
class MarkovChainModel {
public:
    MarkovChainModel(std::shared_ptr<const StateGrid> grid, TimeGrid time, ControlSet controls);

    const StateGrid& grid() const { return *grid_; }
    std::shared_ptr<const StateGrid> grid_ptr() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    const ControlSet& controls() const { return controls_; }

    double prob_down(std::size_t k, std::size_t i, std::size_t u) const { return p_[idx(k, i, u) * 3]; }
    double prob_stay(std::size_t k, std::size_t i, std::size_t u) const { return p_[idx(k, i, u) * 3 + 1]; }
    double prob_up(std::size_t k, std::size_t i, std::size_t u) const { return p_[idx(k, i, u) * 3 + 2]; }
    double drift(std::size_t k, std::size_t i, std::size_t u) const { return b_[idx(k, i, u)]; }

    std::size_t states() const { return grid_->size(); }
    std::size_t steps() const { return time_.steps(); }

    friend MarkovChainModel build_chain(const Dynamics&, std::shared_ptr<const StateGrid>,
                                        const TimeGrid&, const ControlSet&,
                                        const std::optional<MeasureFlow>&);

private:
    std::size_t idx(std::size_t k, std::size_t i, std::size_t u) const {
        return (k * grid_->size() + i) * controls_.size() + u;
    }
    std::shared_ptr<const StateGrid> grid_;
    TimeGrid time_;
    ControlSet controls_;
    std::vector<double> p_; // (down, stay, up) triples
    std::vector<double> b_; // drifts, kept for tie-breaking
};

/// Mean-field dynamics read the drift shift m(mu_k) from the supplied flow;
/// plain dynamics ignore it.
MarkovChainModel build_chain(const Dynamics& dyn, std::shared_ptr<const StateGrid> grid,
                             const TimeGrid& time, const ControlSet& controls,
                             const std::optional<MeasureFlow>& mu = std::nullopt);

/// Largest dt for which the chain construction satisfies the CFL bound.
double cfl_required_dt(const Dynamics& dyn, const StateGrid& grid, const TimeGrid& time,
                       const ControlSet& controls, double extra_drift = 0.0);

struct BestResponse {
    ValueFunction value;
    Policy policy;
};

/// Backward recursion V_N = g(., mu_N),
///   V_k(x_i) = min_u [ (f(t_k, x_i, mu_k) + l(t_k, x_i, a_u)) dt + E V_{k+1} ].
/// Minimizers within kTieTol are resolved toward the smallest drift
/// (TieBreak::Lowest) or the largest (TieBreak::Highest).
BestResponse solve_best_response(const MarkovChainModel& chain, const CostModel& cost,
                                 const MeasureFlow& mu, TieBreak tie_break);

/// Law propagation under a fixed feedback policy.
MeasureFlow push_forward(const MarkovChainModel& chain, const Policy& policy,
                         const DiscreteMeasure& initial);

/// R(mu): the law flow of the optimally controlled state. Rebuilds the chain
/// for mean-field dynamics.
MeasureFlow best_response(const Dynamics& dyn, const CostModel& cost, const ControlSet& controls,
                          const MeasureFlow& mu, const DiscreteMeasure& initial,
                          TieBreak tie_break);

/// Exhaustive minimum over all feedback policies; testing oracle for the DP.
/// Rejects instances beyond N <= 3, M <= 5, K <= 3.
BestResponse brute_force_best_response(const MarkovChainModel& chain, const CostModel& cost,
                                       const MeasureFlow& mu, TieBreak tie_break);

/// CSV dump "k,i,x,value,control" (terminal row has an empty control field).
void write_value_policy_csv(std::ostream& os, const MarkovChainModel& chain,
                            const ValueFunction& value, const Policy& policy);

} // namespace smfg
