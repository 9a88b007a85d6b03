#pragma once

#include "smfg/grid.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace smfg {

/// Tolerance for CDF comparisons throughout the lattice code.
inline constexpr double kCdfTol = 1e-12;

/// Probability measure supported on a shared StateGrid, stored as weights
/// with a cached CDF. Weights are renormalized at construction so the total
/// mass is 1 up to machine precision.
class DiscreteMeasure {
public:
    DiscreteMeasure(std::shared_ptr<const StateGrid> grid, std::vector<double> weights);

    /// Build from a CDF sampled at the grid nodes (nondecreasing, last entry 1).
    static DiscreteMeasure from_cdf(std::shared_ptr<const StateGrid> grid,
                                    const std::vector<double>& cdf);

    /// Point mass at value x, split between the two bracketing nodes so the
    /// mean is preserved exactly; mass outside the grid goes to the edge node.
    static DiscreteMeasure point_mass(std::shared_ptr<const StateGrid> grid, double x);

    const StateGrid& grid() const { return *grid_; }
    std::shared_ptr<const StateGrid> grid_ptr() const { return grid_; }
    std::size_t size() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cdf() const { return cdf_; }

    double mean() const;
    double variance() const;
    /// Exact grid sum of phi against the weights.
    double integrate(const std::function<double(double)>& phi) const;
    /// Mass on nodes with x >= threshold.
    double upper_mass(double threshold) const;

private:
    std::shared_ptr<const StateGrid> grid_;
    std::vector<double> weights_;
    std::vector<double> cdf_;
};

/// mu <= nu in first-order stochastic dominance: the CDF of mu lies above
/// the CDF of nu at every node (nu dominates mu).
bool stoch_leq(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol = kCdfTol);

/// Largest violation of stoch_leq(mu, nu): max over nodes of cdf_nu - cdf_mu, clamped at 0.
double stoch_leq_violation(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Lattice operations: the meet has CDF = pointwise max of the operands' CDFs,
/// the join has CDF = pointwise min.
DiscreteMeasure meet(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
DiscreteMeasure join(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

DiscreteMeasure family_sup(const std::vector<DiscreteMeasure>& family);
DiscreteMeasure family_inf(const std::vector<DiscreteMeasure>& family);

/// Sup-norm distance between the CDFs.
double kolmogorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct EnvelopeBounds {
    DiscreteMeasure mu_min;
    DiscreteMeasure mu_max;
};

/// Extremal measures from a uniform moment bound E[psi(|X|)] <= C:
///   mu_min CDF(s) = min(C/psi(-s), 1),  mu_max CDF(s) = max(1 - C/psi(s), 0),
/// with psi extended by psi(s) = psi(0) for s < 0, projected onto the grid
/// with out-of-range mass clamped to the boundary nodes. Requires C >= psi(0).
EnvelopeBounds envelope_bounds(double c, const std::function<double(double)>& psi,
                               std::shared_ptr<const StateGrid> grid);

/// Time-indexed flow of measures on one shared grid, one measure per time node.
class MeasureFlow {
public:
    MeasureFlow(TimeGrid time, std::vector<DiscreteMeasure> measures);

    /// Flow equal to `at` from t_1 on, with `initial` pinned at t_0.
    static MeasureFlow constant_after_start(const TimeGrid& time,
                                            const DiscreteMeasure& initial,
                                            const DiscreteMeasure& at);

    const TimeGrid& time() const { return time_; }
    const StateGrid& grid() const { return measures_.front().grid(); }
    std::shared_ptr<const StateGrid> grid_ptr() const { return measures_.front().grid_ptr(); }
    std::size_t nodes() const { return measures_.size(); }
    const DiscreteMeasure& operator[](std::size_t k) const { return measures_[k]; }
    const std::vector<DiscreteMeasure>& measures() const { return measures_; }

    std::vector<double> means() const;

private:
    TimeGrid time_;
    std::vector<DiscreteMeasure> measures_;
};

bool flow_leq(const MeasureFlow& mu, const MeasureFlow& nu, double tol = kCdfTol);
double flow_leq_violation(const MeasureFlow& mu, const MeasureFlow& nu);
MeasureFlow flow_meet(const MeasureFlow& mu, const MeasureFlow& nu);
MeasureFlow flow_join(const MeasureFlow& mu, const MeasureFlow& nu);

/// Sup over time nodes of the Kolmogorov distance.
double flow_distance(const MeasureFlow& mu, const MeasureFlow& nu);

/// CSV with header "t_index,x,weight,cdf", one row per (time index, grid index).
void write_flow_csv(std::ostream& os, const MeasureFlow& flow);
void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu, std::size_t t_index = 0);
MeasureFlow read_flow_csv(std::istream& is, const TimeGrid& time);

} // namespace smfg
