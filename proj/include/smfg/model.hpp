#pragma once

#include "smfg/measure.hpp"

#include <functional>
#include <string>
#include <vector>

namespace smfg {

/// Finite discretization of the compact control set U.
class ControlSet {
public:
    explicit ControlSet(std::vector<double> values);
    static ControlSet uniform(double a_min, double a_max, std::size_t count);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t u) const { return values_[u]; }
    const std::vector<double>& values() const { return values_; }
    double max_abs() const;

private:
    std::vector<double> values_;
};

enum class DynamicsKind { Affine, Geometric, GeometricMeanField, OuMeanField };

/// Controlled drift/volatility specification. Affine drifts are
/// c(t) + p(t) x + q(t) a with constant volatility; geometric variants carry
/// sigma * x volatility and require a positive grid; mean-field variants add
/// a bounded, dominance-monotone statistic m(mu) of the current measure.
class Dynamics {
public:
    using Coef = std::function<double(double)>;
    using DriftFn = std::function<double(double, double, double)>;
    using MeasureStat = std::function<double(const DiscreteMeasure&)>;

    static Dynamics affine(Coef c, Coef p, Coef q, double sigma);
    static Dynamics affine_const(double c, double p, double q, double sigma);
    static Dynamics geometric(DriftFn rate, double sigma);
    static Dynamics geometric_mean_field(MeasureStat m, double m_bound, double sigma);
    static Dynamics ou_mean_field(double kappa, MeasureStat m, double m_bound, double sigma);

    DynamicsKind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    bool needs_measure() const {
        return kind_ == DynamicsKind::GeometricMeanField || kind_ == DynamicsKind::OuMeanField;
    }
    bool multiplicative_noise() const {
        return kind_ == DynamicsKind::Geometric || kind_ == DynamicsKind::GeometricMeanField;
    }

    /// Drift value; m_val is m(mu_t) for mean-field variants, ignored otherwise.
    double drift(double t, double x, double a, double m_val = 0.0) const;
    double sigma_loc(double x) const { return multiplicative_noise() ? sigma_ * x : sigma_; }
    double measure_shift(const DiscreteMeasure& mu) const;
    double m_bound() const { return m_bound_; }

private:
    Dynamics() = default;
    DynamicsKind kind_ = DynamicsKind::Affine;
    double sigma_ = 0.0;
    Coef c_, p_, q_;
    DriftFn rate_;
    MeasureStat m_;
    double m_bound_ = 0.0;
    double kappa_ = 0.0;
};

/// Cost triple (f, l, g). The measure enters f and g only through grid sums,
/// so evaluation stays exact for discontinuous couplings like the threshold
/// terminal cost.
struct CostModel {
    std::function<double(double, double, const DiscreteMeasure&)> f;
    std::function<double(double, double, double)> l;
    std::function<double(double, const DiscreteMeasure&)> g;
    std::string name;
};

struct SubmodularityWitness {
    double t = 0.0;
    double x_low = 0.0;
    double x_high = 0.0;
    std::size_t pair_index = 0;
    std::string slot; // "f" or "g"
};

struct SubmodularityReport {
    std::size_t quadruples = 0;
    double max_violation = 0.0;
    SubmodularityWitness worst;
    double tolerance = 0.0;
    bool pass() const { return max_violation <= tolerance; }
};

/// Decreasing-differences check for f(t,.,.) at sampled times and for g:
///   phi(x_hi, mu_hi) - phi(x_lo, mu_hi) <= phi(x_hi, mu_lo) - phi(x_lo, mu_lo)
/// over all grid pairs x_lo < x_hi and every supplied comparable measure pair.
SubmodularityReport check_submodularity(const CostModel& cost, const StateGrid& grid,
                                        const TimeGrid& time,
                                        const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs,
                                        double tol);

struct LqParams {
    double c = 0.0;
    double p = 0.0;
    double q = 1.0;
    double n = 1.0;
    double m = 0.0;
    double m_hat = 0.0;
    double h = 0.0;
    double h_hat = 0.0;
};

struct LqModel {
    Dynamics dynamics;
    CostModel cost;
    LqParams params;
};

/// Linear-quadratic model: affine drift c + p x + q a with costs
///   f + l = n a^2 / 2 + (m x + m_hat <id,mu>)^2 / 2,
///   g = (h x + h_hat <id,mu>)^2 / 2.
/// Requires q > 0, n > 0 and the sign conditions m*m_hat <= 0, h*h_hat <= 0
/// (rejected otherwise: the costs would not have decreasing differences).
LqModel lq_model(const LqParams& params, double sigma);

/// f = 0, l = a^2/2, g = (x - 1_{[0,inf)}(<id,mu>))^2. Submodular but
/// discontinuous in the measure.
CostModel threshold_model();

/// Order-1 interaction: f(t,x,mu) = f_weight * int gamma(x,y) dmu(y) and
/// g likewise with g_weight; gamma must have decreasing differences in (x,y).
CostModel order1_model(std::function<double(double, double)> gamma,
                       double f_weight = 1.0, double g_weight = 1.0);

/// Random comparable measure pairs (meet/join of random measures), for
/// submodularity checks and monotonicity probes.
std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>
random_comparable_pairs(std::shared_ptr<const StateGrid> grid, std::size_t count,
                        std::uint64_t seed);

DiscreteMeasure random_measure(std::shared_ptr<const StateGrid> grid, std::uint64_t seed);

} // namespace smfg
