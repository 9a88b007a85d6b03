#include "smfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace smfg {

ControlSet::ControlSet(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty())
        throw std::invalid_argument("control set must be nonempty");
    for (std::size_t u = 1; u < values_.size(); ++u)
        if (!(values_[u] > values_[u - 1]))
            throw std::invalid_argument("control values must be strictly increasing");
}

ControlSet ControlSet::uniform(double a_min, double a_max, std::size_t count) {
    if (count == 1)
        return ControlSet({a_min});
    if (!(a_max > a_min))
        throw std::invalid_argument("control range requires a_max > a_min");
    std::vector<double> vals(count);
    for (std::size_t u = 0; u < count; ++u)
        vals[u] = a_min + (a_max - a_min) * static_cast<double>(u) / static_cast<double>(count - 1);
    return ControlSet(std::move(vals));
}

double ControlSet::max_abs() const {
    return std::max(std::abs(values_.front()), std::abs(values_.back()));
}

Dynamics Dynamics::affine(Coef c, Coef p, Coef q, double sigma) {
    Dynamics d;
    d.kind_ = DynamicsKind::Affine;
    d.c_ = std::move(c);
    d.p_ = std::move(p);
    d.q_ = std::move(q);
    d.sigma_ = sigma;
    return d;
}

Dynamics Dynamics::affine_const(double c, double p, double q, double sigma) {
    return affine([c](double) { return c; }, [p](double) { return p; },
                  [q](double) { return q; }, sigma);
}

Dynamics Dynamics::geometric(DriftFn rate, double sigma) {
    Dynamics d;
    d.kind_ = DynamicsKind::Geometric;
    d.rate_ = std::move(rate);
    d.sigma_ = sigma;
    return d;
}

Dynamics Dynamics::geometric_mean_field(MeasureStat m, double m_bound, double sigma) {
    Dynamics d;
    d.kind_ = DynamicsKind::GeometricMeanField;
    d.m_ = std::move(m);
    d.m_bound_ = m_bound;
    d.sigma_ = sigma;
    return d;
}

Dynamics Dynamics::ou_mean_field(double kappa, MeasureStat m, double m_bound, double sigma) {
    Dynamics d;
    d.kind_ = DynamicsKind::OuMeanField;
    d.kappa_ = kappa;
    d.m_ = std::move(m);
    d.m_bound_ = m_bound;
    d.sigma_ = sigma;
    return d;
}

double Dynamics::drift(double t, double x, double a, double m_val) const {
    switch (kind_) {
    case DynamicsKind::Affine:
        return c_(t) + p_(t) * x + q_(t) * a;
    case DynamicsKind::Geometric:
        return rate_(t, x, a) * x;
    case DynamicsKind::GeometricMeanField:
        return x * (a + m_val);
    case DynamicsKind::OuMeanField:
        return kappa_ * x + a + m_val;
    }
    return 0.0;
}

double Dynamics::measure_shift(const DiscreteMeasure& mu) const {
    if (!needs_measure()) return 0.0;
    const double v = m_(mu);
    if (std::abs(v) > m_bound_ + 1e-9)
        throw std::runtime_error("mean-field statistic exceeds its declared bound");
    return v;
}

SubmodularityReport check_submodularity(const CostModel& cost, const StateGrid& grid,
                                        const TimeGrid& time,
                                        const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs,
                                        double tol) {
    SubmodularityReport report;
    report.tolerance = tol;
    for (const auto& [lo, hi] : pairs)
        if (!stoch_leq(lo, hi))
            throw std::invalid_argument("submodularity check requires comparable measure pairs");

    // Sample f at a handful of time nodes; g has no time argument.
    std::vector<double> times;
    const std::size_t n = time.steps();
    for (std::size_t k : {std::size_t{0}, n / 4, n / 2, (3 * n) / 4, n})
        times.push_back(time.t(k));
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const std::size_t m = grid.size();
    std::vector<double> phi_lo(m), phi_hi(m);

    auto scan = [&](const std::string& slot, double t,
                    const std::function<double(double, const DiscreteMeasure&)>& phi) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto& [mu_lo, mu_hi] = pairs[p];
            for (std::size_t i = 0; i < m; ++i) {
                phi_lo[i] = phi(grid[i], mu_lo);
                phi_hi[i] = phi(grid[i], mu_hi);
            }
            for (std::size_t i = 0; i + 1 < m; ++i) {
                for (std::size_t j = i + 1; j < m; ++j) {
                    ++report.quadruples;
                    const double left = phi_hi[j] - phi_hi[i];
                    const double right = phi_lo[j] - phi_lo[i];
                    const double viol = left - right;
                    if (viol > report.max_violation) {
                        report.max_violation = viol;
                        report.worst = SubmodularityWitness{t, grid[i], grid[j], p, slot};
                    }
                }
            }
        }
    };

    for (double t : times)
        scan("f", t, [&](double x, const DiscreteMeasure& mu) { return cost.f(t, x, mu); });
    scan("g", time.horizon(), [&](double x, const DiscreteMeasure& mu) { return cost.g(x, mu); });
    return report;
}

LqModel lq_model(const LqParams& prm, double sigma) {
    if (!(prm.q > 0.0))
        throw std::invalid_argument("lq model requires q > 0");
    if (!(prm.n > 0.0))
        throw std::invalid_argument("lq model requires n > 0");
    if (prm.m * prm.m_hat > 0.0)
        throw std::invalid_argument("lq model requires m * m_hat <= 0");
    if (prm.h * prm.h_hat > 0.0)
        throw std::invalid_argument("lq model requires h * h_hat <= 0");

    LqModel out{Dynamics::affine_const(prm.c, prm.p, prm.q, sigma), CostModel{}, prm};
    const double m = prm.m, m_hat = prm.m_hat, n = prm.n, h = prm.h, h_hat = prm.h_hat;
    out.cost.f = [m, m_hat](double, double x, const DiscreteMeasure& mu) {
        const double v = m * x + m_hat * mu.mean();
        return 0.5 * v * v;
    };
    out.cost.l = [n](double, double, double a) { return 0.5 * n * a * a; };
    out.cost.g = [h, h_hat](double x, const DiscreteMeasure& mu) {
        const double v = h * x + h_hat * mu.mean();
        return 0.5 * v * v;
    };
    out.cost.name = "lq";
    return out;
}

CostModel threshold_model() {
    CostModel cost;
    cost.f = [](double, double, const DiscreteMeasure&) { return 0.0; };
    cost.l = [](double, double, double a) { return 0.5 * a * a; };
    cost.g = [](double x, const DiscreteMeasure& mu) {
        const double target = mu.mean() >= 0.0 ? 1.0 : 0.0;
        const double d = x - target;
        return d * d;
    };
    cost.name = "threshold";
    return cost;
}

CostModel order1_model(std::function<double(double, double)> gamma,
                       double f_weight, double g_weight) {
    CostModel cost;
    auto integral = [gamma](double x, const DiscreteMeasure& mu) {
        double s = 0.0;
        for (std::size_t j = 0; j < mu.size(); ++j)
            s += mu.weights()[j] * gamma(x, mu.grid()[j]);
        return s;
    };
    cost.f = [integral, f_weight](double, double x, const DiscreteMeasure& mu) {
        return f_weight * integral(x, mu);
    };
    cost.l = [](double, double, double a) { return 0.5 * a * a; };
    cost.g = [integral, g_weight](double x, const DiscreteMeasure& mu) {
        return g_weight * integral(x, mu);
    };
    cost.name = "order1";
    return cost;
}

DiscreteMeasure random_measure(std::shared_ptr<const StateGrid> grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> w(grid->size());
    double total = 0.0;
    for (double& v : w) {
        v = unif(rng);
        v = v * v; // skew toward sparse profiles
        total += v;
    }
    for (double& v : w) v /= total;
    return DiscreteMeasure(std::move(grid), std::move(w));
}

std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>
random_comparable_pairs(std::shared_ptr<const StateGrid> grid, std::size_t count,
                        std::uint64_t seed) {
    std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto a = random_measure(grid, seed + 2 * i);
        auto b = random_measure(grid, seed + 2 * i + 1);
        out.emplace_back(meet(a, b), join(a, b));
    }
    return out;
}

} // namespace smfg
