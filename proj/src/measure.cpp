#include "smfg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace smfg {

namespace {

void require_same_grid(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (!a.grid().same_as(b.grid()))
        throw std::invalid_argument("measures live on different state grids");
}

std::vector<double> weights_from_cdf(const std::vector<double>& cdf) {
    std::vector<double> w(cdf.size());
    w[0] = cdf[0];
    for (std::size_t i = 1; i < cdf.size(); ++i)
        w[i] = cdf[i] - cdf[i - 1];
    return w;
}

} // namespace

DiscreteMeasure::DiscreteMeasure(std::shared_ptr<const StateGrid> grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
    if (!grid_)
        throw std::invalid_argument("measure requires a grid");
    if (weights_.size() != grid_->size())
        throw std::invalid_argument("weight vector length does not match grid");
    double total = 0.0;
    for (double& w : weights_) {
        if (w < 0.0) {
            if (w < -1e-12)
                throw std::invalid_argument("measure weights must be nonnegative");
            w = 0.0;
        }
        total += w;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("measure has zero total mass");
    // Renormalize only when the total is off; keeps exact inputs exact.
    if (std::abs(total - 1.0) > 1e-15) {
        for (double& w : weights_) w /= total;
    }
    cdf_.resize(weights_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        acc += weights_[i];
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
}

DiscreteMeasure DiscreteMeasure::from_cdf(std::shared_ptr<const StateGrid> grid,
                                          const std::vector<double>& cdf) {
    if (cdf.size() != grid->size())
        throw std::invalid_argument("cdf length does not match grid");
    for (std::size_t i = 1; i < cdf.size(); ++i)
        if (cdf[i] < cdf[i - 1] - kCdfTol)
            throw std::invalid_argument("cdf must be nondecreasing");
    if (std::abs(cdf.back() - 1.0) > 1e-9)
        throw std::invalid_argument("cdf must end at 1");
    return DiscreteMeasure(std::move(grid), weights_from_cdf(cdf));
}

DiscreteMeasure DiscreteMeasure::point_mass(std::shared_ptr<const StateGrid> grid, double x) {
    std::vector<double> w(grid->size(), 0.0);
    if (x <= grid->x_min()) {
        w.front() = 1.0;
    } else if (x >= grid->x_max()) {
        w.back() = 1.0;
    } else {
        const double pos = (x - grid->x_min()) / grid->dx();
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (frac < 1e-14) {
            w[lo] = 1.0;
        } else {
            w[lo] = 1.0 - frac;
            w[lo + 1] = frac;
        }
    }
    return DiscreteMeasure(std::move(grid), std::move(w));
}

double DiscreteMeasure::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] * (*grid_)[i];
    return s;
}

double DiscreteMeasure::variance() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double d = (*grid_)[i] - m;
        s += weights_[i] * d * d;
    }
    return s;
}

double DiscreteMeasure::integrate(const std::function<double(double)>& phi) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] * phi((*grid_)[i]);
    return s;
}

double DiscreteMeasure::upper_mass(double threshold) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if ((*grid_)[i] >= threshold) s += weights_[i];
    return s;
}

bool stoch_leq(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
    require_same_grid(mu, nu);
    const auto& a = mu.cdf();
    const auto& b = nu.cdf();
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] < b[j] - tol) return false;
    return true;
}

double stoch_leq_violation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    require_same_grid(mu, nu);
    const auto& a = mu.cdf();
    const auto& b = nu.cdf();
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        worst = std::max(worst, b[j] - a[j]);
    return worst;
}

DiscreteMeasure meet(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    require_same_grid(mu, nu);
    std::vector<double> cdf(mu.size());
    for (std::size_t j = 0; j < cdf.size(); ++j)
        cdf[j] = std::max(mu.cdf()[j], nu.cdf()[j]);
    return DiscreteMeasure::from_cdf(mu.grid_ptr(), cdf);
}

DiscreteMeasure join(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    require_same_grid(mu, nu);
    std::vector<double> cdf(mu.size());
    for (std::size_t j = 0; j < cdf.size(); ++j)
        cdf[j] = std::min(mu.cdf()[j], nu.cdf()[j]);
    return DiscreteMeasure::from_cdf(mu.grid_ptr(), cdf);
}

DiscreteMeasure family_sup(const std::vector<DiscreteMeasure>& family) {
    if (family.empty())
        throw std::invalid_argument("family_sup of an empty family");
    std::vector<double> cdf = family.front().cdf();
    for (std::size_t n = 1; n < family.size(); ++n) {
        require_same_grid(family.front(), family[n]);
        const auto& c = family[n].cdf();
        for (std::size_t j = 0; j < cdf.size(); ++j)
            cdf[j] = std::min(cdf[j], c[j]);
    }
    return DiscreteMeasure::from_cdf(family.front().grid_ptr(), cdf);
}

DiscreteMeasure family_inf(const std::vector<DiscreteMeasure>& family) {
    if (family.empty())
        throw std::invalid_argument("family_inf of an empty family");
    std::vector<double> cdf = family.front().cdf();
    for (std::size_t n = 1; n < family.size(); ++n) {
        require_same_grid(family.front(), family[n]);
        const auto& c = family[n].cdf();
        for (std::size_t j = 0; j < cdf.size(); ++j)
            cdf[j] = std::max(cdf[j], c[j]);
    }
    return DiscreteMeasure::from_cdf(family.front().grid_ptr(), cdf);
}

double kolmogorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    require_same_grid(mu, nu);
    double d = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        d = std::max(d, std::abs(mu.cdf()[j] - nu.cdf()[j]));
    return d;
}

EnvelopeBounds envelope_bounds(double c, const std::function<double(double)>& psi,
                               std::shared_ptr<const StateGrid> grid) {
    const double psi0 = psi(0.0);
    if (c < psi0)
        throw std::invalid_argument("envelope bound requires C >= psi(0)");
    auto psi_ext = [&](double s) { return s < 0.0 ? psi0 : psi(s); };
    const std::size_t m = grid->size();
    std::vector<double> cdf_min(m), cdf_max(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double s = (*grid)[j];
        const double pm = psi_ext(-s);
        cdf_min[j] = pm > 0.0 ? std::min(c / pm, 1.0) : 1.0;
        const double pp = psi_ext(s);
        cdf_max[j] = pp > 0.0 ? std::max(1.0 - c / pp, 0.0) : 0.0;
    }
    cdf_min.back() = 1.0; // mass beyond the grid clamps to the boundary node
    cdf_max.back() = 1.0;
    return EnvelopeBounds{DiscreteMeasure::from_cdf(grid, cdf_min),
                          DiscreteMeasure::from_cdf(grid, cdf_max)};
}

MeasureFlow::MeasureFlow(TimeGrid time, std::vector<DiscreteMeasure> measures)
    : time_(time), measures_(std::move(measures)) {
    if (measures_.size() != time_.nodes())
        throw std::invalid_argument("flow needs one measure per time node");
    for (std::size_t k = 1; k < measures_.size(); ++k)
        if (!measures_[k].grid().same_as(measures_[0].grid()))
            throw std::invalid_argument("flow measures live on different grids");
}

MeasureFlow MeasureFlow::constant_after_start(const TimeGrid& time,
                                              const DiscreteMeasure& initial,
                                              const DiscreteMeasure& at) {
    std::vector<DiscreteMeasure> ms;
    ms.reserve(time.nodes());
    ms.push_back(initial);
    for (std::size_t k = 1; k < time.nodes(); ++k)
        ms.push_back(at);
    return MeasureFlow(time, std::move(ms));
}

std::vector<double> MeasureFlow::means() const {
    std::vector<double> out(measures_.size());
    for (std::size_t k = 0; k < measures_.size(); ++k)
        out[k] = measures_[k].mean();
    return out;
}

namespace {
void require_same_shape(const MeasureFlow& a, const MeasureFlow& b) {
    if (a.nodes() != b.nodes() || !a.grid().same_as(b.grid()))
        throw std::invalid_argument("flows have different grids");
}
} // namespace

bool flow_leq(const MeasureFlow& mu, const MeasureFlow& nu, double tol) {
    require_same_shape(mu, nu);
    for (std::size_t k = 0; k < mu.nodes(); ++k)
        if (!stoch_leq(mu[k], nu[k], tol)) return false;
    return true;
}

double flow_leq_violation(const MeasureFlow& mu, const MeasureFlow& nu) {
    require_same_shape(mu, nu);
    double worst = 0.0;
    for (std::size_t k = 0; k < mu.nodes(); ++k)
        worst = std::max(worst, stoch_leq_violation(mu[k], nu[k]));
    return worst;
}

MeasureFlow flow_meet(const MeasureFlow& mu, const MeasureFlow& nu) {
    require_same_shape(mu, nu);
    std::vector<DiscreteMeasure> ms;
    ms.reserve(mu.nodes());
    for (std::size_t k = 0; k < mu.nodes(); ++k)
        ms.push_back(meet(mu[k], nu[k]));
    return MeasureFlow(mu.time(), std::move(ms));
}

MeasureFlow flow_join(const MeasureFlow& mu, const MeasureFlow& nu) {
    require_same_shape(mu, nu);
    std::vector<DiscreteMeasure> ms;
    ms.reserve(mu.nodes());
    for (std::size_t k = 0; k < mu.nodes(); ++k)
        ms.push_back(join(mu[k], nu[k]));
    return MeasureFlow(mu.time(), std::move(ms));
}

double flow_distance(const MeasureFlow& mu, const MeasureFlow& nu) {
    require_same_shape(mu, nu);
    double d = 0.0;
    for (std::size_t k = 0; k < mu.nodes(); ++k)
        d = std::max(d, kolmogorov_distance(mu[k], nu[k]));
    return d;
}

namespace {

// %.17g round-trips doubles exactly, keeping emitted CSVs byte-stable.
void print_row(std::ostream& os, std::size_t t_index, double x, double w, double c) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", t_index, x, w, c);
    os << buf;
}

} // namespace

void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu, std::size_t t_index) {
    for (std::size_t j = 0; j < mu.size(); ++j)
        print_row(os, t_index, mu.grid()[j], mu.weights()[j], mu.cdf()[j]);
}

void write_flow_csv(std::ostream& os, const MeasureFlow& flow) {
    os << "t_index,x,weight,cdf\n";
    for (std::size_t k = 0; k < flow.nodes(); ++k)
        write_measure_csv(os, flow[k], k);
}

MeasureFlow read_flow_csv(std::istream& is, const TimeGrid& time) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t_index,x,weight,cdf", 0) != 0)
        throw std::invalid_argument("flow csv missing header");
    std::vector<std::vector<double>> weights;
    std::vector<double> xs;
    std::size_t prev_t = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t t_index = 0;
        double x = 0.0, w = 0.0, c = 0.0;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%lg", &t_index, &x, &w, &c) != 4)
            throw std::invalid_argument("flow csv has a malformed row: " + line);
        if (t_index >= weights.size()) weights.resize(t_index + 1);
        if (t_index != prev_t && t_index != prev_t + 1)
            throw std::invalid_argument("flow csv rows out of order");
        prev_t = t_index;
        weights[t_index].push_back(w);
        if (t_index == 0) xs.push_back(x);
    }
    if (weights.size() != time.nodes())
        throw std::invalid_argument("flow csv time nodes do not match the time grid");
    auto grid = std::make_shared<StateGrid>(std::move(xs));
    std::vector<DiscreteMeasure> ms;
    ms.reserve(weights.size());
    for (auto& w : weights)
        ms.emplace_back(grid, std::move(w));
    return MeasureFlow(time, std::move(ms));
}

} // namespace smfg
