#include "smfg/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace smfg {

namespace {

void check_uniform(const std::vector<double>& pts) {
    if (pts.size() < 2)
        throw std::invalid_argument("state grid needs at least 2 nodes");
    const double dx = (pts.back() - pts.front()) / static_cast<double>(pts.size() - 1);
    if (!(dx > 0.0))
        throw std::invalid_argument("state grid must be strictly increasing");
    const double scale = std::max(1.0, std::abs(pts.front()) + std::abs(pts.back()));
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double step = pts[i] - pts[i - 1];
        if (!(step > 0.0) || std::abs(step - dx) > 1e-12 * scale)
            throw std::invalid_argument("state grid spacing is not uniform");
    }
}

} // namespace

StateGrid::StateGrid(double x_min, double x_max, std::size_t m) {
    if (m < 2)
        throw std::invalid_argument("state grid needs at least 2 nodes");
    if (!(x_max > x_min))
        throw std::invalid_argument("state grid requires x_max > x_min");
    points_.resize(m);
    dx_ = (x_max - x_min) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
        points_[i] = x_min + static_cast<double>(i) * dx_;
    points_.back() = x_max;
}

StateGrid::StateGrid(std::vector<double> points) : points_(std::move(points)) {
    check_uniform(points_);
    dx_ = (points_.back() - points_.front()) / static_cast<double>(points_.size() - 1);
}

std::size_t StateGrid::nearest_index(double x) const {
    if (x <= points_.front()) return 0;
    if (x >= points_.back()) return points_.size() - 1;
    const double pos = (x - points_.front()) / dx_;
    const auto i = static_cast<std::size_t>(std::lround(pos));
    return std::min(i, points_.size() - 1);
}

bool StateGrid::same_as(const StateGrid& other) const {
    if (points_.size() != other.points_.size()) return false;
    const double scale = std::max(1.0, std::abs(x_min()) + std::abs(x_max()));
    for (std::size_t i = 0; i < points_.size(); ++i)
        if (std::abs(points_[i] - other.points_[i]) > 1e-12 * scale) return false;
    return true;
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0))
        throw std::invalid_argument("time horizon must be positive");
    if (steps < 1)
        throw std::invalid_argument("time grid needs at least 1 step");
    dt_ = horizon_ / static_cast<double>(steps_);
}

bool TimeGrid::same_as(const TimeGrid& other) const {
    return steps_ == other.steps_ && std::abs(horizon_ - other.horizon_) <= 1e-12 * std::max(1.0, horizon_);
}

} // namespace smfg
