#pragma once

#include <cstddef>
#include <vector>

namespace smfg {

/// Uniform grid of state values x_0 < x_1 < ... < x_{M-1}.
class StateGrid {
public:
    StateGrid(double x_min, double x_max, std::size_t m);
    explicit StateGrid(std::vector<double> points);

    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    const std::vector<double>& points() const { return points_; }
    double dx() const { return dx_; }
    double x_min() const { return points_.front(); }
    double x_max() const { return points_.back(); }

    /// Index of the grid node closest to x.
    std::size_t nearest_index(double x) const;

    /// Two grids are interchangeable when nodes agree to 1e-12 relative.
    bool same_as(const StateGrid& other) const;

private:
    std::vector<double> points_;
    double dx_ = 0.0;
};

/// Time grid t_k = k*dt, k = 0..N, with dt = T/N.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const { return horizon_; }
    std::size_t steps() const { return steps_; }     // N
    std::size_t nodes() const { return steps_ + 1; } // N+1
    double dt() const { return dt_; }
    double t(std::size_t k) const { return static_cast<double>(k) * dt_; }

    bool same_as(const TimeGrid& other) const;

private:
    double horizon_;
    std::size_t steps_;
    double dt_;
};

} // namespace smfg
