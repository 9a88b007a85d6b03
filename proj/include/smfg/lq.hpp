#pragma once

#include "smfg/mfg.hpp"

#include <iosfwd>
#include <vector>

namespace smfg {

/// Quadratic value V(t,x) = A(t) x^2 / 2 + B(t) x + C(t) for the
/// linear-quadratic model, sampled at the time-grid nodes, together with the
/// consistent mean flow. The feedback gain is a*(t,x) = -(q/n)(A x + B).
struct RiccatiSolution {
    std::vector<double> a; // A(t_k)
    std::vector<double> b; // B(t_k)
    std::vector<double> c; // C(t_k)
    std::vector<double> mean;
    double consistency_residual = 0.0;
    bool converged = false;
    bool clipping_active = false; // feedback left U on the checked range
    std::size_t iterations = 0;

    double value(std::size_t k, double x) const { return 0.5 * a[k] * x * x + b[k] * x + c[k]; }
    double feedback(std::size_t k, double x, double q_over_n) const {
        return -q_over_n * (a[k] * x + b[k]);
    }
};

struct RiccatiConfig {
    double tol = 1e-10;
    std::size_t max_iter = 500;
    std::size_t substeps = 16; // RK4 substeps per grid step
};

/// True when the unconstrained feedback -(q/n)(A x + B) leaves [u_lo, u_hi]
/// somewhere on [x_lo, x_hi] at any time node; the oracle is then invalid
/// for comparisons against the compact-control grid solver.
bool riccati_clipping_active(const RiccatiSolution& sol, const TimeGrid& time,
                             const LqParams& params, double x_lo, double x_hi,
                             double u_lo, double u_hi);

/// Backward RK4 sweep for (A, B, C) against a candidate mean flow, forward
/// sweep for the controlled mean, iterated with damping 1/2 until the mean
/// flow is self-consistent.
RiccatiSolution solve_riccati(const LqParams& params, double sigma, const TimeGrid& time,
                              double initial_mean, const RiccatiConfig& cfg);

struct GridOracleComparison {
    double mean_error = 0.0;  // sup over time of |grid mean - oracle mean|
    double value_error = 0.0; // sup over (k, i) of |grid value - quadratic value|
};

GridOracleComparison compare_to_grid(const RiccatiSolution& oracle, const LqParams& params,
                                     const MfgSolution& grid_solution, const StateGrid& grid,
                                     const TimeGrid& time);

/// CSV "t,A,B,C,mean".
void write_riccati_csv(std::ostream& os, const RiccatiSolution& sol, const TimeGrid& time);

} // namespace smfg
