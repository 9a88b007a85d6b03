#include "smfg/lq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace smfg {

namespace {

// Linear interpolation of a flow sampled with step hs, for RK4 half-steps.
double interp_fine(const std::vector<double>& vals, double hs, double t) {
    const double pos = std::clamp(t / hs, 0.0, static_cast<double>(vals.size() - 1));
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= vals.size()) return vals.back();
    const double frac = pos - static_cast<double>(k);
    return (1.0 - frac) * vals[k] + frac * vals[k + 1];
}

} // namespace

RiccatiSolution solve_riccati(const LqParams& prm, double sigma, const TimeGrid& time,
                              double initial_mean, const RiccatiConfig& cfg) {
    if (!(prm.q > 0.0) || !(prm.n > 0.0))
        throw std::invalid_argument("riccati oracle requires q > 0 and n > 0");

    const std::size_t nodes = time.nodes();
    const std::size_t sub = std::max<std::size_t>(1, cfg.substeps);
    const std::size_t fine = time.steps() * sub; // internal resolution
    const double hs = time.dt() / static_cast<double>(sub);
    const double qq = prm.q * prm.q / prm.n;

    RiccatiSolution sol;
    sol.a.assign(nodes, 0.0);
    sol.b.assign(nodes, 0.0);
    sol.c.assign(nodes, 0.0);
    sol.mean.assign(nodes, initial_mean);

    std::vector<double> a_f(fine + 1), b_f(fine + 1), c_f(fine + 1);
    std::vector<double> mean_f(fine + 1, initial_mean), next_f(fine + 1);

    // Backward system against a candidate mean flow mbar:
    //   A' = -m^2 - 2 p A + (q^2/n) A^2,               A(T) = h^2
    //   B' = -m m_hat mbar - A c - B p + (q^2/n) A B,  B(T) = h h_hat mbar_T
    //   C' = -m_hat^2 mbar^2 / 2 - B c + (q^2/n) B^2 / 2 - sigma^2 A / 2,
    //                                                  C(T) = h_hat^2 mbar_T^2 / 2
    auto backward = [&](const std::vector<double>& mbar) {
        const double mt = mbar.back();
        a_f[fine] = prm.h * prm.h;
        b_f[fine] = prm.h * prm.h_hat * mt;
        c_f[fine] = 0.5 * prm.h_hat * prm.h_hat * mt * mt;
        auto rhs = [&](double tt, double av, double bv, double cv, double out[3]) {
            const double mb = interp_fine(mbar, hs, tt);
            out[0] = -prm.m * prm.m - 2.0 * prm.p * av + qq * av * av;
            out[1] = -prm.m * prm.m_hat * mb - av * prm.c - bv * prm.p + qq * av * bv;
            out[2] = -0.5 * prm.m_hat * prm.m_hat * mb * mb - bv * prm.c + 0.5 * qq * bv * bv -
                     0.5 * sigma * sigma * av;
            (void)cv;
        };
        for (std::size_t s = fine; s-- > 0;) {
            const double t = static_cast<double>(s + 1) * hs;
            double a = a_f[s + 1], b = b_f[s + 1], c = c_f[s + 1];
            double k1[3], k2[3], k3[3], k4[3];
            rhs(t, a, b, c, k1);
            rhs(t - 0.5 * hs, a - 0.5 * hs * k1[0], b - 0.5 * hs * k1[1], c - 0.5 * hs * k1[2], k2);
            rhs(t - 0.5 * hs, a - 0.5 * hs * k2[0], b - 0.5 * hs * k2[1], c - 0.5 * hs * k2[2], k3);
            rhs(t - hs, a - hs * k3[0], b - hs * k3[1], c - hs * k3[2], k4);
            a_f[s] = a - hs / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            b_f[s] = b - hs / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            c_f[s] = c - hs / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
        }
    };

    // Forward controlled mean: mbar' = c + p mbar - (q^2/n)(A mbar + B).
    auto forward = [&](std::vector<double>& out) {
        out[0] = initial_mean;
        auto rhs = [&](double tt, double v) {
            const double av = interp_fine(a_f, hs, tt);
            const double bv = interp_fine(b_f, hs, tt);
            return prm.c + prm.p * v - qq * (av * v + bv);
        };
        for (std::size_t s = 0; s < fine; ++s) {
            const double t = static_cast<double>(s) * hs;
            double v = out[s];
            const double k1 = rhs(t, v);
            const double k2 = rhs(t + 0.5 * hs, v + 0.5 * hs * k1);
            const double k3 = rhs(t + 0.5 * hs, v + 0.5 * hs * k2);
            const double k4 = rhs(t + hs, v + hs * k3);
            out[s + 1] = v + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    };

    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        backward(mean_f);
        forward(next_f);
        double diff = 0.0;
        for (std::size_t s = 0; s <= fine; ++s)
            diff = std::max(diff, std::abs(next_f[s] - mean_f[s]));
        // full first update, then damping 1/2 to guard against oscillation
        // for strongly coupled parameters
        const double theta = it == 0 ? 1.0 : 0.5;
        for (std::size_t s = 0; s <= fine; ++s)
            mean_f[s] = (1.0 - theta) * mean_f[s] + theta * next_f[s];
        sol.consistency_residual = diff;
        sol.iterations = it + 1;
        if (diff <= cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    backward(mean_f);

    for (std::size_t k = 0; k < nodes; ++k) {
        sol.a[k] = a_f[k * sub];
        sol.b[k] = b_f[k * sub];
        sol.c[k] = c_f[k * sub];
        sol.mean[k] = mean_f[k * sub];
    }
    return sol;
}

bool riccati_clipping_active(const RiccatiSolution& sol, const TimeGrid& time,
                             const LqParams& params, double x_lo, double x_hi,
                             double u_lo, double u_hi) {
    const double q_over_n = params.q / params.n;
    for (std::size_t k = 0; k < time.nodes(); ++k) {
        // the feedback is affine in x, so the extremes sit at the range ends
        for (double x : {x_lo, x_hi}) {
            const double a_star = sol.feedback(k, x, q_over_n);
            if (a_star < u_lo - 1e-12 || a_star > u_hi + 1e-12) return true;
        }
    }
    return false;
}

GridOracleComparison compare_to_grid(const RiccatiSolution& oracle, const LqParams& params,
                                     const MfgSolution& grid_solution, const StateGrid& grid,
                                     const TimeGrid& time) {
    (void)params;
    GridOracleComparison cmp;
    const auto means = grid_solution.flow.means();
    for (std::size_t k = 0; k < time.nodes(); ++k)
        cmp.mean_error = std::max(cmp.mean_error, std::abs(means[k] - oracle.mean[k]));
    for (std::size_t k = 0; k < time.nodes(); ++k)
        for (std::size_t i = 0; i < grid.size(); ++i)
            cmp.value_error = std::max(cmp.value_error,
                                       std::abs(grid_solution.value.at(k, i) - oracle.value(k, grid[i])));
    return cmp;
}

void write_riccati_csv(std::ostream& os, const RiccatiSolution& sol, const TimeGrid& time) {
    os << "t,A,B,C,mean\n";
    char buf[160];
    for (std::size_t k = 0; k < time.nodes(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", time.t(k), sol.a[k],
                      sol.b[k], sol.c[k], sol.mean[k]);
        os << buf;
    }
}

} // namespace smfg
