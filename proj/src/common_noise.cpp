#include "smfg/common_noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

namespace smfg {

ScenarioTree::ScenarioTree(const TimeGrid& time, std::size_t depth, double sigma0)
    : depth_(depth), sigma0_(sigma0) {
    if (depth == 0)
        throw std::invalid_argument("scenario tree needs depth >= 1");
    if (time.steps() % depth != 0)
        throw std::invalid_argument("tree depth must divide the number of time steps");
    if (sigma0 < 0.0)
        throw std::invalid_argument("sigma0 must be nonnegative");
    steps_per_branch_ = time.steps() / depth;
    dt_b_ = time.horizon() / static_cast<double>(depth);
    increment_ = sigma0 * std::sqrt(dt_b_);
}

double ScenarioTree::prob(std::size_t level, std::size_t j) const {
    // binom(level, j) / 2^level with interleaved halving to stay in range
    double p = 1.0;
    std::size_t halves = level;
    const std::size_t jj = std::min(j, level - j);
    for (std::size_t i = 1; i <= jj; ++i) {
        p *= static_cast<double>(level - jj + i) / static_cast<double>(i);
        while (p > 1.0 && halves > 0) {
            p *= 0.5;
            --halves;
        }
    }
    while (halves > 0) {
        p *= 0.5;
        --halves;
    }
    return p;
}

double cn_distance(const ConditionalFlow& a, const ConditionalFlow& b) {
    if (!a.tree().same_as(b.tree()))
        throw std::invalid_argument("conditional flows live on different trees");
    double d = 0.0;
    for (std::size_t n = 0; n < a.values().size(); ++n)
        d = std::max(d, std::abs(a.values()[n] - b.values()[n]));
    return d;
}

bool cn_leq(const ConditionalFlow& a, const ConditionalFlow& b, double tol) {
    if (!a.tree().same_as(b.tree()))
        throw std::invalid_argument("conditional flows live on different trees");
    for (std::size_t n = 0; n < a.values().size(); ++n)
        if (a.values()[n] > b.values()[n] + tol) return false;
    return true;
}

namespace {

double initial_abs_bound(const DiscreteMeasure& initial) {
    double bound = 0.0;
    for (std::size_t i = 0; i < initial.size(); ++i)
        if (initial.weights()[i] > 0.0)
            bound = std::max(bound, std::abs(initial.grid()[i]));
    return bound;
}

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    double drift = 0.0;
    std::size_t index = 0;
    bool valid = false;
};

bool prefer(const Candidate& challenger, const Candidate& incumbent, TieBreak tie) {
    if (!incumbent.valid) return true;
    if (challenger.value < incumbent.value - kTieTol) return true;
    if (challenger.value > incumbent.value + kTieTol) return false;
    if (tie == TieBreak::Lowest) {
        if (challenger.drift < incumbent.drift) return true;
        if (challenger.drift > incumbent.drift) return false;
        return challenger.index < incumbent.index;
    }
    if (challenger.drift > incumbent.drift) return true;
    if (challenger.drift < incumbent.drift) return false;
    return challenger.index > incumbent.index;
}

struct Kick {
    long base = 0;
    double frac = 0.0;
};

Kick make_kick(double delta, double dx) {
    const double off = delta / dx;
    Kick k;
    k.base = static_cast<long>(std::floor(off));
    k.frac = off - static_cast<double>(k.base);
    return k;
}

std::size_t clamp_index(long j, std::size_t m) {
    if (j < 0) return 0;
    if (j >= static_cast<long>(m)) return m - 1;
    return static_cast<std::size_t>(j);
}

// Expected continuation after a deterministic off-grid shift.
double kick_read(const std::vector<double>& v, std::size_t base_offset, long j, const Kick& k,
                 std::size_t m) {
    const double lo = v[base_offset + clamp_index(j + k.base, m)];
    const double hi = v[base_offset + clamp_index(j + k.base + 1, m)];
    return (1.0 - k.frac) * lo + k.frac * hi;
}

struct AugmentedRun {
    ConditionalFlow response;
    std::vector<double> level_masses;     // per flattened node
    std::vector<double> marginal_means;   // unconditional mean at each tree time
};

AugmentedRun run_augmented(const CnProblem& problem, const ConditionalFlow& mu, TieBreak tie) {
    const ScenarioTree tree = problem.tree();
    if (!mu.tree().same_as(tree))
        throw std::invalid_argument("conditional flow tree does not match the problem tree");
    const auto grid = problem.initial.grid_ptr();
    const std::size_t m = grid->size();
    const std::size_t nk = problem.time.steps();
    const std::size_t nu = problem.controls.size();
    const double dx = grid->dx();
    const double dt = problem.time.dt();
    const std::size_t s = tree.steps_per_branch();
    const double sig2 = problem.model.sigma * problem.model.sigma;
    const Kick kick_up = make_kick(tree.increment(), dx);
    const Kick kick_dn = make_kick(-tree.increment(), dx);

    auto drift_at = [&](double t, double x, double a, double shift) {
        const double raw = problem.model.drift(t, x, a);
        if (std::abs(raw) > problem.model.drift_bound + 1e-9)
            throw std::invalid_argument("drift exceeds its declared bound; model rejected");
        return raw + shift;
    };
    auto shift_at = [&](double mu_val) {
        if (!problem.model.mean_shift) return 0.0;
        const double v = problem.model.mean_shift(mu_val);
        if (std::abs(v) > problem.model.shift_bound + 1e-9)
            throw std::invalid_argument("mean shift exceeds its declared bound");
        return v;
    };
    auto row = [&](double b, double& pd, double& pu) {
        pu = (0.5 * sig2 + dx * std::max(b, 0.0)) * dt / (dx * dx);
        pd = (0.5 * sig2 + dx * std::max(-b, 0.0)) * dt / (dx * dx);
        if (pu + pd > 1.0 + 1e-12) {
            const double required = (dx * dx) / (sig2 + dx * std::abs(b));
            std::ostringstream msg;
            msg << "CFL condition violated in the common-noise chain: dt=" << dt
                << " exceeds required dt<=" << required;
            throw CflError(msg.str(), required);
        }
    };

    // Backward sweep over the augmented state (x-node, tree-node).
    std::vector<std::vector<std::size_t>> policy(nk);
    std::vector<double> v_next(m * tree.nodes_at(tree.depth()));
    for (std::size_t node = 0; node <= tree.depth(); ++node)
        for (std::size_t i = 0; i < m; ++i)
            v_next[node * m + i] = problem.cost.g((*grid)[i], mu.at(tree.depth(), node));

    std::vector<double> v_cur, cont(m);
    for (std::size_t k = nk; k-- > 0;) {
        const std::size_t level = k / s;
        const bool branch = ((k + 1) % s) == 0;
        const double t = problem.time.t(k);
        v_cur.assign(m * (level + 1), 0.0);
        policy[k].assign(m * (level + 1), 0);
        for (std::size_t node = 0; node <= level; ++node) {
            const double mu_val = mu.at(level, node);
            const double shift = shift_at(mu_val);
            if (branch) {
                for (std::size_t j = 0; j < m; ++j) {
                    const long jj = static_cast<long>(j);
                    cont[j] = 0.5 * kick_read(v_next, (node + 1) * m, jj, kick_up, m) +
                              0.5 * kick_read(v_next, node * m, jj, kick_dn, m);
                }
            } else {
                std::copy(v_next.begin() + node * m, v_next.begin() + (node + 1) * m, cont.begin());
            }
            for (std::size_t i = 0; i < m; ++i) {
                const double x = (*grid)[i];
                const double c_dn = cont[i > 0 ? i - 1 : 0];
                const double c_st = cont[i];
                const double c_up = cont[i + 1 < m ? i + 1 : m - 1];
                const double fx = problem.cost.f(t, x, mu_val);
                Candidate best;
                for (std::size_t u = 0; u < nu; ++u) {
                    const double a = problem.controls[u];
                    const double b = drift_at(t, x, a, shift);
                    double pd, pu;
                    row(b, pd, pu);
                    const double pdd = (i == 0) ? 0.0 : pd;
                    const double puu = (i + 1 == m) ? 0.0 : pu;
                    const double value = (fx + problem.cost.l(t, x, a)) * dt + pdd * c_dn +
                                         (1.0 - pdd - puu) * c_st + puu * c_up;
                    Candidate cand{value, b, u, true};
                    if (prefer(cand, best, tie)) best = cand;
                }
                v_cur[node * m + i] = best.value;
                policy[k][node * m + i] = best.index;
            }
        }
        v_next = v_cur;
    }

    // Forward push of the augmented law, recording conditional means at the
    // tree times.
    AugmentedRun out{ConditionalFlow(tree), std::vector<double>(tree.total_nodes(), 0.0),
                     std::vector<double>(tree.levels(), 0.0)};
    std::vector<double> nu_cur(m, 0.0), nu_next;
    for (std::size_t i = 0; i < m; ++i) nu_cur[i] = problem.initial.weights()[i];

    auto record = [&](std::size_t level, const std::vector<double>& dist) {
        double total_mean = 0.0;
        for (std::size_t node = 0; node <= level; ++node) {
            double mass = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double w = dist[node * m + i];
                mass += w;
                mean += w * (*grid)[i];
            }
            out.level_masses[tree.offset(level) + node] = mass;
            out.response.at(level, node) = mass > 0.0 ? mean / mass : 0.0;
            total_mean += mean;
        }
        out.marginal_means[level] = total_mean;
    };
    record(0, nu_cur);

    for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t level = k / s;
        const bool branch = ((k + 1) % s) == 0;
        const std::size_t next_levels = branch ? level + 2 : level + 1;
        nu_next.assign(m * next_levels, 0.0);
        for (std::size_t node = 0; node <= level; ++node) {
            const double mu_val = mu.at(level, node);
            const double shift = shift_at(mu_val);
            const double t = problem.time.t(k);
            for (std::size_t i = 0; i < m; ++i) {
                const double w = nu_cur[node * m + i];
                if (w == 0.0) continue;
                const std::size_t u = policy[k][node * m + i];
                const double b = drift_at(t, (*grid)[i], problem.controls[u], shift);
                double pd, pu;
                row(b, pd, pu);
                const double pdd = (i == 0) ? 0.0 : pd;
                const double puu = (i + 1 == m) ? 0.0 : pu;
                const double ps = 1.0 - pdd - puu;
                const std::size_t j_dn = i > 0 ? i - 1 : 0;
                const std::size_t j_up = i + 1 < m ? i + 1 : m - 1;
                if (!branch) {
                    nu_next[node * m + j_dn] += w * pdd;
                    nu_next[node * m + i] += w * ps;
                    nu_next[node * m + j_up] += w * puu;
                } else {
                    auto scatter = [&](std::size_t target_node, const Kick& kk, double mass,
                                       std::size_t j) {
                        const long jj = static_cast<long>(j);
                        nu_next[target_node * m + clamp_index(jj + kk.base, m)] +=
                            mass * (1.0 - kk.frac);
                        nu_next[target_node * m + clamp_index(jj + kk.base + 1, m)] +=
                            mass * kk.frac;
                    };
                    scatter(node + 1, kick_up, 0.5 * w * pdd, j_dn);
                    scatter(node + 1, kick_up, 0.5 * w * ps, i);
                    scatter(node + 1, kick_up, 0.5 * w * puu, j_up);
                    scatter(node, kick_dn, 0.5 * w * pdd, j_dn);
                    scatter(node, kick_dn, 0.5 * w * ps, i);
                    scatter(node, kick_dn, 0.5 * w * puu, j_up);
                }
            }
        }
        nu_cur = std::move(nu_next);
        if ((k + 1) % s == 0)
            record((k + 1) / s, nu_cur);
    }
    return out;
}

} // namespace

double cn_envelope(const CnProblem& problem, std::size_t level, std::size_t j) {
    const ScenarioTree tree = problem.tree();
    const double t = static_cast<double>(level) * tree.dt_b();
    return initial_abs_bound(problem.initial) + t * problem.model.drift_bound +
           problem.model.shift_bound * t + 3.0 * problem.model.sigma * std::sqrt(t) +
           std::abs(tree.value(level, j));
}

ConditionalFlow cn_lower_start(const CnProblem& problem) {
    ConditionalFlow flow(problem.tree());
    for (std::size_t level = 0; level < flow.tree().levels(); ++level)
        for (std::size_t j = 0; j <= level; ++j)
            flow.at(level, j) = -cn_envelope(problem, level, j);
    return flow;
}

ConditionalFlow cn_upper_start(const CnProblem& problem) {
    ConditionalFlow flow(problem.tree());
    for (std::size_t level = 0; level < flow.tree().levels(); ++level)
        for (std::size_t j = 0; j <= level; ++j)
            flow.at(level, j) = cn_envelope(problem, level, j);
    return flow;
}

ConditionalFlow cn_best_response(const CnProblem& problem, const ConditionalFlow& mu,
                                 TieBreak tie_break) {
    return run_augmented(problem, mu, tie_break).response;
}

double cn_residual(const CnProblem& problem, const ConditionalFlow& mu, TieBreak tie_break) {
    return cn_distance(mu, cn_best_response(problem, mu, tie_break));
}

double cn_tower_gap(const CnProblem& problem, const ConditionalFlow& mu, TieBreak tie_break) {
    const AugmentedRun run = run_augmented(problem, mu, tie_break);
    const ScenarioTree tree = problem.tree();
    double gap = 0.0;
    for (std::size_t level = 0; level < tree.levels(); ++level) {
        double recombined = 0.0;
        for (std::size_t j = 0; j <= level; ++j)
            recombined += run.level_masses[tree.offset(level) + j] * run.response.at(level, j);
        gap = std::max(gap, std::abs(recombined - run.marginal_means[level]));
    }
    return gap;
}

namespace {

CnLearnResult cn_learn(const CnProblem& problem, double tol, std::size_t max_iter,
                       bool from_below) {
    const TieBreak tie = from_below ? TieBreak::Lowest : TieBreak::Highest;
    ConditionalFlow cur = from_below ? cn_lower_start(problem) : cn_upper_start(problem);
    CnTrace trace;
    trace.flows.push_back(cur);
    trace.monotone.push_back(true);
    for (std::size_t it = 0; it < max_iter; ++it) {
        ConditionalFlow next = cn_best_response(problem, cur, tie);
        const bool ordered = from_below ? cn_leq(cur, next) : cn_leq(next, cur);
        const double dist = cn_distance(cur, next);
        trace.flows.push_back(next);
        trace.residuals.push_back(dist);
        trace.monotone.push_back(ordered);
        if (!ordered)
            throw MonotonicityError("common-noise learning violated nodewise order at iteration " +
                                    std::to_string(it));
        if (dist <= tol) {
            CnSolution sol{cur, dist, true, it + 1,
                           from_below ? SolutionKind::Minimal : SolutionKind::Maximal};
            return CnLearnResult{std::move(sol), std::move(trace)};
        }
        cur = std::move(next);
    }
    const double res = cn_residual(problem, cur, tie);
    CnSolution sol{cur, res, false, max_iter,
                   from_below ? SolutionKind::Minimal : SolutionKind::Maximal};
    return CnLearnResult{std::move(sol), std::move(trace)};
}

} // namespace

CnLearnResult cn_learn_from_below(const CnProblem& problem, double tol, std::size_t max_iter) {
    return cn_learn(problem, tol, max_iter, true);
}

CnLearnResult cn_learn_from_above(const CnProblem& problem, double tol, std::size_t max_iter) {
    return cn_learn(problem, tol, max_iter, false);
}

double cn_submodularity_violation(const CnProblem& problem, std::size_t samples,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& grid = problem.initial.grid();
    std::uniform_real_distribution<double> ux(grid.x_min(), grid.x_max());
    std::uniform_real_distribution<double> ut(0.0, problem.time.horizon());
    double worst = 0.0;
    for (std::size_t n = 0; n < samples; ++n) {
        double x0 = ux(rng), x1 = ux(rng);
        if (x0 > x1) std::swap(x0, x1);
        double v0 = ux(rng), v1 = ux(rng);
        if (v0 > v1) std::swap(v0, v1);
        const double t = ut(rng);
        const double f_viol = (problem.cost.f(t, x1, v1) - problem.cost.f(t, x0, v1)) -
                              (problem.cost.f(t, x1, v0) - problem.cost.f(t, x0, v0));
        const double g_viol = (problem.cost.g(x1, v1) - problem.cost.g(x0, v1)) -
                              (problem.cost.g(x1, v0) - problem.cost.g(x0, v0));
        worst = std::max({worst, f_viol, g_viol});
    }
    return worst;
}

void write_conditional_flow_csv(std::ostream& os, const ConditionalFlow& flow) {
    os << "level,node,B_value,prob,mu\n";
    const auto& tree = flow.tree();
    char buf[160];
    for (std::size_t level = 0; level < tree.levels(); ++level) {
        for (std::size_t j = 0; j <= level; ++j) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", level, j,
                          tree.value(level, j), tree.prob(level, j), flow.at(level, j));
            os << buf;
        }
    }
}

} // namespace smfg
