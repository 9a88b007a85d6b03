#include "smfg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace smfg {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_iterates(const fs::path& dir, const IterationTrace& trace) {
    fs::create_directories(dir);
    for (std::size_t n = 0; n < trace.flows.size(); ++n) {
        char name[32];
        std::snprintf(name, sizeof(name), "iter_%03zu.csv", n);
        auto os = open_out(dir / name);
        write_flow_csv(os, trace.flows[n]);
    }
}

void write_solution(const fs::path& out_dir, const std::string& tag, const MfgProblem& problem,
                    const LearnResult& result) {
    {
        auto os = open_out(out_dir / ("flow_" + tag + ".csv"));
        write_flow_csv(os, result.solution.flow);
    }
    {
        auto os = open_out(out_dir / ("trace_" + tag + ".csv"));
        write_trace_csv(os, result.trace);
    }
    {
        auto chain = build_chain(problem.dynamics, problem.grid(), problem.time, problem.controls,
                                 problem.dynamics.needs_measure()
                                     ? std::optional<MeasureFlow>(result.solution.flow)
                                     : std::nullopt);
        auto os = open_out(out_dir / ("value_" + tag + ".csv"));
        write_value_policy_csv(os, chain, result.solution.value, result.solution.policy);
    }
    write_iterates(out_dir / ("iterates_" + tag), result.trace);
}

} // namespace

int cmd_solve(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
    fs::create_directories(out_dir);
    const auto problem = config.problem();

    std::optional<LearnResult> below_opt, above_opt;
    try {
        below_opt = learn_from_below(problem, config.solver.tol, config.solver.max_iter);
        above_opt = learn_from_above(problem, config.solver.tol, config.solver.max_iter);
    } catch (const MonotonicityError& e) {
        auto os = open_out(out_dir / "summary.txt");
        os << "status: monotonicity_error\nerror: " << e.what() << "\n";
        log << "monotonicity error: " << e.what() << "\n";
        return kExitMonotone;
    }
    const LearnResult& below = *below_opt;
    const LearnResult& above = *above_opt;

    write_solution(out_dir, "below", problem, below);
    write_solution(out_dir, "above", problem, above);

    const double gap = flow_distance(below.solution.flow, above.solution.flow);
    const bool unique = gap <= std::max(config.solver.tol, 1e-9);
    const bool ordered = flow_leq(below.solution.flow, above.solution.flow);

    {
        auto os = open_out(out_dir / "summary.txt");
        os << "status: " << (below.solution.converged && above.solution.converged
                                 ? "converged"
                                 : "unconverged")
           << "\n";
        os << "iterations_below: " << below.solution.iterations << "\n";
        os << "iterations_above: " << above.solution.iterations << "\n";
        os << "residual_below: " << fmt(below.solution.residual) << "\n";
        os << "residual_above: " << fmt(above.solution.residual) << "\n";
        os << "terminal_mean_below: " << fmt(below.solution.flow.means().back()) << "\n";
        os << "terminal_mean_above: " << fmt(above.solution.flow.means().back()) << "\n";
        os << "min_leq_max: " << (ordered ? "true" : "false") << "\n";
        os << "min_max_gap: " << fmt(gap) << "\n";
        os << "min_equals_max: " << (unique ? "true" : "false") << "\n";
        os << "tol: " << fmt(config.solver.tol) << "\n";
        os << "max_iter: " << config.solver.max_iter << "\n";
        os << "seed: " << config.solver.seed << "\n";
    }

    log << config.name << ": " << (unique ? "unique equilibrium" : "min != max")
        << ", iterations " << below.solution.iterations << "/" << above.solution.iterations
        << ", residuals " << fmt(below.solution.residual) << "/" << fmt(above.solution.residual)
        << "\n";

    if (!below.solution.converged || !above.solution.converged)
        return kExitUnconverged;
    if (!ordered)
        return kExitFail;
    return kExitOk;
}

int cmd_verify(const RunConfig& config, std::ostream& report) {
    const auto problem = config.problem();
    bool ok = true;

    // decreasing differences on random comparable pairs
    auto pairs = random_comparable_pairs(problem.grid(), config.solver.n_pairs,
                                         config.solver.seed);
    auto sub = check_submodularity(problem.cost, *problem.grid(), problem.time, pairs, 1e-10);
    report << "submodularity_max_violation: " << fmt(sub.max_violation) << "\n";
    report << "submodularity: " << (sub.pass() ? "pass" : "fail") << "\n";
    ok = ok && sub.pass();

    // best-response monotonicity on random comparable flow pairs
    auto mono = verify_monotone_R(problem, config.solver.n_pairs, config.solver.seed + 1,
                                  config.solver.tie_break);
    report << "monotone_R_pairs: " << mono.pairs << "\n";
    report << "monotone_R_violations: " << mono.violations << "\n";
    report << "monotone_R_worst: " << fmt(mono.worst_violation) << "\n";
    report << "monotone_R: " << (mono.pass() ? "pass" : "fail") << "\n";
    ok = ok && mono.pass();

    // lattice laws on random measures
    {
        auto grid = problem.grid();
        bool laws = true;
        for (std::size_t i = 0; i < 200 && laws; ++i) {
            auto a = random_measure(grid, config.solver.seed + 7000 + 3 * i);
            auto b = random_measure(grid, config.solver.seed + 7001 + 3 * i);
            auto c = random_measure(grid, config.solver.seed + 7002 + 3 * i);
            laws = laws && kolmogorov_distance(meet(a, b), meet(b, a)) <= kCdfTol;
            laws = laws && kolmogorov_distance(join(a, b), join(b, a)) <= kCdfTol;
            laws = laws &&
                   kolmogorov_distance(meet(a, meet(b, c)), meet(meet(a, b), c)) <= kCdfTol;
            laws = laws && kolmogorov_distance(meet(a, a), a) <= kCdfTol;
            laws = laws && kolmogorov_distance(meet(a, join(a, b)), a) <= kCdfTol;
            laws = laws && kolmogorov_distance(join(a, meet(a, b)), a) <= kCdfTol;
            const bool leq = stoch_leq(a, b);
            laws = laws && (leq == (kolmogorov_distance(meet(a, b), a) <= kCdfTol));
            laws = laws && (leq == (kolmogorov_distance(join(a, b), b) <= kCdfTol));
        }
        report << "lattice_laws: " << (laws ? "pass" : "fail") << "\n";
        ok = ok && laws;
    }

    // DP against the exhaustive oracle on an embedded tiny instance
    {
        auto tiny_grid = std::make_shared<StateGrid>(config.grid.x_min, config.grid.x_max, 4);
        TimeGrid tiny_time(config.grid.horizon, 2);
        auto tiny_controls = ControlSet::uniform(config.controls.a_min, config.controls.a_max, 2);
        auto tiny_initial = DiscreteMeasure::point_mass(tiny_grid, 0.5 * (config.grid.x_min +
                                                                          config.grid.x_max));
        MfgProblem tiny{config.make_dynamics(), config.make_cost(), tiny_controls, tiny_initial,
                        tiny_time};
        auto mu = inf_flow(tiny);
        auto chain = build_chain(tiny.dynamics, tiny_grid, tiny_time, tiny_controls,
                                 tiny.dynamics.needs_measure() ? std::optional<MeasureFlow>(mu)
                                                               : std::nullopt);
        auto dp = solve_best_response(chain, tiny.cost, mu, config.solver.tie_break);
        auto bf = brute_force_best_response(chain, tiny.cost, mu, config.solver.tie_break);
        double worst = 0.0;
        for (std::size_t k = 0; k < dp.value.nodes(); ++k)
            for (std::size_t i = 0; i < dp.value.states(); ++i)
                worst = std::max(worst, std::abs(dp.value.at(k, i) - bf.value.at(k, i)));
        const bool match = worst <= 1e-12 && dp.policy == bf.policy;
        report << "dp_vs_brute_force_max_gap: " << fmt(worst) << "\n";
        report << "dp_vs_brute_force: " << (match ? "pass" : "fail") << "\n";
        ok = ok && match;
    }

    report << "verify: " << (ok ? "pass" : "fail") << "\n";
    return ok ? kExitOk : kExitFail;
}

int cmd_lq_check(const RunConfig& config, const fs::path& out_dir, std::ostream& report) {
    if (!config.is_lq())
        throw ConfigError("lq-check requires the lq cost builder");
    fs::create_directories(out_dir);

    RiccatiConfig rc;
    rc.substeps = config.lq_check.substeps;
    const TimeGrid time = config.make_time();

    std::vector<double> mean_errors, value_errors;
    auto sweep_csv = open_out(out_dir / "lq_sweep.csv");
    sweep_csv << "level,M,N,mean_error,value_error\n";

    bool clipping = false;
    for (std::size_t level = 0; level < config.lq_check.levels.size(); ++level) {
        const std::size_t m = config.lq_check.levels[level];
        auto problem = config.problem(m);
        auto result = learn_from_below(problem, config.solver.tol, config.solver.max_iter);
        auto oracle = solve_riccati(config.cost.lq, config.dynamics.sigma, time,
                                    problem.initial.mean(), rc);

        // clipping checked on the range the equilibrium law actually visits
        const double spread =
            4.0 * std::sqrt(problem.initial.variance() +
                            config.dynamics.sigma * config.dynamics.sigma * time.horizon());
        const double lo = *std::min_element(oracle.mean.begin(), oracle.mean.end()) - spread;
        const double hi = *std::max_element(oracle.mean.begin(), oracle.mean.end()) + spread;
        oracle.clipping_active =
            riccati_clipping_active(oracle, time, config.cost.lq, lo, hi,
                                    config.controls.a_min, config.controls.a_max);
        clipping = clipping || oracle.clipping_active;

        auto cmp = compare_to_grid(oracle, config.cost.lq, result.solution,
                                   *problem.grid(), time);
        mean_errors.push_back(cmp.mean_error);
        value_errors.push_back(cmp.value_error);
        sweep_csv << level << "," << m << "," << config.grid.n << "," << fmt(cmp.mean_error)
                  << "," << fmt(cmp.value_error) << "\n";

        if (level + 1 == config.lq_check.levels.size()) {
            auto os = open_out(out_dir / "riccati.csv");
            write_riccati_csv(os, oracle, time);
            auto fs_flow = open_out(out_dir / "flow_grid.csv");
            write_flow_csv(fs_flow, result.solution.flow);
        }
    }

    bool decreasing = true;
    for (std::size_t i = 1; i < mean_errors.size(); ++i)
        decreasing = decreasing && mean_errors[i] < mean_errors[i - 1];
    const bool tol_ok = mean_errors.back() <= config.lq_check.mean_tol;

    report << "clipping_active: " << (clipping ? "true" : "false") << "\n";
    for (std::size_t i = 0; i < mean_errors.size(); ++i)
        report << "mean_error_M" << config.lq_check.levels[i] << ": " << fmt(mean_errors[i])
               << "\n";
    report << "mean_error_final: " << fmt(mean_errors.back()) << "\n";
    report << "mean_tol: " << fmt(config.lq_check.mean_tol) << "\n";
    report << "refinement_monotone: " << (decreasing ? "true" : "false") << "\n";
    report << "lq_check: " << (!clipping && decreasing && tol_ok ? "pass" : "fail") << "\n";
    return (!clipping && decreasing && tol_ok) ? kExitOk : kExitFail;
}

int cmd_common_noise(const RunConfig& config, const fs::path& out_dir, std::ostream& report) {
    fs::create_directories(out_dir);
    const auto problem = config.cn_problem();

    const double sub = cn_submodularity_violation(problem, 2000, config.solver.seed);
    report << "cn_submodularity_max_violation: " << fmt(sub) << "\n";
    bool ok = sub <= 1e-10;

    std::optional<CnLearnResult> below_opt, above_opt;
    try {
        below_opt = cn_learn_from_below(problem, config.solver.tol, config.solver.max_iter);
        above_opt = cn_learn_from_above(problem, config.solver.tol, config.solver.max_iter);
    } catch (const MonotonicityError& e) {
        report << "cn_monotonicity_error: " << e.what() << "\n";
        return kExitMonotone;
    }
    const CnLearnResult& below = *below_opt;
    const CnLearnResult& above = *above_opt;

    {
        auto os = open_out(out_dir / "conditional_flow_min.csv");
        write_conditional_flow_csv(os, below.solution.flow);
    }
    {
        auto os = open_out(out_dir / "conditional_flow_max.csv");
        write_conditional_flow_csv(os, above.solution.flow);
    }
    {
        auto os = open_out(out_dir / "cn_trace.csv");
        os << "run,iter,residual,monotone\n";
        for (std::size_t n = 0; n < below.trace.residuals.size(); ++n)
            os << "below," << n << "," << fmt(below.trace.residuals[n]) << ","
               << (below.trace.monotone[n + 1] ? 1 : 0) << "\n";
        for (std::size_t n = 0; n < above.trace.residuals.size(); ++n)
            os << "above," << n << "," << fmt(above.trace.residuals[n]) << ","
               << (above.trace.monotone[n + 1] ? 1 : 0) << "\n";
    }

    const bool ordered = cn_leq(below.solution.flow, above.solution.flow);
    const double tower = cn_tower_gap(problem, below.solution.flow);
    report << "cn_iterations_below: " << below.solution.iterations << "\n";
    report << "cn_iterations_above: " << above.solution.iterations << "\n";
    report << "cn_residual_below: " << fmt(below.solution.residual) << "\n";
    report << "cn_residual_above: " << fmt(above.solution.residual) << "\n";
    report << "cn_min_leq_max: " << (ordered ? "true" : "false") << "\n";
    report << "cn_tower_gap: " << fmt(tower) << "\n";
    ok = ok && ordered && tower <= 1e-10;

    if (config.common_noise.continuity_tol > 0.0) {
        const auto plain = config.problem();
        auto plain_result = learn_from_below(plain, config.solver.tol, config.solver.max_iter);
        const auto plain_means = plain_result.solution.flow.means();
        const auto tree = problem.tree();
        double gap = 0.0;
        for (std::size_t level = 0; level < tree.levels(); ++level) {
            double agg = 0.0;
            for (std::size_t j = 0; j <= level; ++j)
                agg += tree.prob(level, j) * below.solution.flow.at(level, j);
            gap = std::max(gap,
                           std::abs(agg - plain_means[level * tree.steps_per_branch()]));
        }
        report << "cn_continuity_gap: " << fmt(gap) << "\n";
        report << "cn_continuity_tol: " << fmt(config.common_noise.continuity_tol) << "\n";
        ok = ok && gap <= config.common_noise.continuity_tol;
    }

    const bool converged = below.solution.converged && above.solution.converged;
    report << "common_noise: " << (ok && converged ? "pass" : "fail") << "\n";
    if (!converged) return kExitUnconverged;
    return ok ? kExitOk : kExitFail;
}

int cmd_sweep(const RunConfig& config, const fs::path& out_dir, std::ostream& report) {
    fs::create_directories(out_dir);
    auto os = open_out(out_dir / "sweep.csv");
    const bool with_oracle = config.is_lq();
    os << "level,M,N,iterations_below,residual_below,terminal_mean_below,iterations_above,"
          "residual_above,terminal_mean_above"
       << (with_oracle ? ",oracle_mean_error\n" : "\n");

    for (std::size_t level = 0; level < config.lq_check.levels.size(); ++level) {
        const std::size_t m = config.lq_check.levels[level];
        auto problem = config.problem(m);
        auto below = learn_from_below(problem, config.solver.tol, config.solver.max_iter);
        auto above = learn_from_above(problem, config.solver.tol, config.solver.max_iter);
        os << level << "," << m << "," << config.grid.n << "," << below.solution.iterations
           << "," << fmt(below.solution.residual) << ","
           << fmt(below.solution.flow.means().back()) << "," << above.solution.iterations << ","
           << fmt(above.solution.residual) << "," << fmt(above.solution.flow.means().back());
        if (with_oracle) {
            RiccatiConfig rc;
            rc.substeps = config.lq_check.substeps;
            auto oracle = solve_riccati(config.cost.lq, config.dynamics.sigma,
                                        config.make_time(), problem.initial.mean(), rc);
            auto cmp = compare_to_grid(oracle, config.cost.lq, below.solution,
                                       *problem.grid(), config.make_time());
            os << "," << fmt(cmp.mean_error);
        }
        os << "\n";
        report << "level " << m << ": below " << below.solution.iterations << " iterations"
               << ", above " << above.solution.iterations << " iterations\n";
    }
    return kExitOk;
}

} // namespace smfg
