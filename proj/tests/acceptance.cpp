// Acceptance suite: runs every shipped verification criterion end to end and
// prints one PASS/FAIL line per criterion. Exits nonzero on any failure.

#include "smfg/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <array>
#include <sstream>
#include <thread>

using namespace smfg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << what;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << "\n";
    if (!pass) ++failures;
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Solved {
    RunConfig config;
    LearnResult below;
    LearnResult above;
    double seconds;
};

Solved solve_model(const fs::path& configs, const std::string& name) {
    auto cfg = RunConfig::load(configs / name);
    const auto t0 = std::chrono::steady_clock::now();
    auto problem = cfg.problem();
    auto below = learn_from_below(problem, cfg.solver.tol, cfg.solver.max_iter);
    auto above = learn_from_above(problem, cfg.solver.tol, cfg.solver.max_iter);
    return Solved{std::move(cfg), std::move(below), std::move(above), wall_seconds(t0)};
}

bool trace_monotone(const IterationTrace& trace, bool from_below) {
    for (std::size_t n = 1; n < trace.flows.size(); ++n) {
        const bool ok = from_below ? flow_leq(trace.flows[n - 1], trace.flows[n])
                                   : flow_leq(trace.flows[n], trace.flows[n - 1]);
        if (!ok) return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <configs-dir>\n";
        return 2;
    }
    const fs::path configs = argv[1];
    const fs::path work = fs::temp_directory_path() / "smfg_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    // Criteria 1-3 share the solved models.
    std::vector<Solved> solved;
    for (const auto& name : {"lq.json", "threshold.json", "order1.json", "cost_order.json"})
        solved.push_back(solve_model(configs, name));

    // 1. Monotone learning on the three named submodular models at 101x100x11.
    {
        bool pass = true;
        std::ostringstream detail;
        for (std::size_t idx = 0; idx < 3; ++idx) {
            const auto& s = solved[idx];
            const bool grid_ok = s.config.grid.m == 101 && s.config.grid.n == 100 &&
                                 s.config.controls.count == 11;
            const bool mono = trace_monotone(s.below.trace, true) &&
                              trace_monotone(s.above.trace, false);
            const bool conv = s.below.solution.converged && s.above.solution.converged &&
                              s.below.solution.residual <= 1e-8 &&
                              s.above.solution.residual <= 1e-8 &&
                              s.below.solution.iterations <= 200 &&
                              s.above.solution.iterations <= 200;
            const bool fast = s.seconds < 60.0;
            pass = pass && grid_ok && mono && conv && fast;
            detail << s.config.name << " " << s.below.solution.iterations << "/"
                   << s.above.solution.iterations << " its " << std::fixed
                   << std::setprecision(2) << s.seconds << "s; ";
        }
        verdict(1, pass, "monotone learning converges from both extremes", detail.str());
    }

    // 2. Lattice structure: minimal <= maximal and interior solutions between.
    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& s : solved) {
            const bool ordered = flow_leq(s.below.solution.flow, s.above.solution.flow);
            pass = pass && ordered;
            auto problem = s.config.problem();
            // comparable starts: the extremal flows under the opposite
            // tie-break selections, plus the constant-at-initial attempt
            std::size_t found = 0;
            const std::array<std::pair<MeasureFlow, TieBreak>, 3> starts{
                std::pair{inf_flow(problem), TieBreak::Highest},
                std::pair{sup_flow(problem), TieBreak::Lowest},
                std::pair{MeasureFlow::constant_after_start(problem.time, problem.initial,
                                                            problem.initial),
                          TieBreak::Lowest}};
            for (const auto& [start, tie] : starts) {
                auto interior = learn_from(problem, start, tie, s.config.solver.tol,
                                           s.config.solver.max_iter);
                if (interior.solution.has_value() && interior.solution->converged) {
                    ++found;
                    const bool inside =
                        flow_leq(s.below.solution.flow, interior.solution->flow) &&
                        flow_leq(interior.solution->flow, s.above.solution.flow);
                    pass = pass && inside;
                }
            }
            pass = pass && found > 0;
            detail << s.config.name << " " << found << " interior; ";
        }
        verdict(2, pass, "solution set is ordered with interior solutions sandwiched",
                detail.str());
    }

    // 3. Multiplicity witness on the threshold model.
    {
        const auto& s = solved[1];
        const double below_mean = s.below.solution.flow.means().back();
        const double above_mean = s.above.solution.flow.means().back();
        const double gap = 1.0; // terminal targets are 0 and 1
        const bool pass = below_mean < 0.0 && above_mean > 0.0 && below_mean < 0.5 * gap &&
                          above_mean > 0.5 * gap;
        std::ostringstream detail;
        detail << "terminal means " << below_mean << " vs " << above_mean;
        verdict(3, pass, "threshold model yields distinct extremal equilibria", detail.str());
    }

    // 4. Best-response monotonicity with a negative control.
    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& name : {"lq.json", "threshold.json", "order1.json"}) {
            auto cfg = RunConfig::load(configs / name);
            auto report = verify_monotone_R(cfg.problem(), 50, cfg.solver.seed);
            pass = pass && report.violations == 0;
            detail << cfg.name << " " << report.violations << "; ";
        }
        auto control = RunConfig::load(configs / "negative_control.json");
        auto report = verify_monotone_R(control.problem(), 50, control.solver.seed);
        pass = pass && report.violations >= 1;
        detail << "negative control " << report.violations;
        verdict(4, pass, "best response is monotone exactly for submodular models",
                detail.str());
    }

    // 5. DP equals exhaustive policy enumeration on random tiny instances.
    {
        std::mt19937_64 rng(20240803);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        bool pass = true;
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t m = 2 + rng() % 4;
            const std::size_t nk = 1 + rng() % 3;
            const std::size_t nu = 1 + rng() % 3;
            auto g = std::make_shared<StateGrid>(-1.0, 1.0, m);
            TimeGrid time(0.5, nk);
            auto controls = ControlSet::uniform(-1.0, 1.0, nu);
            auto chain =
                build_chain(Dynamics::affine_const(0.0, 0.0, 0.5, 0.2), g, time, controls);
            const double c1 = unif(rng), c2 = unif(rng), c3 = unif(rng);
            CostModel cost;
            cost.f = [c1](double t, double x, const DiscreteMeasure& mu) {
                return c1 * x * std::cos(2.0 * t) + 0.3 * x * mu.mean();
            };
            cost.l = [c2](double, double x, double a) { return 0.4 * a * a + c2 * a * x; };
            cost.g = [c3](double x, const DiscreteMeasure& mu) {
                return c3 * x * x - 0.2 * x * mu.mean();
            };
            auto init = DiscreteMeasure::point_mass(g, 0.0);
            auto mu = MeasureFlow::constant_after_start(time, init, init);
            const TieBreak tie = rep % 2 == 0 ? TieBreak::Lowest : TieBreak::Highest;
            auto dp = solve_best_response(chain, cost, mu, tie);
            auto bf = brute_force_best_response(chain, cost, mu, tie);
            for (std::size_t k = 0; k <= nk; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    worst = std::max(worst, std::abs(dp.value.at(k, i) - bf.value.at(k, i)));
            pass = pass && worst <= 1e-12 && dp.policy == bf.policy;
        }
        std::ostringstream detail;
        detail << "20 instances, max value gap " << worst;
        verdict(5, pass, "dynamic programming matches the exhaustive oracle", detail.str());
    }

    // 6. Riccati oracle agreement with monotone refinement.
    {
        auto cfg = RunConfig::load(configs / "lq_check.json");
        std::ostringstream report;
        const int rc = cmd_lq_check(cfg, work / "lq_check", report);
        verdict(6, rc == kExitOk, "grid equilibrium tracks the Riccati oracle under refinement",
                [&] {
                    std::string text = report.str();
                    for (auto& ch : text)
                        if (ch == '\n') ch = ' ';
                    return text;
                }());
    }

    // 7. Minimal solution carries the minimal cost for mu-increasing costs.
    {
        const auto& s = solved[3]; // cost_order model
        auto problem = s.config.problem();
        const double j_min =
            expected_cost(problem, s.below.solution.policy, s.below.solution.flow);
        const double j_max =
            expected_cost(problem, s.above.solution.policy, s.above.solution.flow);
        std::ostringstream detail;
        detail << "J(min)=" << j_min << " J(max)=" << j_max;
        verdict(7, j_min <= j_max + 1e-10, "minimal equilibrium has the minimal expected cost",
                detail.str());
    }

    // 8. Common noise: monotone nodewise learning plus the small-noise limit.
    {
        bool pass = true;
        std::ostringstream detail;
        {
            auto cfg = RunConfig::load(configs / "common_noise.json");
            auto problem = cfg.cn_problem();
            auto below = cn_learn_from_below(problem, cfg.solver.tol, cfg.solver.max_iter);
            auto above = cn_learn_from_above(problem, cfg.solver.tol, cfg.solver.max_iter);
            bool mono = below.solution.converged && above.solution.converged;
            for (std::size_t n = 1; n < below.trace.flows.size(); ++n)
                mono = mono && cn_leq(below.trace.flows[n - 1], below.trace.flows[n]);
            for (std::size_t n = 1; n < above.trace.flows.size(); ++n)
                mono = mono && cn_leq(above.trace.flows[n], above.trace.flows[n - 1]);
            const bool ordered = cn_leq(below.solution.flow, above.solution.flow);
            pass = pass && mono && ordered;
            detail << "monotone=" << (mono ? "yes" : "no") << " ordered="
                   << (ordered ? "yes" : "no");
        }
        {
            auto cfg = RunConfig::load(configs / "cn_continuity.json");
            std::ostringstream report;
            const int rc = cmd_common_noise(cfg, work / "cn_continuity", report);
            pass = pass && rc == kExitOk;
            const std::string text = report.str();
            const auto pos = text.find("cn_continuity_gap: ");
            if (pos != std::string::npos) {
                detail << "; continuity gap "
                       << text.substr(pos + 19, text.find('\n', pos) - pos - 19);
            }
        }
        verdict(8, pass, "common-noise learning is nodewise monotone with the small-noise limit",
                detail.str());
    }

    // 9. Lattice algebra on 1000 randomized pairs/triples.
    {
        auto g = std::make_shared<StateGrid>(-3.0, 3.0, 33);
        bool pass = true;
        for (std::uint64_t s = 0; s < 1000 && pass; ++s) {
            auto a = random_measure(g, 900000 + 3 * s);
            auto b = random_measure(g, 900001 + 3 * s);
            auto c = random_measure(g, 900002 + 3 * s);
            pass = pass && kolmogorov_distance(meet(a, b), meet(b, a)) <= 1e-12;
            pass = pass && kolmogorov_distance(join(a, b), join(b, a)) <= 1e-12;
            pass = pass &&
                   kolmogorov_distance(meet(a, meet(b, c)), meet(meet(a, b), c)) <= 1e-12;
            pass = pass &&
                   kolmogorov_distance(join(a, join(b, c)), join(join(a, b), c)) <= 1e-12;
            pass = pass && kolmogorov_distance(meet(a, a), a) <= 1e-12;
            pass = pass && kolmogorov_distance(join(a, a), a) <= 1e-12;
            pass = pass && kolmogorov_distance(meet(a, join(a, b)), a) <= 1e-12;
            pass = pass && kolmogorov_distance(join(a, meet(a, b)), a) <= 1e-12;
            const bool leq = stoch_leq(a, b);
            pass = pass && leq == (kolmogorov_distance(meet(a, b), a) <= 1e-12);
            pass = pass && leq == (kolmogorov_distance(join(a, b), b) <= 1e-12);
        }
        verdict(9, pass, "lattice algebra is exact on 1000 randomized cases", "");
    }

    // 10. Determinism: byte-identical solver outputs, serial and threaded.
    {
        auto cfg = RunConfig::load(configs / "determinism.json");
        std::ostringstream log;
        const fs::path serial_a = work / "det_serial_a";
        const fs::path serial_b = work / "det_serial_b";
        const fs::path par_a = work / "det_par_a";
        const fs::path par_b = work / "det_par_b";
        int rc_a = cmd_solve(cfg, serial_a, log);
        int rc_b = cmd_solve(cfg, serial_b, log);
        std::ostringstream log_p1, log_p2;
        std::thread t1([&] { cmd_solve(cfg, par_a, log_p1); });
        std::thread t2([&] { cmd_solve(cfg, par_b, log_p2); });
        t1.join();
        t2.join();
        bool pass = rc_a == kExitOk && rc_b == kExitOk;
        std::size_t files = 0;
        for (const auto& entry : fs::recursive_directory_iterator(serial_a)) {
            if (!entry.is_regular_file()) continue;
            ++files;
            const auto rel = fs::relative(entry.path(), serial_a);
            const auto blob = read_file(entry.path());
            pass = pass && blob == read_file(serial_b / rel);
            pass = pass && blob == read_file(par_a / rel);
            pass = pass && blob == read_file(par_b / rel);
        }
        std::ostringstream detail;
        detail << files << " files compared";
        verdict(10, pass && files > 0, "solver outputs are byte-identical across runs and threads",
                detail.str());
    }

    fs::remove_all(work);
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
