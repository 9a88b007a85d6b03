#include "smfg/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::vector<std::string> configs;
    std::string out_dir = "out";
    double tol = -1.0;
    long max_iter = -1;
    unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.configs, "config file (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--tol", opts.tol, "override solver tolerance");
    cmd->add_option("--max-iter", opts.max_iter, "override solver iteration cap");
    cmd->add_option("--jobs", opts.jobs, "run independent configs concurrently")
        ->check(CLI::PositiveNumber);
}

smfg::RunConfig load_with_overrides(const std::string& path, const CommonOpts& opts) {
    auto cfg = smfg::RunConfig::load(path);
    if (opts.tol > 0.0) cfg.solver.tol = opts.tol;
    if (opts.max_iter > 0) cfg.solver.max_iter = static_cast<std::size_t>(opts.max_iter);
    return cfg;
}

/// Runs one command per config, optionally in parallel; each config writes to
/// its own subdirectory so outputs never interleave.
template <typename Fn>
int run_all(const CommonOpts& opts, Fn&& fn) {
    const std::size_t count = opts.configs.size();
    std::vector<int> status(count, smfg::kExitOk);
    std::vector<std::string> outputs(count);

    auto worker = [&](std::size_t idx) {
        std::ostringstream log;
        try {
            auto cfg = load_with_overrides(opts.configs[idx], opts);
            const fs::path dir = count == 1 ? fs::path(opts.out_dir)
                                            : fs::path(opts.out_dir) / cfg.name;
            status[idx] = fn(cfg, dir, log);
        } catch (const smfg::ConfigError& e) {
            log << "config error: " << e.what() << "\n";
            status[idx] = smfg::kExitConfig;
        } catch (const smfg::MonotonicityError& e) {
            log << "monotonicity error: " << e.what() << "\n";
            status[idx] = smfg::kExitMonotone;
        } catch (const std::exception& e) {
            log << "error: " << e.what() << "\n";
            status[idx] = smfg::kExitFail;
        }
        outputs[idx] = log.str();
    };

    if (opts.jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) worker(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        while (next < count) {
            const std::size_t batch = std::min<std::size_t>(opts.jobs, count - next);
            for (std::size_t b = 0; b < batch; ++b)
                pool.emplace_back(worker, next + b);
            for (auto& th : pool) th.join();
            pool.clear();
            next += batch;
        }
    }

    int worst = smfg::kExitOk;
    for (std::size_t i = 0; i < count; ++i) {
        std::cout << outputs[i];
        worst = std::max(worst, status[i]);
    }
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotone learning solver for submodular mean field games"};
    app.require_subcommand(1);

    CommonOpts solve_opts, verify_opts, lq_opts, cn_opts, sweep_opts;
    auto* solve = app.add_subcommand("solve", "learn the minimal and maximal equilibria");
    add_common(solve, solve_opts);
    auto* verify = app.add_subcommand("verify", "run the model and engine verification suite");
    add_common(verify, verify_opts);
    auto* lq = app.add_subcommand("lq-check", "compare the grid solver against the Riccati oracle");
    add_common(lq, lq_opts);
    auto* cn = app.add_subcommand("common-noise", "solve the common-noise game on the scenario tree");
    add_common(cn, cn_opts);
    auto* sweep = app.add_subcommand("sweep", "grid-refinement study");
    add_common(sweep, sweep_opts);

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed())
        return run_all(solve_opts, [](const smfg::RunConfig& cfg, const fs::path& dir,
                                      std::ostream& log) { return smfg::cmd_solve(cfg, dir, log); });
    if (verify->parsed())
        return run_all(verify_opts, [](const smfg::RunConfig& cfg, const fs::path&,
                                       std::ostream& log) { return smfg::cmd_verify(cfg, log); });
    if (lq->parsed())
        return run_all(lq_opts, [](const smfg::RunConfig& cfg, const fs::path& dir,
                                   std::ostream& log) { return smfg::cmd_lq_check(cfg, dir, log); });
    if (cn->parsed())
        return run_all(cn_opts, [](const smfg::RunConfig& cfg, const fs::path& dir,
                                   std::ostream& log) {
            return smfg::cmd_common_noise(cfg, dir, log);
        });
    if (sweep->parsed())
        return run_all(sweep_opts, [](const smfg::RunConfig& cfg, const fs::path& dir,
                                      std::ostream& log) { return smfg::cmd_sweep(cfg, dir, log); });
    return 0;
}
