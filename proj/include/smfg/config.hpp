#pragma once

#include "smfg/common_noise.hpp"
#include "smfg/lq.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace smfg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSection {
    std::size_t m = 101;
    std::size_t n = 100;
    double horizon = 1.0;
    double x_min = -3.0;
    double x_max = 3.0;
};

struct DynamicsSection {
    std::string variant = "affine"; // affine | geometric | geometric_mean_field | ou_mean_field
    double c = 0.0, p = 0.0, q = 1.0;
    double sigma = 0.4;
    double kappa = 0.0;
    double rate_c = 0.0, rate_q = 0.0; // geometric rate b(t,x,a) = rate_c + rate_q * a
    double m_scale = 0.0;              // mean-field shift m(v) = m_scale * tanh(v)
};

struct CostSection {
    std::string builder = "lq"; // lq | threshold | order1
    LqParams lq;
    std::string gamma = "abs_diff"; // abs_diff | neg_product | product | congestion
    double f_weight = 1.0;
    double g_weight = 1.0;
    double c0 = 0.0; // congestion anchor
};

struct ControlSection {
    double a_min = -1.0;
    double a_max = 1.0;
    std::size_t count = 11;
};

struct InitialSection {
    std::string kind = "point"; // point | uniform | two_point | gaussian
    double x = 0.0;             // point
    double a = -1.0, b = 1.0;   // uniform interval
    double x1 = 0.0, x2 = 0.0, w1 = 0.5;
    double mean = 0.0, sd = 1.0;
};

struct SolverSection {
    double tol = 1e-8;
    std::size_t max_iter = 200;
    TieBreak tie_break = TieBreak::Lowest;
    std::uint64_t seed = 42;
    std::size_t n_pairs = 50; // monotonicity probe pairs in verify
};

struct CommonNoiseSection {
    bool enabled = false;
    double sigma0 = 0.2;
    std::size_t tree_depth = 8;
    double drift_bound = 0.0; // 0 -> derived from the grid
    double continuity_tol = 0.0; // when > 0, compare against the plain game
};

struct LqCheckSection {
    double mean_tol = 2e-2;
    std::vector<std::size_t> levels{51, 101, 201};
    std::size_t substeps = 16;
};

struct OutputSection {
    std::string directory = "out";
};

/// Parsed and validated run configuration; the single source for every
/// experiment surface.
class RunConfig {
public:
    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text);

    GridSection grid;
    DynamicsSection dynamics;
    CostSection cost;
    ControlSection controls;
    InitialSection initial;
    SolverSection solver;
    CommonNoiseSection common_noise;
    LqCheckSection lq_check;
    OutputSection output;
    std::string name = "run";

    std::shared_ptr<const StateGrid> make_grid() const;
    std::shared_ptr<const StateGrid> make_grid(std::size_t m) const;
    TimeGrid make_time() const { return TimeGrid(grid.horizon, grid.n); }
    Dynamics make_dynamics() const;
    CostModel make_cost() const;
    ControlSet make_controls() const;
    DiscreteMeasure make_initial(std::shared_ptr<const StateGrid> g) const;

    MfgProblem problem() const;
    MfgProblem problem(std::size_t m_override) const;
    CnProblem cn_problem() const;

    bool is_lq() const { return cost.builder == "lq"; }

    /// Throws ConfigError on any inconsistency (CFL infeasible, bad signs,
    /// degenerate initial law, ...). Called by load().
    void validate() const;
};

} // namespace smfg
