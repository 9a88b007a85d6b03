#include "smfg/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace smfg {

using nlohmann::json;

namespace {

template <typename T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

TieBreak parse_tie(const std::string& s) {
    if (s == "lowest") return TieBreak::Lowest;
    if (s == "highest") return TieBreak::Highest;
    throw ConfigError("unknown tie_break '" + s + "' (expected lowest|highest)");
}

std::function<double(double, double)> gamma_by_name(const CostSection& cs) {
    if (cs.gamma == "abs_diff")
        return [](double x, double y) { return std::abs(x - y); };
    if (cs.gamma == "neg_product")
        return [](double x, double y) { return -x * y; };
    if (cs.gamma == "product")
        return [](double x, double y) { return x * y; };
    if (cs.gamma == "congestion") {
        const double c0 = cs.c0;
        return [c0](double x, double y) { return (c0 - x) * (y >= 0.0 ? 1.0 : 0.0); };
    }
    throw ConfigError("unknown order-1 gamma '" + cs.gamma + "'");
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        read_into(j, "name", cfg.name);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            read_into(g, "M", cfg.grid.m);
            read_into(g, "N", cfg.grid.n);
            read_into(g, "T", cfg.grid.horizon);
            if (g.contains("truncation")) {
                const auto& tr = g.at("truncation");
                std::string mode = "explicit";
                read_into(tr, "mode", mode);
                if (mode == "explicit") {
                    cfg.grid.x_min = tr.at("x_min").get<double>();
                    cfg.grid.x_max = tr.at("x_max").get<double>();
                } else if (mode == "envelope") {
                    // Support where the envelope CDFs clear the mass cut,
                    // padded by a few diffusion lengths.
                    double c = tr.at("C").get<double>();
                    double cut = 1e-3;
                    double pad = 3.0;
                    read_into(tr, "mass_cut", cut);
                    read_into(tr, "padding_sigmas", pad);
                    std::string psi = "quadratic";
                    read_into(tr, "psi", psi);
                    if (psi != "quadratic")
                        throw ConfigError("envelope truncation supports psi=quadratic only");
                    double sigma = 0.4;
                    if (j.contains("model") && j.at("model").contains("dynamics"))
                        read_into(j.at("model").at("dynamics"), "sigma", sigma);
                    const double reach = std::sqrt(c / cut) + pad * sigma * std::sqrt(cfg.grid.horizon);
                    cfg.grid.x_min = -reach;
                    cfg.grid.x_max = reach;
                } else {
                    throw ConfigError("unknown truncation mode '" + mode + "'");
                }
            }
        }
        if (j.contains("model")) {
            const auto& mj = j.at("model");
            if (mj.contains("dynamics")) {
                const auto& d = mj.at("dynamics");
                read_into(d, "variant", cfg.dynamics.variant);
                read_into(d, "c", cfg.dynamics.c);
                read_into(d, "p", cfg.dynamics.p);
                read_into(d, "q", cfg.dynamics.q);
                read_into(d, "sigma", cfg.dynamics.sigma);
                read_into(d, "kappa", cfg.dynamics.kappa);
                read_into(d, "rate_c", cfg.dynamics.rate_c);
                read_into(d, "rate_q", cfg.dynamics.rate_q);
                read_into(d, "m_scale", cfg.dynamics.m_scale);
            }
            if (mj.contains("cost")) {
                const auto& c = mj.at("cost");
                read_into(c, "builder", cfg.cost.builder);
                read_into(c, "c", cfg.cost.lq.c);
                read_into(c, "p", cfg.cost.lq.p);
                read_into(c, "q", cfg.cost.lq.q);
                read_into(c, "n", cfg.cost.lq.n);
                read_into(c, "m", cfg.cost.lq.m);
                read_into(c, "m_hat", cfg.cost.lq.m_hat);
                read_into(c, "h", cfg.cost.lq.h);
                read_into(c, "h_hat", cfg.cost.lq.h_hat);
                read_into(c, "gamma", cfg.cost.gamma);
                read_into(c, "f_weight", cfg.cost.f_weight);
                read_into(c, "g_weight", cfg.cost.g_weight);
                read_into(c, "c0", cfg.cost.c0);
            }
            if (mj.contains("controls")) {
                const auto& c = mj.at("controls");
                read_into(c, "min", cfg.controls.a_min);
                read_into(c, "max", cfg.controls.a_max);
                read_into(c, "count", cfg.controls.count);
            }
            if (mj.contains("initial")) {
                const auto& ini = mj.at("initial");
                read_into(ini, "kind", cfg.initial.kind);
                read_into(ini, "x", cfg.initial.x);
                read_into(ini, "a", cfg.initial.a);
                read_into(ini, "b", cfg.initial.b);
                read_into(ini, "x1", cfg.initial.x1);
                read_into(ini, "x2", cfg.initial.x2);
                read_into(ini, "w1", cfg.initial.w1);
                read_into(ini, "mean", cfg.initial.mean);
                read_into(ini, "sd", cfg.initial.sd);
            }
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            read_into(s, "tol", cfg.solver.tol);
            read_into(s, "max_iter", cfg.solver.max_iter);
            read_into(s, "seed", cfg.solver.seed);
            read_into(s, "n_pairs", cfg.solver.n_pairs);
            if (s.contains("tie_break"))
                cfg.solver.tie_break = parse_tie(s.at("tie_break").get<std::string>());
        }
        if (j.contains("common_noise")) {
            const auto& c = j.at("common_noise");
            cfg.common_noise.enabled = true;
            read_into(c, "sigma0", cfg.common_noise.sigma0);
            read_into(c, "tree_depth", cfg.common_noise.tree_depth);
            read_into(c, "drift_bound", cfg.common_noise.drift_bound);
            read_into(c, "continuity_tol", cfg.common_noise.continuity_tol);
        }
        if (j.contains("lq_check")) {
            const auto& c = j.at("lq_check");
            read_into(c, "mean_tol", cfg.lq_check.mean_tol);
            read_into(c, "levels", cfg.lq_check.levels);
            read_into(c, "substeps", cfg.lq_check.substeps);
        }
        if (j.contains("output")) {
            read_into(j.at("output"), "directory", cfg.output.directory);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = from_json_text(ss.str());
    if (cfg.name == "run")
        cfg.name = path.stem().string();
    return cfg;
}

std::shared_ptr<const StateGrid> RunConfig::make_grid() const { return make_grid(grid.m); }

std::shared_ptr<const StateGrid> RunConfig::make_grid(std::size_t m) const {
    return std::make_shared<StateGrid>(grid.x_min, grid.x_max, m);
}

Dynamics RunConfig::make_dynamics() const {
    const auto& d = dynamics;
    if (d.variant == "affine")
        return Dynamics::affine_const(d.c, d.p, d.q, d.sigma);
    if (d.variant == "geometric") {
        const double rc = d.rate_c, rq = d.rate_q;
        return Dynamics::geometric([rc, rq](double, double, double a) { return rc + rq * a; },
                                   d.sigma);
    }
    const double scale = d.m_scale;
    auto m_stat = [scale](const DiscreteMeasure& mu) { return scale * std::tanh(mu.mean()); };
    if (d.variant == "geometric_mean_field")
        return Dynamics::geometric_mean_field(m_stat, std::abs(scale), d.sigma);
    if (d.variant == "ou_mean_field")
        return Dynamics::ou_mean_field(d.kappa, m_stat, std::abs(scale), d.sigma);
    throw ConfigError("unknown dynamics variant '" + d.variant + "'");
}

CostModel RunConfig::make_cost() const {
    if (cost.builder == "lq")
        return lq_model(cost.lq, dynamics.sigma).cost;
    if (cost.builder == "threshold")
        return threshold_model();
    if (cost.builder == "order1")
        return order1_model(gamma_by_name(cost), cost.f_weight, cost.g_weight);
    throw ConfigError("unknown cost builder '" + cost.builder + "'");
}

ControlSet RunConfig::make_controls() const {
    return ControlSet::uniform(controls.a_min, controls.a_max, controls.count);
}

DiscreteMeasure RunConfig::make_initial(std::shared_ptr<const StateGrid> g) const {
    const auto& ini = initial;
    if (ini.kind == "point")
        return DiscreteMeasure::point_mass(g, ini.x);
    if (ini.kind == "two_point") {
        auto p1 = DiscreteMeasure::point_mass(g, ini.x1);
        auto p2 = DiscreteMeasure::point_mass(g, ini.x2);
        std::vector<double> w(g->size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = ini.w1 * p1.weights()[i] + (1.0 - ini.w1) * p2.weights()[i];
        return DiscreteMeasure(g, std::move(w));
    }
    if (ini.kind == "uniform") {
        if (!(ini.b > ini.a))
            throw ConfigError("uniform initial law needs b > a");
        std::vector<double> w(g->size(), 0.0);
        const double dx = g->dx();
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double lo = std::max(ini.a, (*g)[i] - 0.5 * dx);
            const double hi = std::min(ini.b, (*g)[i] + 0.5 * dx);
            w[i] = std::max(0.0, hi - lo);
        }
        return DiscreteMeasure(g, std::move(w));
    }
    if (ini.kind == "gaussian") {
        if (!(ini.sd > 0.0))
            throw ConfigError("gaussian initial law needs sd > 0");
        std::vector<double> w(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double z = ((*g)[i] - ini.mean) / ini.sd;
            w[i] = std::exp(-0.5 * z * z);
        }
        return DiscreteMeasure(g, std::move(w));
    }
    throw ConfigError("unknown initial law kind '" + ini.kind + "'");
}

MfgProblem RunConfig::problem() const { return problem(grid.m); }

MfgProblem RunConfig::problem(std::size_t m_override) const {
    auto g = make_grid(m_override);
    return MfgProblem{make_dynamics(), make_cost(), make_controls(), make_initial(g), make_time()};
}

CnProblem RunConfig::cn_problem() const {
    if (!common_noise.enabled)
        throw ConfigError("config has no common_noise section");
    auto g = make_grid();

    CnModel model;
    model.sigma = dynamics.sigma;
    model.sigma0 = common_noise.sigma0;
    if (dynamics.variant == "affine") {
        const double c = dynamics.c, p = dynamics.p, q = dynamics.q;
        model.drift = [c, p, q](double, double x, double a) { return c + p * x + q * a; };
    } else if (dynamics.variant == "ou_mean_field") {
        const double kappa = dynamics.kappa;
        model.drift = [kappa](double, double x, double a) { return kappa * x + a; };
        const double scale = dynamics.m_scale;
        model.mean_shift = [scale](double v) { return scale * std::tanh(v); };
        model.shift_bound = std::abs(scale);
    } else {
        throw ConfigError("common noise supports affine or ou_mean_field dynamics only");
    }
    if (common_noise.drift_bound > 0.0) {
        model.drift_bound = common_noise.drift_bound;
    } else {
        double worst = 0.0;
        auto ctrl = make_controls();
        for (double x : {g->x_min(), g->x_max()})
            for (double a : {ctrl.values().front(), ctrl.values().back()})
                worst = std::max(worst, std::abs(model.drift(0.0, x, a)));
        model.drift_bound = worst;
    }

    CnCost cn_cost;
    if (cost.builder == "lq") {
        const double m = cost.lq.m, m_hat = cost.lq.m_hat, n = cost.lq.n;
        const double h = cost.lq.h, h_hat = cost.lq.h_hat;
        cn_cost.f = [m, m_hat](double, double x, double v) {
            const double w = m * x + m_hat * v;
            return 0.5 * w * w;
        };
        cn_cost.l = [n](double, double, double a) { return 0.5 * n * a * a; };
        cn_cost.g = [h, h_hat](double x, double v) {
            const double w = h * x + h_hat * v;
            return 0.5 * w * w;
        };
    } else if (cost.builder == "threshold") {
        cn_cost.f = [](double, double, double) { return 0.0; };
        cn_cost.l = [](double, double, double a) { return 0.5 * a * a; };
        cn_cost.g = [](double x, double v) {
            const double d = x - (v >= 0.0 ? 1.0 : 0.0);
            return d * d;
        };
    } else if (cost.builder == "order1") {
        // order-1 interaction against the point mass at the conditional mean
        auto gamma = gamma_by_name(cost);
        const double fw = cost.f_weight, gw = cost.g_weight;
        cn_cost.f = [gamma, fw](double, double x, double v) { return fw * gamma(x, v); };
        cn_cost.l = [](double, double, double a) { return 0.5 * a * a; };
        cn_cost.g = [gamma, gw](double x, double v) { return gw * gamma(x, v); };
    } else {
        throw ConfigError("unknown cost builder '" + cost.builder + "'");
    }

    return CnProblem{std::move(model), std::move(cn_cost), make_controls(),
                     make_initial(g),  make_time(),        common_noise.tree_depth};
}

void RunConfig::validate() const {
    if (grid.m < 2)
        throw ConfigError("grid.M must be at least 2");
    if (grid.n < 1)
        throw ConfigError("grid.N must be at least 1");
    if (!(grid.x_max > grid.x_min))
        throw ConfigError("grid requires x_max > x_min");
    if (!(grid.horizon > 0.0))
        throw ConfigError("grid.T must be positive");
    if (controls.count < 1)
        throw ConfigError("controls.count must be at least 1");
    if (!(solver.tol > 0.0))
        throw ConfigError("solver.tol must be positive");

    const auto g = make_grid();
    const auto time = make_time();
    const auto dyn = make_dynamics();
    const auto ctrl = make_controls();

    if (dyn.multiplicative_noise() && !(grid.x_min > 0.0))
        throw ConfigError("geometric dynamics require x_min > 0");

    // builders run their own sign checks
    (void)make_cost();
    (void)make_initial(g);

    const double required = cfl_required_dt(dyn, *g, time, ctrl, dyn.m_bound());
    if (time.dt() > required + 1e-15) {
        const auto min_steps = static_cast<std::size_t>(std::ceil(grid.horizon / required));
        std::ostringstream msg;
        msg << "CFL infeasible: dt=" << time.dt() << " exceeds required dt<=" << required
            << "; increase grid.N to at least " << min_steps;
        throw ConfigError(msg.str());
    }

    if (common_noise.enabled) {
        if (common_noise.tree_depth == 0 || grid.n % common_noise.tree_depth != 0)
            throw ConfigError("common_noise.tree_depth must divide grid.N");
        if (common_noise.sigma0 < 0.0)
            throw ConfigError("common_noise.sigma0 must be nonnegative");
        (void)cn_problem();
    }
}

} // namespace smfg
