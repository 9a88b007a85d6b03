#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "smfg/commands.hpp"

#include <sstream>

namespace py = pybind11;
using namespace smfg;

namespace {

DiscreteMeasure measure_from_weights(const std::shared_ptr<StateGrid>& grid,
                                     std::vector<double> weights) {
    return DiscreteMeasure(grid, std::move(weights));
}

} // namespace

PYBIND11_MODULE(_smfg, m) {
    m.doc() = "Monotone learning solver for submodular mean field games";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<MonotonicityError>(m, "MonotonicityError");

    py::class_<StateGrid, std::shared_ptr<StateGrid>>(m, "StateGrid")
        .def(py::init<double, double, std::size_t>(), py::arg("x_min"), py::arg("x_max"),
             py::arg("m"))
        .def_property_readonly("points", &StateGrid::points)
        .def_property_readonly("dx", &StateGrid::dx)
        .def("__len__", &StateGrid::size);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, std::size_t>(), py::arg("horizon"), py::arg("steps"))
        .def_property_readonly("horizon", &TimeGrid::horizon)
        .def_property_readonly("steps", &TimeGrid::steps)
        .def_property_readonly("dt", &TimeGrid::dt);

    py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
        .def(py::init(&measure_from_weights), py::arg("grid"), py::arg("weights"))
        .def_static(
            "point_mass",
            [](const std::shared_ptr<StateGrid>& g, double x) {
                return DiscreteMeasure::point_mass(g, x);
            },
            py::arg("grid"), py::arg("x"))
        .def_property_readonly("weights", &DiscreteMeasure::weights)
        .def_property_readonly("cdf", &DiscreteMeasure::cdf)
        .def("mean", &DiscreteMeasure::mean)
        .def("variance", &DiscreteMeasure::variance)
        .def("__len__", &DiscreteMeasure::size);

    m.def("stoch_leq", &stoch_leq, py::arg("mu"), py::arg("nu"), py::arg("tol") = kCdfTol,
          "First-order stochastic dominance: mu <= nu.");
    m.def("meet", &meet, "Lattice meet: pointwise max of the CDFs.");
    m.def("join", &join, "Lattice join: pointwise min of the CDFs.");
    m.def("family_sup", &family_sup);
    m.def("family_inf", &family_inf);
    m.def("kolmogorov_distance", &kolmogorov_distance);
    m.def(
        "envelope_bounds",
        [](double c, const std::function<double(double)>& psi,
           const std::shared_ptr<StateGrid>& grid) {
            auto env = envelope_bounds(c, psi, grid);
            return py::make_tuple(env.mu_min, env.mu_max);
        },
        py::arg("c"), py::arg("psi"), py::arg("grid"),
        "Extremal measures for the moment bound E[psi(|X|)] <= C.");

    py::class_<MeasureFlow>(m, "MeasureFlow")
        .def(py::init<TimeGrid, std::vector<DiscreteMeasure>>(), py::arg("time"),
             py::arg("measures"))
        .def_static("constant_after_start", &MeasureFlow::constant_after_start, py::arg("time"),
                    py::arg("initial"), py::arg("at"))
        .def("means", &MeasureFlow::means)
        .def("__len__", &MeasureFlow::nodes)
        .def("__getitem__",
             [](const MeasureFlow& f, std::size_t k) {
                 if (k >= f.nodes()) throw py::index_error();
                 return f[k];
             })
        .def("to_csv", [](const MeasureFlow& f) {
            std::ostringstream ss;
            write_flow_csv(ss, f);
            return ss.str();
        });

    m.def("flow_leq", &flow_leq, py::arg("mu"), py::arg("nu"), py::arg("tol") = kCdfTol);
    m.def("flow_meet", &flow_meet);
    m.def("flow_join", &flow_join);
    m.def("flow_distance", &flow_distance);

    py::enum_<TieBreak>(m, "TieBreak")
        .value("Lowest", TieBreak::Lowest)
        .value("Highest", TieBreak::Highest);

    py::enum_<SolutionKind>(m, "SolutionKind")
        .value("Minimal", SolutionKind::Minimal)
        .value("Maximal", SolutionKind::Maximal)
        .value("Interior", SolutionKind::Interior);

    py::class_<ControlSet>(m, "ControlSet")
        .def_static("uniform", &ControlSet::uniform, py::arg("a_min"), py::arg("a_max"),
                    py::arg("count"))
        .def_property_readonly("values", &ControlSet::values);

    py::class_<Dynamics>(m, "Dynamics")
        .def_static("affine", &Dynamics::affine_const, py::arg("c"), py::arg("p"), py::arg("q"),
                    py::arg("sigma"))
        .def_static("geometric", &Dynamics::geometric, py::arg("rate"), py::arg("sigma"))
        .def_static("ou_mean_field", &Dynamics::ou_mean_field, py::arg("kappa"), py::arg("m"),
                    py::arg("m_bound"), py::arg("sigma"));

    py::class_<CostModel>(m, "CostModel").def_readonly("name", &CostModel::name);
    py::class_<LqParams>(m, "LqParams")
        .def(py::init([](double c, double p, double q, double n, double mm, double m_hat,
                         double h, double h_hat) {
                 return LqParams{c, p, q, n, mm, m_hat, h, h_hat};
             }),
             py::arg("c") = 0.0, py::arg("p") = 0.0, py::arg("q") = 1.0, py::arg("n") = 1.0,
             py::arg("m") = 0.0, py::arg("m_hat") = 0.0, py::arg("h") = 0.0,
             py::arg("h_hat") = 0.0);

    m.def(
        "lq_model",
        [](const LqParams& params, double sigma) {
            auto model = lq_model(params, sigma);
            return py::make_tuple(model.dynamics, model.cost);
        },
        py::arg("params"), py::arg("sigma"));
    m.def("threshold_model", &threshold_model);
    m.def("order1_model", &order1_model, py::arg("gamma"), py::arg("f_weight") = 1.0,
          py::arg("g_weight") = 1.0);

    py::class_<SubmodularityReport>(m, "SubmodularityReport")
        .def_readonly("quadruples", &SubmodularityReport::quadruples)
        .def_readonly("max_violation", &SubmodularityReport::max_violation)
        .def("passes", &SubmodularityReport::pass);
    m.def(
        "check_submodularity",
        [](const CostModel& cost, const std::shared_ptr<StateGrid>& grid, const TimeGrid& time,
           std::size_t pairs, double tol, std::uint64_t seed) {
            return check_submodularity(cost, *grid, time,
                                       random_comparable_pairs(grid, pairs, seed), tol);
        },
        py::arg("cost"), py::arg("grid"), py::arg("time"), py::arg("pairs") = 50,
        py::arg("tol") = 1e-10, py::arg("seed") = 42);

    py::class_<MfgProblem>(m, "MfgProblem")
        .def(py::init([](const Dynamics& dyn, const CostModel& cost, const ControlSet& controls,
                         const DiscreteMeasure& initial, const TimeGrid& time) {
                 return MfgProblem{dyn, cost, controls, initial, time};
             }),
             py::arg("dynamics"), py::arg("cost"), py::arg("controls"), py::arg("initial"),
             py::arg("time"));

    py::class_<MfgSolution>(m, "MfgSolution")
        .def_readonly("flow", &MfgSolution::flow)
        .def_readonly("residual", &MfgSolution::residual)
        .def_readonly("kind", &MfgSolution::kind)
        .def_readonly("converged", &MfgSolution::converged)
        .def_readonly("iterations", &MfgSolution::iterations);

    py::class_<IterationTrace>(m, "IterationTrace")
        .def_readonly("residuals", &IterationTrace::residuals)
        .def_readonly("monotone", &IterationTrace::monotone)
        .def_readonly("costs", &IterationTrace::costs)
        .def_readonly("flows", &IterationTrace::flows);

    py::class_<LearnResult>(m, "LearnResult")
        .def_readonly("solution", &LearnResult::solution)
        .def_readonly("trace", &LearnResult::trace);

    m.def("learn_from_below", &learn_from_below, py::arg("problem"), py::arg("tol") = 1e-8,
          py::arg("max_iter") = 200,
          "Iterate the best response from inf L up to the minimal equilibrium.");
    m.def("learn_from_above", &learn_from_above, py::arg("problem"), py::arg("tol") = 1e-8,
          py::arg("max_iter") = 200);
    m.def("residual", &residual, py::arg("problem"), py::arg("flow"),
          py::arg("tie_break") = TieBreak::Lowest);
    m.def(
        "best_response",
        [](const MfgProblem& problem, const MeasureFlow& mu, TieBreak tie) {
            return best_response(problem.dynamics, problem.cost, problem.controls, mu,
                                 problem.initial, tie);
        },
        py::arg("problem"), py::arg("mu"), py::arg("tie_break") = TieBreak::Lowest);
    m.def("inf_flow", &inf_flow);
    m.def("sup_flow", &sup_flow);

    py::class_<RunConfig>(m, "RunConfig")
        .def_static("load", &RunConfig::load, py::arg("path"))
        .def_static("from_json_text", &RunConfig::from_json_text, py::arg("text"))
        .def_property_readonly("name", [](const RunConfig& c) { return c.name; })
        .def("problem", [](const RunConfig& c) { return c.problem(); })
        .def_property_readonly("tol", [](const RunConfig& c) { return c.solver.tol; })
        .def_property_readonly("max_iter", [](const RunConfig& c) { return c.solver.max_iter; });

    m.def(
        "solve_config",
        [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
            auto cfg = RunConfig::load(config_path);
            std::ostringstream log;
            const int rc = cmd_solve(cfg, out_dir, log);
            return py::make_tuple(rc, log.str());
        },
        py::arg("config_path"), py::arg("out_dir"),
        "Run the solve command for a config file; returns (exit_code, log).");
    m.def(
        "verify_config",
        [](const std::filesystem::path& config_path) {
            auto cfg = RunConfig::load(config_path);
            std::ostringstream report;
            const int rc = cmd_verify(cfg, report);
            return py::make_tuple(rc, report.str());
        },
        py::arg("config_path"));
}
