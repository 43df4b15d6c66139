#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "brenier/calibration.hpp"
#include "brenier/io.hpp"
#include "brenier/monotone.hpp"
#include "brenier/pav.hpp"
#include "brenier/sim.hpp"

namespace py = pybind11;
using namespace brenier;

namespace {

FitConfig config_from_kwargs(int k, int max_outer_iters, double fd_epsilon, double step_tolerance,
                             double objective_tolerance, std::uint64_t seed,
                             bool simplex_constrained, const std::string& init_strategy) {
  FitConfig config;
  config.k = k;
  config.max_outer_iters = max_outer_iters;
  config.fd_epsilon = fd_epsilon;
  config.step_tolerance = step_tolerance;
  config.objective_tolerance = objective_tolerance;
  config.seed = seed;
  config.simplex_constrained = simplex_constrained;
  config.init_strategy = init_strategy_from_string(init_strategy);
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cyclically monotone multi-output regression via exact optimal transport";

  py::class_<TransportPlan>(m, "TransportPlan")
      .def_property_readonly("weights", [](const TransportPlan& p) { return p.weights; });

  py::class_<DualPotentials>(m, "DualPotentials")
      .def_property_readonly("f", [](const DualPotentials& d) { return d.f; })
      .def_property_readonly("g", [](const DualPotentials& d) { return d.g; });

  py::class_<OtSolution>(m, "OtSolution")
      .def_property_readonly("plan", [](const OtSolution& s) { return s.plan.weights; })
      .def_property_readonly("f", [](const OtSolution& s) { return s.duals.f; })
      .def_property_readonly("g", [](const OtSolution& s) { return s.duals.g; })
      .def_readonly("primal_cost", &OtSolution::primal_cost)
      .def_readonly("dual_value", &OtSolution::dual_value);

  py::class_<BrenierModel>(m, "BrenierModel")
      .def_property_readonly("quantiles",
                             [](const BrenierModel& b) { return b.quantiles.points; })
      .def_property_readonly("simplex_constrained",
                             [](const BrenierModel& b) { return b.quantiles.simplex_constrained; })
      .def_property_readonly("dual_g", [](const BrenierModel& b) { return b.dual_g; })
      .def_readonly("train_objective", &BrenierModel::train_objective)
      .def_readonly("iterations_used", &BrenierModel::iterations_used)
      .def_readonly("input_dim", &BrenierModel::input_dim)
      .def_property_readonly("status",
                             [](const BrenierModel& b) { return to_string(b.status); })
      .def("predict",
           [](const BrenierModel& b, const Vector& z) {
             const LaguerrePrediction p = laguerre_predict(b, z);
             return py::make_tuple(p.u, p.bin_index);
           },
           py::arg("z"), "Laguerre-map prediction: (quantile, bin index)")
      .def("predict_rows",
           [](const BrenierModel& b, const Matrix& Z) { return laguerre_predict_rows(b, Z); },
           py::arg("Z"))
      .def("potential",
           [](const BrenierModel& b, const Vector& z) { return brenier_potential(b, z); },
           py::arg("z"), "Explicit convex potential built from the inner duals");

  py::class_<SimModel>(m, "SimModel")
      .def_property_readonly("W", [](const SimModel& s) { return s.W; })
      .def_property_readonly("quantiles", [](const SimModel& s) { return s.quantiles.points; })
      .def_property_readonly("dual_g", [](const SimModel& s) { return s.dual_g; })
      .def_readonly("lambda_W", &SimModel::lambda_W)
      .def_readonly("history", &SimModel::history)
      .def("predict", [](const SimModel& s, const Vector& x) { return sim_predict(s, x); },
           py::arg("x"))
      .def("predict_rows",
           [](const SimModel& s, const Matrix& X) { return sim_predict_rows(s, X); },
           py::arg("X"));

  m.def("squared_l2_cost",
        [](const Matrix& Z, const Matrix& U) { return squared_l2_cost(Z, U).entries; },
        py::arg("Z"), py::arg("U"), "Pairwise squared Euclidean costs");

  m.def("solve_discrete_ot",
        [](const Matrix& C) { return solve_discrete_ot(CostMatrix{C}); }, py::arg("C"),
        "Exact discrete optimal transport with uniform marginals");

  m.def("brute_force_monge",
        [](const Matrix& C) {
          const MongeResult r = brute_force_monge(CostMatrix{C});
          return py::make_tuple(r.permutation, r.cost);
        },
        py::arg("C"), "Exhaustive Monge solver for square instances up to n = 9");

  m.def("recover_vertex_plan",
        [](const OtSolution& sol) { return recover_vertex_plan(sol).weights; }, py::arg("solution"),
        "Round a square optimal plan to a permutation vertex with equal cost");

  m.def("pav_fit", &pav_fit, py::arg("z"), py::arg("y"),
        "1D isotonic regression by pool adjacent violators");

  m.def("check_cyclic_monotone",
        [](const Matrix& inputs, const Matrix& outputs, int max_cycle_len, double tol) {
          const CycleReport r = check_cyclic_monotone({inputs, outputs}, max_cycle_len, tol);
          return py::make_tuple(r.holds,
                                r.witness ? py::cast(*r.witness) : py::object(py::none()),
                                r.margin);
        },
        py::arg("inputs"), py::arg("outputs"), py::arg("max_cycle_len") = 4,
        py::arg("tol") = 1e-8, "Returns (holds, witness or None, margin)");

  m.def("check_weak_iop",
        [](const Matrix& inputs, const Matrix& outputs, double tol) {
          const IopReport r = check_weak_iop(inputs, outputs, tol);
          return py::make_tuple(r.holds,
                                r.witness ? py::cast(*r.witness) : py::object(py::none()));
        },
        py::arg("inputs"), py::arg("outputs"), py::arg("tol") = 1e-8);

  m.def("project_row_to_simplex", &project_row_to_simplex, py::arg("v"));

  m.def("fit",
        [](const Matrix& Z, const Matrix& Y, int k, int max_outer_iters, double fd_epsilon,
           double step_tolerance, double objective_tolerance, std::uint64_t seed,
           bool simplex_constrained, const std::string& init_strategy) {
          const LabeledDataset data{Z, Y, LabeledDataset::ResponseKind::real};
          return fit(data, config_from_kwargs(k, max_outer_iters, fd_epsilon, step_tolerance,
                                              objective_tolerance, seed, simplex_constrained,
                                              init_strategy));
        },
        py::arg("Z"), py::arg("Y"), py::arg("k"), py::arg("max_outer_iters") = 200,
        py::arg("fd_epsilon") = 1e-6, py::arg("step_tolerance") = 1e-10,
        py::arg("objective_tolerance") = 1e-8, py::arg("seed") = 0,
        py::arg("simplex_constrained") = false, py::arg("init_strategy") = "response_subsample",
        "Fit the bi-level quantile regression on (Z, Y)");

  m.def("barycentric_predict_train",
        [](const BrenierModel& model, const Matrix& Z, const Matrix& Y) {
          return barycentric_predict_train(model,
                                           {Z, Y, LabeledDataset::ResponseKind::real});
        },
        py::arg("model"), py::arg("Z"), py::arg("Y"));

  m.def("outer_objective",
        [](const Matrix& U, bool simplex_constrained, const Matrix& Z, const Matrix& Y) {
          const auto [value, sol] =
              outer_objective({U, simplex_constrained}, {Z, Y, LabeledDataset::ResponseKind::real});
          return py::make_tuple(value, sol);
        },
        py::arg("U"), py::arg("simplex_constrained"), py::arg("Z"), py::arg("Y"));

  m.def("fit_recalibrator",
        [](const Matrix& probs, const Matrix& labels, int k, int max_outer_iters,
           double fd_epsilon, double step_tolerance, double objective_tolerance,
           std::uint64_t seed, const std::string& init_strategy) {
          return fit_recalibrator({probs, labels},
                                  config_from_kwargs(k, max_outer_iters, fd_epsilon,
                                                     step_tolerance, objective_tolerance, seed,
                                                     true, init_strategy));
        },
        py::arg("probs"), py::arg("labels"), py::arg("k") = 15, py::arg("max_outer_iters") = 200,
        py::arg("fd_epsilon") = 1e-6, py::arg("step_tolerance") = 1e-10,
        py::arg("objective_tolerance") = 1e-8, py::arg("seed") = 0,
        py::arg("init_strategy") = "random_simplex");

  m.def("recalibrate", &recalibrate, py::arg("model"), py::arg("probs"));

  m.def("l1_calibration_error",
        [](const Matrix& probs, const Matrix& labels, int bins_per_axis) {
          return l1_calibration_error(probs, labels, SimplexBinning{bins_per_axis});
        },
        py::arg("probs"), py::arg("labels"), py::arg("bins_per_axis") = 15);
  m.def("classwise_ce", &classwise_ce, py::arg("probs"), py::arg("labels"), py::arg("bins") = 15);
  m.def("confidence_ce", &confidence_ce, py::arg("probs"), py::arg("labels"),
        py::arg("bins") = 15);
  m.def("accuracy", &accuracy, py::arg("probs"), py::arg("labels"));

  m.def("calibration_map_grid",
        [](const BrenierModel& model, int resolution) {
          py::list out;
          for (const GridPoint& p : calibration_map_grid(model, resolution)) {
            out.append(py::make_tuple(p.q, p.output, p.bin_index));
          }
          return out;
        },
        py::arg("model"), py::arg("resolution"));

  m.def("fit_sim",
        [](const Matrix& X, const Matrix& Y, int k, double lambda_W, int T_max, int inner_iters,
           int max_outer_iters, double fd_epsilon, double step_tolerance,
           double objective_tolerance, std::uint64_t seed) {
          return fit_sim(X, Y,
                         config_from_kwargs(k, max_outer_iters, fd_epsilon, step_tolerance,
                                            objective_tolerance, seed, true,
                                            "response_subsample"),
                         lambda_W, T_max, inner_iters);
        },
        py::arg("X"), py::arg("Y"), py::arg("k") = 30, py::arg("lambda_W") = 1e-3,
        py::arg("T_max") = 100, py::arg("inner_iters") = 25, py::arg("max_outer_iters") = 200,
        py::arg("fd_epsilon") = 1e-6, py::arg("step_tolerance") = 1e-10,
        py::arg("objective_tolerance") = 1e-8, py::arg("seed") = 0);

  m.def("sim_objective",
        [](const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& Y) {
          return sim_objective(W, {U, true}, X, Y);
        },
        py::arg("W"), py::arg("U"), py::arg("X"), py::arg("Y"));

  m.def("save_model",
        [](const std::string& path, const BrenierModel& model) { save_model(path, model); },
        py::arg("path"), py::arg("model"));
  m.def("save_sim_model",
        [](const std::string& path, const SimModel& model) { save_model(path, model); },
        py::arg("path"), py::arg("model"));
  m.def("load_brenier_model", &load_brenier_model, py::arg("path"));
  m.def("load_sim_model", &load_sim_model, py::arg("path"));

  m.attr("__version__") = "0.1.0";
}
