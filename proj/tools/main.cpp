#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "brenier/io.hpp"
#include "brenier/monotone.hpp"
#include "brenier/pav.hpp"

namespace {

using namespace brenier;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
    out << content;
    if (!out) throw std::runtime_error(out_path + ": write failed");
  }
}

struct FitOptions {
  std::string data_path;
  std::string out_path;
  std::string mode = "brenier";
  std::string init = "response_subsample";
  FitConfig config;
  bool simplex = false;
};

void add_config_flags(CLI::App* cmd, FitConfig& config) {
  cmd->add_option("--seed", config.seed, "Random seed (all randomness flows from it)");
  cmd->add_option("--max-outer-iters", config.max_outer_iters, "Outer iteration budget");
  cmd->add_option("--fd-epsilon", config.fd_epsilon, "Finite-difference perturbation size");
  cmd->add_option("--step-tolerance", config.step_tolerance, "Stop when the step norm falls below");
  cmd->add_option("--objective-tolerance", config.objective_tolerance,
                  "Stop when the objective decrease falls below");
}

int run_fit(const FitOptions& opt) {
  if (opt.mode == "1d-oracle") {
    LabeledDataset data = load_zy_pairs(opt.data_path);
    if (data.dim() != 1) {
      throw std::runtime_error("fit --mode 1d-oracle requires 1-dimensional data");
    }
    const Vector fitted = pav_fit(data.Z.col(0), data.Y.col(0));
    std::ostringstream out;
    out << "z,y,yhat\n";
    for (Eigen::Index i = 0; i < fitted.size(); ++i) {
      out << format_double(data.Z(i, 0)) << ',' << format_double(data.Y(i, 0)) << ','
          << format_double(fitted[i]) << '\n';
    }
    emit(opt.out_path, out.str());
    return 0;
  }
  if (opt.mode != "brenier") {
    throw std::runtime_error("unknown fit mode '" + opt.mode + "' (brenier or 1d-oracle)");
  }
  LabeledDataset data = load_zy_pairs(opt.data_path);
  FitConfig config = opt.config;
  config.simplex_constrained = opt.simplex;
  config.init_strategy = init_strategy_from_string(opt.init);
  BrenierModel model = fit(data, config);
  emit(opt.out_path, model_to_json(model));
  return 0;
}

std::string prediction_csv(const BrenierModel& model, const Matrix& Z) {
  std::ostringstream out;
  for (Eigen::Index c = 0; c < model.quantiles.dim(); ++c) out << "yhat" << c << ',';
  out << "bin\n";
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const LaguerrePrediction pred = laguerre_predict(model, Z.row(i).transpose());
    for (Eigen::Index c = 0; c < pred.u.size(); ++c) out << format_double(pred.u[c]) << ',';
    out << pred.bin_index << '\n';
  }
  return out.str();
}

int main_impl(int argc, char** argv) {
  CLI::App app{"BrenierIR: cyclically monotone multi-output regression via exact optimal transport"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a BrenierIR model on (z, y) pairs");
  fit_cmd->add_option("--data", fit_opt.data_path, "Training CSV (z0.., y0.. columns)")->required();
  fit_cmd->add_option("--k", fit_opt.config.k, "Number of quantile bins");
  fit_cmd->add_option("--mode", fit_opt.mode, "brenier (default) or 1d-oracle (PAV)");
  fit_cmd->add_option("--out", fit_opt.out_path, "Output path (stdout when omitted)");
  fit_cmd->add_option("--init", fit_opt.init, "response_subsample | random_simplex");
  fit_cmd->add_flag("--simplex,!--no-simplex", fit_opt.simplex,
                    "Constrain quantile rows to the probability simplex");
  add_config_flags(fit_cmd, fit_opt.config);

  std::string predict_model, predict_data, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Laguerre-map predictions of a fitted model");
  predict_cmd->add_option("--model", predict_model, "Model JSON")->required();
  predict_cmd->add_option("--data", predict_data, "CSV with z0.. columns")->required();
  predict_cmd->add_option("--out", predict_out, "Output path (stdout when omitted)");

  FitOptions cal_opt;
  cal_opt.config.k = 15;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit a recalibrator on (probs, label) rows");
  cal_cmd->add_option("--probs", cal_opt.data_path, "Calibration CSV (p0.., label)")->required();
  cal_cmd->add_option("--k", cal_opt.config.k, "Number of quantile bins");
  cal_cmd->add_option("--out", cal_opt.out_path, "Output path (stdout when omitted)");
  cal_cmd->add_option("--init", cal_opt.init, "response_subsample | random_simplex");
  add_config_flags(cal_cmd, cal_opt.config);

  std::string eval_probs, eval_model;
  int eval_bins = 15;
  auto* eval_cmd = app.add_subcommand("eval-calib", "Calibration metrics of raw or recalibrated scores");
  eval_cmd->add_option("--probs", eval_probs, "CSV (p0.., label)")->required();
  eval_cmd->add_option("--model", eval_model, "Recalibrator JSON; metrics use its outputs");
  eval_cmd->add_option("--bins", eval_bins, "Bins per axis for all binned metrics");

  std::string grid_model, grid_out;
  int grid_resolution = 15;
  auto* grid_cmd = app.add_subcommand("map-grid", "Laguerre map over a 2-simplex grid (d = 3)");
  grid_cmd->add_option("--model", grid_model, "Model JSON")->required();
  grid_cmd->add_option("--resolution", grid_resolution, "Grid subdivisions per axis");
  grid_cmd->add_option("--out", grid_out, "Output path (stdout when omitted)");

  FitOptions sim_opt;
  sim_opt.config.k = 30;
  double lambda_w = 1e-3;
  int t_max = 100;
  int inner_iters = 25;
  auto* sim_cmd = app.add_subcommand("sim-fit", "Fit a Brenier single-index model");
  sim_cmd->add_option("--data", sim_opt.data_path, "Covariate CSV (x0.., label)")->required();
  sim_cmd->add_option("--k", sim_opt.config.k, "Number of quantile bins");
  sim_cmd->add_option("--lambda-w", lambda_w, "Ridge strength on W");
  sim_cmd->add_option("--t-max", t_max, "Alternating iterations");
  sim_cmd->add_option("--inner-iters", inner_iters, "Inner descent iterations per step");
  sim_cmd->add_option("--out", sim_opt.out_path, "Output path (stdout when omitted)");
  add_config_flags(sim_cmd, sim_opt.config);

  std::string simp_model, simp_data, simp_out;
  auto* simp_cmd = app.add_subcommand("sim-predict", "Predictions of a fitted single-index model");
  simp_cmd->add_option("--model", simp_model, "SIM model JSON")->required();
  simp_cmd->add_option("--data", simp_data, "CSV with x0.. columns")->required();
  simp_cmd->add_option("--out", simp_out, "Output path (stdout when omitted)");

  std::string cm_data;
  int cm_max_len = 4;
  double cm_tol = 1e-8;
  auto* cm_cmd = app.add_subcommand("verify-cm", "Check cyclic monotonicity of (z, u) pairs");
  cm_cmd->add_option("--data", cm_data, "CSV with z0.., u0.. columns")->required();
  cm_cmd->add_option("--max-cycle-len", cm_max_len, "Longest cycle length to enumerate");
  cm_cmd->add_option("--tol", cm_tol, "Violation margin tolerance");

  std::string ot_cost, ot_out;
  auto* ot_cmd = app.add_subcommand("ot-solve", "Exact discrete OT with uniform marginals");
  ot_cmd->add_option("--cost", ot_cost, "Cost CSV (c0.. columns, one row per source)")->required();
  ot_cmd->add_option("--out", ot_out, "Write the full solution JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  if (fit_cmd->parsed()) return run_fit(fit_opt);

  if (predict_cmd->parsed()) {
    const BrenierModel model = load_brenier_model(predict_model);
    const Matrix Z = load_points(predict_data, "z", model.input_dim);
    emit(predict_out, prediction_csv(model, Z));
    return 0;
  }

  if (cal_cmd->parsed()) {
    const CalibrationSet cal = load_probs_labels(cal_opt.data_path);
    FitConfig config = cal_opt.config;
    config.init_strategy = init_strategy_from_string(cal_opt.init);
    const BrenierModel model = fit_recalibrator(cal, config);
    emit(cal_opt.out_path, model_to_json(model));
    return 0;
  }

  if (eval_cmd->parsed()) {
    const CalibrationSet cal = load_probs_labels(eval_probs);
    Matrix scores = cal.probs;
    if (!eval_model.empty()) {
      scores = recalibrate(load_brenier_model(eval_model), cal.probs);
    }
    std::ostringstream out;
    out << "l1_ce," << format_double(l1_calibration_error(scores, cal.labels,
                                                          SimplexBinning{eval_bins}))
        << "\nclasswise_ce," << format_double(classwise_ce(scores, cal.labels, eval_bins))
        << "\nconfidence_ce," << format_double(confidence_ce(scores, cal.labels, eval_bins))
        << "\naccuracy," << format_double(accuracy(scores, cal.labels)) << '\n';
    std::cout << out.str();
    return 0;
  }

  if (grid_cmd->parsed()) {
    const BrenierModel model = load_brenier_model(grid_model);
    const auto grid = calibration_map_grid(model, grid_resolution);
    std::ostringstream out;
    out << "q0,q1,q2,out0,out1,out2,bin\n";
    for (const GridPoint& p : grid) {
      for (Eigen::Index c = 0; c < 3; ++c) out << format_double(p.q[c]) << ',';
      for (Eigen::Index c = 0; c < 3; ++c) out << format_double(p.output[c]) << ',';
      out << p.bin_index << '\n';
    }
    emit(grid_out, out.str());
    return 0;
  }

  if (sim_cmd->parsed()) {
    const CovariateDataset data = load_covariates_labels(sim_opt.data_path);
    const SimModel model = fit_sim(data.X, data.Y, sim_opt.config, lambda_w, t_max, inner_iters);
    emit(sim_opt.out_path, model_to_json(model));
    return 0;
  }

  if (simp_cmd->parsed()) {
    const SimModel model = load_sim_model(simp_model);
    const Matrix X = load_points(simp_data, "x", model.covariate_dim);
    std::ostringstream out;
    for (Eigen::Index c = 0; c < model.W.rows(); ++c) out << "yhat" << c << ',';
    out << "bin\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const LaguerrePrediction pred =
          laguerre_assign(model.quantiles, model.dual_g, model.W * X.row(i).transpose());
      for (Eigen::Index c = 0; c < pred.u.size(); ++c) out << format_double(pred.u[c]) << ',';
      out << pred.bin_index << '\n';
    }
    emit(simp_out, out.str());
    return 0;
  }

  if (cm_cmd->parsed()) {
    GraphSample graph;
    {
      const CsvTable table = read_csv(cm_data);
      int dim = 0;
      while (table.column("z" + std::to_string(dim)) >= 0) ++dim;
      if (dim == 0) throw std::runtime_error(cm_data + ": missing column 'z0'");
      graph.inputs = load_points(cm_data, "z", dim);
      graph.outputs = load_points(cm_data, "u", dim);
    }
    const CycleReport report = check_cyclic_monotone(graph, cm_max_len, cm_tol);
    std::ostringstream out;
    out << "holds," << (report.holds ? "true" : "false") << '\n';
    if (!report.holds) {
      out << "witness,";
      for (std::size_t t = 0; t < report.witness->size(); ++t) {
        if (t) out << ';';
        out << (*report.witness)[t];
      }
      out << "\nmargin," << format_double(report.margin) << '\n';
    }
    std::cout << out.str();
    return 0;
  }

  if (ot_cmd->parsed()) {
    const CsvTable table = read_csv(ot_cost);
    int k = 0;
    while (table.column("c" + std::to_string(k)) >= 0) ++k;
    if (k == 0) throw std::runtime_error(ot_cost + ": missing column 'c0'");
    CostMatrix C{load_points(ot_cost, "c", k)};
    if (C.entries.minCoeff() < 0.0) {
      throw std::runtime_error(ot_cost + ": negative cost entries");
    }
    const OtSolution sol = solve_discrete_ot(C);
    std::cout << "primal_cost," << format_double(sol.primal_cost) << "\ndual_value,"
              << format_double(sol.dual_value) << '\n';
    if (!ot_out.empty()) {
      nlohmann::json j{{"n", static_cast<int>(C.rows())},
                       {"k", static_cast<int>(C.cols())},
                       {"primal_cost", sol.primal_cost},
                       {"dual_value", sol.dual_value},
                       {"f", std::vector<double>(sol.duals.f.data(), sol.duals.f.data() + sol.duals.f.size())},
                       {"g", std::vector<double>(sol.duals.g.data(), sol.duals.g.data() + sol.duals.g.size())}};
      std::vector<double> plan;
      plan.reserve(static_cast<std::size_t>(C.rows() * C.cols()));
      for (Eigen::Index i = 0; i < C.rows(); ++i) {
        for (Eigen::Index jdx = 0; jdx < C.cols(); ++jdx) {
          plan.push_back(sol.plan.weights(i, jdx));
        }
      }
      j["plan"] = plan;
      emit(ot_out, j.dump(2) + "\n");
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
