#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "brenier/ot.hpp"

namespace brenier {

/// The target support points ("vector quantiles"), one per row.
struct QuantileSet {
  Matrix points;  // k x d
  bool simplex_constrained = false;

  Eigen::Index bins() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

enum class InitStrategy { response_subsample, random_simplex, provided };

enum class FitStatus { converged_objective, converged_step, max_iters, stalled_at_kink };

std::string to_string(InitStrategy s);
std::string to_string(FitStatus s);
InitStrategy init_strategy_from_string(const std::string& s);
FitStatus fit_status_from_string(const std::string& s);

struct FitConfig {
  int k = 15;
  int max_outer_iters = 200;
  double fd_epsilon = 1e-6;
  double step_tolerance = 1e-10;
  double objective_tolerance = 1e-8;
  std::uint64_t seed = 0;
  bool simplex_constrained = true;
  InitStrategy init_strategy = InitStrategy::response_subsample;
  Matrix initial_quantiles;  // used when init_strategy == provided

  void validate() const;  // throws on k < 1, nonpositive eps/tolerances
};

struct LabeledDataset {
  enum class ResponseKind { one_hot, real };

  Matrix Z;  // n x d inputs
  Matrix Y;  // n x d responses
  ResponseKind response_kind = ResponseKind::real;

  Eigen::Index size() const { return Z.rows(); }
  Eigen::Index dim() const { return Z.cols(); }
  void validate() const;
};

/// Fitted artifact: quantiles U, the target dual potential g from the final
/// inner solve (normalized g[0] = 0), and fit diagnostics.
struct BrenierModel {
  QuantileSet quantiles;
  Vector dual_g;
  double train_objective = 0.0;
  int iterations_used = 0;
  FitStatus status = FitStatus::max_iters;
  FitConfig config;
  int input_dim = 0;
};

struct LaguerrePrediction {
  Vector u;
  int bin_index = 0;
};

/// Bi-level objective at fixed quantiles: builds C = squared_l2_cost(Z, U),
/// solves the inner transport exactly and returns
/// (1/n) * ||Y - n P U||_F^2 together with the full inner solution.
std::pair<double, OtSolution> outer_objective(const QuantileSet& U, const LabeledDataset& data);

/// Central finite differences of the outer objective in each quantile entry,
/// re-solving the inner transport per evaluation.
Matrix fd_gradient(const LabeledDataset& data, const QuantileSet& U, double eps);

/// Starting quantiles for the fit, per config.init_strategy. All randomness
/// comes from config.seed.
QuantileSet initialize_quantiles(const LabeledDataset& data, const FitConfig& config);

/// Projected-gradient fit of the quantile set with backtracking line search;
/// accepted steps never increase the objective. Rows are projected onto the
/// simplex when constrained.
BrenierModel fit(const LabeledDataset& data, const FitConfig& config);

/// Training predictions by the barycentric map: row i of the result is
/// (sum_j P_ij u_j) / (sum_j P_ij), i.e. n * sum_j P_ij u_j.
Matrix barycentric_predict_train(const BrenierModel& model, const LabeledDataset& data);
Matrix barycentric_map(const TransportPlan& plan, const QuantileSet& U);

/// Laguerre-map prediction: the quantile whose cell contains z,
/// j* = argmin_j ||z - u_j||^2 - g_j, ties to the lowest index.
LaguerrePrediction laguerre_assign(const QuantileSet& U, const Vector& g, const Vector& z);
LaguerrePrediction laguerre_predict(const BrenierModel& model, const Vector& z);

/// Rowwise Laguerre prediction for a batch of query points.
Matrix laguerre_predict_rows(const BrenierModel& model, const Matrix& Z);

/// The explicit convex potential built from the inner duals,
///   Phi(z) = max_j <z,u_j> - ||u_j||^2/2 + g_j/2
/// (the halving converts the solver's unscaled-cost duals to half-cost ones).
/// Every barycentric training output is a subgradient of Phi at its input.
double brenier_potential(const BrenierModel& model, const Vector& z);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
Vector project_row_to_simplex(const Vector& v);

}  // namespace brenier
