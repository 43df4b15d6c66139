#pragma once

#include <vector>

#include "brenier/brenier.hpp"

namespace brenier {

/// Brenier single-index model: a linear index W composed with the Laguerre
/// map of a fitted quantile set.
struct SimModel {
  Matrix W;  // d x D
  QuantileSet quantiles;
  Vector dual_g;
  double lambda_W = 1e-3;
  std::vector<double> history;  // objective after each accepted W-/U-step
  FitConfig config;
  int covariate_dim = 0;  // D
};

/// J(W, U): the bi-level objective with index projections z_i = W x_i.
double sim_objective(const Matrix& W, const QuantileSet& U, const Matrix& X, const Matrix& Y);

/// Alternating optimization of Algorithm-style W- and U-steps, each a bounded
/// finite-difference descent (inner_iters per step). W-steps accept on the
/// ridge composite J + (lambda_W/2)||W||_F^2, preferring steps that also keep
/// J from increasing; U-steps accept on J alone. Returns the best-seen pair.
SimModel fit_sim(const Matrix& X, const Matrix& Y, const FitConfig& config,
                 double lambda_W = 1e-3, int T_max = 100, int inner_iters = 25);

/// Laguerre prediction at z = W x.
Vector sim_predict(const SimModel& model, const Vector& x);
Matrix sim_predict_rows(const SimModel& model, const Matrix& X);

}  // namespace brenier
