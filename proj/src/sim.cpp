#include "brenier/sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace brenier {

namespace {

void check_shapes(const Matrix& W, const QuantileSet& U, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) throw std::invalid_argument("sim: X and Y row counts differ");
  if (W.cols() != X.cols()) {
    throw std::invalid_argument("sim: W column count does not match covariate dimension");
  }
  if (W.rows() != Y.cols() || U.dim() != Y.cols()) {
    throw std::invalid_argument("sim: index/quantile output dimension does not match Y");
  }
  if (!X.allFinite() || !Y.allFinite() || !W.allFinite()) {
    throw std::invalid_argument("sim: non-finite values");
  }
}

double objective_at(const Matrix& W, const QuantileSet& U, const Matrix& X, const Matrix& Y) {
  LabeledDataset data{X * W.transpose(), Y, LabeledDataset::ResponseKind::real};
  return outer_objective(U, data).first;
}

}  // namespace

double sim_objective(const Matrix& W, const QuantileSet& U, const Matrix& X, const Matrix& Y) {
  check_shapes(W, U, X, Y);
  return objective_at(W, U, X, Y);
}

SimModel fit_sim(const Matrix& X, const Matrix& Y, const FitConfig& config, double lambda_W,
                 int T_max, int inner_iters) {
  FitConfig cfg = config;
  cfg.simplex_constrained = true;  // quantiles live on the simplex
  cfg.validate();
  if (T_max < 1) throw std::invalid_argument("fit_sim: T_max must be >= 1");
  if (inner_iters < 1) throw std::invalid_argument("fit_sim: inner_iters must be >= 1");
  if (lambda_W < 0) throw std::invalid_argument("fit_sim: lambda_W must be >= 0");
  if (X.rows() != Y.rows()) throw std::invalid_argument("fit_sim: X and Y row counts differ");
  if (X.rows() < 1) throw std::invalid_argument("fit_sim: empty data");
  if (!X.allFinite() || !Y.allFinite()) throw std::invalid_argument("fit_sim: non-finite data");
  if (cfg.k > X.rows()) {
    throw std::invalid_argument("fit_sim: k exceeds the number of samples");
  }

  const Eigen::Index D = X.cols();
  const Eigen::Index d = Y.cols();

  std::mt19937_64 rng(cfg.seed);
  auto uniform01 = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto gaussian = [&]() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };
  // Entry scale chosen so initial projections land at the simplex scale,
  // E||W x||^2 ~ 1; a collapsed index mixes the bins and stalls the fit.
  const double x_norm = std::sqrt(X.rowwise().squaredNorm().mean());
  const double w_scale = 1.0 / std::max(1e-9, x_norm * std::sqrt(static_cast<double>(d)));
  Matrix W(d, D);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < D; ++c) W(r, c) = w_scale * gaussian();
  }

  LabeledDataset init_data{X * W.transpose(), Y, LabeledDataset::ResponseKind::real};
  init_data.validate();
  QuantileSet U = initialize_quantiles(init_data, cfg);

  const double ridge = 0.5 * lambda_W;
  auto composite_at = [&](const Matrix& w, const QuantileSet& u) {
    return objective_at(w, u, X, Y) + ridge * w.squaredNorm();
  };

  double J = objective_at(W, U, X, Y);
  std::vector<double> history{J};
  Matrix best_W = W;
  QuantileSet best_U = U;
  double best_J = J;
  constexpr double alpha_floor = 1e-8;
  constexpr double alpha_cap = 1e6;

  for (int t = 0; t < T_max; ++t) {
    // W-step: descend the ridge composite. Prefer steps that also keep J
    // from increasing; fall back to composite-only acceptance so a dominant
    // ridge can still shrink W. The index enters J only through the inner
    // plan, so J is piecewise constant in W; the probe must be wide enough
    // to cross assignment boundaries or the quotient sees only the ridge.
    const double w_probe = std::max(cfg.fd_epsilon, 0.02 * (1.0 + W.norm()));
    double composite = J + ridge * W.squaredNorm();
    double alpha_init = 1.0;
    for (int inner = 0; inner < inner_iters; ++inner) {
      Matrix G(d, D);
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < D; ++c) {
          const double saved = W(r, c);
          W(r, c) = saved + w_probe;
          const double up = composite_at(W, U);
          W(r, c) = saved - w_probe;
          const double down = composite_at(W, U);
          W(r, c) = saved;
          G(r, c) = (up - down) / (2.0 * w_probe);
        }
      }
      bool accepted = false;
      Matrix W_new;
      double J_new = 0.0, composite_new = 0.0, alpha_used = 0.0;
      for (int pass = 0; pass < 2 && !accepted; ++pass) {
        double alpha = alpha_init;
        while (alpha >= alpha_floor) {
          Matrix trial = W - alpha * G;
          const double J_trial = objective_at(trial, U, X, Y);
          const double composite_trial = J_trial + ridge * trial.squaredNorm();
          const bool ok = composite_trial <= composite && (pass == 1 || J_trial <= J);
          if (ok) {
            W_new = std::move(trial);
            J_new = J_trial;
            composite_new = composite_trial;
            alpha_used = alpha;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      if (!accepted) break;
      const double decrease = composite - composite_new;
      W = std::move(W_new);
      J = J_new;
      composite = composite_new;
      history.push_back(J);
      alpha_init = std::min(alpha_cap, 2.0 * alpha_used);
      if (J < best_J) {
        best_J = J;
        best_W = W;
        best_U = U;
      }
      if (decrease <= cfg.objective_tolerance) break;
    }

    // U-step: projected descent of J alone over the quantiles.
    LabeledDataset data{X * W.transpose(), Y, LabeledDataset::ResponseKind::real};
    alpha_init = 1.0;
    for (int inner = 0; inner < inner_iters; ++inner) {
      const Matrix G = fd_gradient(data, U, cfg.fd_epsilon);
      bool accepted = false;
      double alpha = alpha_init;
      while (alpha >= alpha_floor) {
        QuantileSet trial = U;
        trial.points -= alpha * G;
        for (Eigen::Index j = 0; j < trial.points.rows(); ++j) {
          trial.points.row(j) = project_row_to_simplex(trial.points.row(j).transpose()).transpose();
        }
        const double J_trial = outer_objective(trial, data).first;
        if (J_trial <= J) {
          const double decrease = J - J_trial;
          U = std::move(trial);
          J = J_trial;
          history.push_back(J);
          alpha_init = std::min(alpha_cap, 2.0 * alpha);
          accepted = true;
          if (J < best_J) {
            best_J = J;
            best_W = W;
            best_U = U;
          }
          if (decrease <= cfg.objective_tolerance) inner = inner_iters;  // converged
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }
  }

  SimModel model;
  model.W = best_W;
  model.quantiles = best_U;
  model.lambda_W = lambda_W;
  model.history = std::move(history);
  model.config = cfg;
  model.covariate_dim = static_cast<int>(D);

  const CostMatrix C = squared_l2_cost(X * best_W.transpose(), best_U.points);
  model.dual_g = solve_discrete_ot(C).duals.g;
  return model;
}

Vector sim_predict(const SimModel& model, const Vector& x) {
  if (x.size() != model.W.cols()) {
    throw std::invalid_argument("sim_predict: covariate dimension mismatch");
  }
  return laguerre_assign(model.quantiles, model.dual_g, model.W * x).u;
}

Matrix sim_predict_rows(const SimModel& model, const Matrix& X) {
  Matrix out(X.rows(), model.W.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.row(i) = sim_predict(model, X.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace brenier
